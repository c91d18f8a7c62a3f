#include "aero/resample.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace aero::dsp {

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double kaiser(double t, double beta) {
  if (std::abs(t) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - t * t)) / std::cyl_bessel_i(0.0, beta);
}

// Whole-sample symmetric extension: x[-i] = x[i], x[n-1+i] = x[n-1-i].
double reflected(const std::vector<double>& x, int64_t i) {
  const auto n = static_cast<int64_t>(x.size());
  if (n == 1) return x[0];
  const int64_t period = 2 * (n - 1);
  int64_t j = i % period;
  if (j < 0) j += period;
  if (j >= n) j = period - j;
  return x[static_cast<std::size_t>(j)];
}

}  // namespace

WaveSignal sinc_resample(const WaveSignal& x, int target_rate, const SincResampleOptions& opts) {
  validate(x, "sinc_resample input");
  if (target_rate <= 0) throw std::invalid_argument("sinc_resample: target rate must be positive");
  if (target_rate == x.sample_rate) return x;

  const int64_t g = std::gcd<int64_t>(x.sample_rate, target_rate);
  const int64_t up = target_rate / g;
  const int64_t down = x.sample_rate / g;
  const auto len = static_cast<int64_t>(x.size());
  const int64_t out_len = (len * up + down / 2) / down;

  // Cutoff as a fraction of the input Nyquist rate.
  const double fc = opts.cutoff_ratio * std::min(1.0, static_cast<double>(up) / down);
  const double half_width = opts.zero_crossings * std::max(1.0, static_cast<double>(down) / up);
  const auto taps = static_cast<int64_t>(std::ceil(half_width));

  // One normalised kernel per phase q = (m * down) mod up.
  std::vector<std::vector<double>> table(static_cast<std::size_t>(up));
  for (int64_t q = 0; q < up; ++q) {
    const double frac = static_cast<double>(q) / up;
    auto& h = table[static_cast<std::size_t>(q)];
    h.resize(static_cast<std::size_t>(2 * taps));
    double sum = 0.0;
    for (int64_t k = -taps + 1; k <= taps; ++k) {
      const double t = static_cast<double>(k) - frac;
      const double v = fc * sinc(fc * t) * kaiser(t / half_width, opts.kaiser_beta);
      h[static_cast<std::size_t>(k + taps - 1)] = v;
      sum += v;
    }
    for (double& v : h) v /= sum;
  }

  WaveSignal out;
  out.sample_rate = target_rate;
  out.samples.resize(static_cast<std::size_t>(out_len));
  for (int64_t m = 0; m < out_len; ++m) {
    const int64_t pos = m * down;
    const int64_t n0 = pos / up;
    const auto& h = table[static_cast<std::size_t>(pos % up)];
    double acc = 0.0;
    const int64_t first = n0 - taps + 1;
    if (first >= 0 && n0 + taps < len) {
      const double* src = x.samples.data() + first;
      for (std::size_t k = 0; k < h.size(); ++k) acc += h[k] * src[k];
    } else {
      for (std::size_t k = 0; k < h.size(); ++k) acc += h[k] * reflected(x.samples, first + static_cast<int64_t>(k));
    }
    out.samples[static_cast<std::size_t>(m)] = acc;
  }
  return out;
}

WaveSignal lowpass_filter(const WaveSignal& x, double cutoff_hz) {
  validate(x, "lowpass_filter input");
  const double nyquist = x.sample_rate / 2.0;
  if (!(cutoff_hz > 0.0) || cutoff_hz >= nyquist) {
    throw std::invalid_argument("lowpass_filter: cutoff must lie in (0, " + std::to_string(nyquist) + ") Hz");
  }
  constexpr double attenuation_db = 60.0;
  const double beta = 0.1102 * (attenuation_db - 8.7);
  const double transition = 2.0 * std::numbers::pi * 0.4 * cutoff_hz / x.sample_rate;
  auto n_taps = static_cast<int64_t>(std::ceil((attenuation_db - 8.0) / (2.285 * transition))) + 1;
  if (n_taps % 2 == 0) ++n_taps;
  const int64_t half = n_taps / 2;
  const double fc = cutoff_hz / nyquist;

  std::vector<double> h(static_cast<std::size_t>(n_taps));
  double sum = 0.0;
  for (int64_t k = -half; k <= half; ++k) {
    const double v = fc * sinc(fc * static_cast<double>(k)) * kaiser(static_cast<double>(k) / (half + 1), beta);
    h[static_cast<std::size_t>(k + half)] = v;
    sum += v;
  }
  for (double& v : h) v /= sum;

  const auto len = static_cast<int64_t>(x.size());
  WaveSignal out;
  out.sample_rate = x.sample_rate;
  out.samples.resize(x.size());
  for (int64_t i = 0; i < len; ++i) {
    double acc = 0.0;
    const int64_t first = i - half;
    if (first >= 0 && i + half < len) {
      const double* src = x.samples.data() + first;
      for (std::size_t k = 0; k < h.size(); ++k) acc += h[k] * src[k];
    } else {
      for (std::size_t k = 0; k < h.size(); ++k) acc += h[k] * reflected(x.samples, first + static_cast<int64_t>(k));
    }
    out.samples[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

}  // namespace aero::dsp
