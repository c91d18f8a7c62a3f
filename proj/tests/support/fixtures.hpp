#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include "aero/wave.hpp"

namespace aero::testing {

inline dsp::WaveSignal sine(double freq, int rate, std::size_t n, double amp = 0.5, double phase = 0.0) {
  dsp::WaveSignal w;
  w.sample_rate = rate;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = amp * std::sin(2 * std::numbers::pi * freq * i / rate + phase);
  return w;
}

inline dsp::WaveSignal noise(int rate, std::size_t n, uint64_t seed, double stddev = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  dsp::WaveSignal w;
  w.sample_rate = rate;
  w.samples.resize(n);
  for (auto& s : w.samples) s = dist(rng);
  return w;
}

/// Voiced-speech stand-in: gliding f0 with harmonics up to Nyquist, a slow
/// amplitude envelope and a short noise burst.
inline dsp::WaveSignal voiced_clip(int rate, std::size_t n, uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  dsp::WaveSignal w;
  w.sample_rate = rate;
  w.samples.assign(n, 0.0);
  const double dur = static_cast<double>(n) / rate;
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double f0 = 140.0 + 40.0 * t / dur;
    phase += 2 * std::numbers::pi * f0 / rate;
    double v = 0.0;
    for (int k = 1; k * f0 < rate / 2.0; ++k) v += std::sin(k * phase) / (1.0 + 0.15 * k);
    const double env = 0.5 + 0.5 * std::sin(std::numbers::pi * t / dur);
    w.samples[i] = 0.08 * env * v;
  }
  const std::size_t b0 = n * 6 / 10, b1 = n * 7 / 10;
  for (std::size_t i = b0; i < b1; ++i) w.samples[i] += 0.05 * gauss(rng);
  return w;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  std::random_device rd;
  auto p = std::filesystem::temp_directory_path() / ("aero_test_" + tag + "_" + std::to_string(rd()));
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace aero::testing
