#include "aero/transform_pair.hpp"

#include <cmath>
#include <stdexcept>

namespace aero::dsp {

OverlapRatio parse_overlap_ratio(const std::string& text) {
  if (text == "1/2" || text == "0.5") return OverlapRatio::half;
  if (text == "1/4" || text == "0.25") return OverlapRatio::quarter;
  if (text == "1/8" || text == "0.125") return OverlapRatio::eighth;
  throw std::invalid_argument("overlap ratio must be one of 1/2, 1/4, 1/8 (got '" + text + "')");
}

std::string to_string(OverlapRatio r) { return "1/" + std::to_string(overlap_denominator(r)); }

SpectroTransformSpec make_transform_pair(int scale, int fft_size, OverlapRatio overlap) {
  if (scale < 1) throw std::invalid_argument("scale must be >= 1");
  if (fft_size < 2 || fft_size % 2 != 0) throw std::invalid_argument("fft size must be even");
  const int k = overlap_denominator(overlap);
  const double low_win = static_cast<double>(fft_size) / scale;
  const int analysis_win = static_cast<int>(std::floor(low_win / 2.0)) * 2;
  if (analysis_win < 2) {
    throw std::invalid_argument("analysis window f/s = " + std::to_string(low_win) +
                                " rounds below 2 samples");
  }
  const int analysis_hop = static_cast<int>(std::lround(static_cast<double>(fft_size) / k / scale));
  const int synthesis_hop = static_cast<int>(std::lround(static_cast<double>(fft_size) / k));
  if (analysis_hop < 1) throw std::invalid_argument("analysis hop rounds below 1 sample");

  SpectroTransformSpec spec;
  spec.scale = scale;
  spec.fft_size = fft_size;
  spec.overlap = overlap;
  spec.analysis = {fft_size, analysis_win, analysis_hop, WindowKind::hann, true};
  spec.synthesis = {fft_size, fft_size, synthesis_hop, WindowKind::hann, true};
  validate(spec.analysis);
  validate(spec.synthesis);
  return spec;
}

}  // namespace aero::dsp
