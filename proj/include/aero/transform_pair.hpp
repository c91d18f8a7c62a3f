#pragma once

#include <string>

#include "aero/stft.hpp"

namespace aero::dsp {

/// Hop/window ratio r of the spectral upsampling transform.
enum class OverlapRatio { half = 2, quarter = 4, eighth = 8 };

inline int overlap_denominator(OverlapRatio r) noexcept { return static_cast<int>(r); }
/// Parses "1/2", "1/4", "1/8" (also "0.5", "0.25", "0.125").
OverlapRatio parse_overlap_ratio(const std::string& text);
std::string to_string(OverlapRatio r);

/// Paired analysis (low rate) and synthesis (high rate) STFT configurations.
/// Both sides use the same FFT size so the spectrogram handed to the network
/// has one fixed shape; the synthesis window and hop are the analysis ones
/// multiplied by the scale.
struct SpectroTransformSpec {
  int scale = 2;
  int fft_size = 512;
  OverlapRatio overlap = OverlapRatio::quarter;
  StftConfig analysis;
  StftConfig synthesis;

  /// Rows handed to the network once the Nyquist row is dropped.
  int network_bins() const noexcept { return fft_size / 2; }
};

/// analysis = {f, round_even(f/s), round(r f / s)}, synthesis = {f, f, round(r f)}.
/// Non-integer f/s rounds the analysis window down to an even length.
SpectroTransformSpec make_transform_pair(int scale, int fft_size, OverlapRatio overlap);

}  // namespace aero::dsp
