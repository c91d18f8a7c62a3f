#pragma once

#include "aero/wave.hpp"

namespace aero::dsp {

/// Windowed-sinc polyphase resampler parameters.
struct SincResampleOptions {
  int zero_crossings = 32;      ///< half width in input samples, 64 taps per phase
  double kaiser_beta = 6.0;
  double cutoff_ratio = 0.97;   ///< passband edge relative to min(Nyquist_in, Nyquist_out)
};

/// Rational-factor resampling to `target_rate`; output length is
/// round(len * target / source). Edges use symmetric reflection, and every
/// polyphase branch is normalised to unit DC gain.
WaveSignal sinc_resample(const WaveSignal& x, int target_rate, const SincResampleOptions& opts = {});

/// Zero-phase Kaiser-windowed FIR low-pass (>= 60 dB stop band). Transition band
/// spans [0.8, 1.2] x cutoff. Throws std::invalid_argument unless 0 < cutoff < Nyquist.
WaveSignal lowpass_filter(const WaveSignal& x, double cutoff_hz);

}  // namespace aero::dsp
