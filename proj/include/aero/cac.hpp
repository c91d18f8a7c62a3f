#pragma once

#include <torch/torch.h>

#include "aero/stft.hpp"

namespace aero::dsp {

/// Complex-as-channels packing: real [2, bins, frames] with channel 0 = real part
/// and channel 1 = imaginary part.
struct CacArray {
  torch::Tensor values;

  int64_t channels() const { return values.size(0); }
  int64_t bins() const { return values.size(1); }
  int64_t frames() const { return values.size(2); }
};

/// Drops the Nyquist row when `drop_nyquist` (B = f/2 + 1 rows become f/2).
CacArray to_cac(const ComplexSpectrogram& s, bool drop_nyquist);
/// Inverse of to_cac; `drop_nyquist` re-appends a zero Nyquist row.
ComplexSpectrogram to_complex(const CacArray& c, bool drop_nyquist, int source_rate);

// Batched tensor forms used inside the training graph:
// [..., bins, frames] complex <-> [..., 2, bins', frames] real.
torch::Tensor complex_to_cac(const torch::Tensor& spec, bool drop_nyquist);
torch::Tensor cac_to_complex(const torch::Tensor& cac, bool drop_nyquist);

}  // namespace aero::dsp
