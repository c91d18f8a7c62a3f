#pragma once

#include <cstdint>
#include <string>

#include <torch/torch.h>

#include "aero/wave.hpp"

namespace aero::dsp {

enum class WindowKind { hann, rect };

/// One analysis or synthesis configuration. The window of `win_length` samples sits
/// centred inside an `fft_size` buffer (zero padded on both sides).
struct StftConfig {
  int fft_size = 512;
  int win_length = 512;
  int hop_length = 128;
  WindowKind window = WindowKind::hann;
  bool centered = true;

  int bins() const noexcept { return fft_size / 2 + 1; }
  std::string describe() const;
  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

/// Throws std::invalid_argument unless 1 <= hop <= win <= fft and fft is even.
void validate(const StftConfig& cfg);

/// Periodic Hann or rectangular window of cfg.win_length samples.
torch::Tensor make_window(const StftConfig& cfg, torch::Dtype dtype = torch::kFloat64);

/// Frame count produced by stft() for a signal of `length` samples.
/// Centred: floor(length / hop) + 1. Otherwise: floor((length - win) / hop) + 1.
int64_t frame_count(const StftConfig& cfg, int64_t length);

/// Complex spectrogram, `values` is complex128 shaped [bins, frames].
struct ComplexSpectrogram {
  torch::Tensor values;
  int source_rate = 0;

  int64_t bins() const { return values.size(0); }
  int64_t frames() const { return values.size(1); }
};

// Tensor-level transforms. Differentiable (autograd flows through framing,
// FFT and overlap-add) and batched over leading dimensions.

/// x: [..., T] real -> [..., bins, frames] complex.
torch::Tensor stft_tensor(const torch::Tensor& x, const StftConfig& cfg);

/// spec: [..., bins, frames] complex -> [..., out_length] real. Overlap-add with
/// squared-window normalisation; throws std::runtime_error naming the config
/// when the normaliser drops below 1e-8 inside the retained span.
torch::Tensor istft_tensor(const torch::Tensor& spec, const StftConfig& cfg, int64_t out_length);

ComplexSpectrogram stft(const WaveSignal& x, const StftConfig& cfg);
WaveSignal istft(const ComplexSpectrogram& s, const StftConfig& cfg, int64_t out_length,
                 int sample_rate);

}  // namespace aero::dsp
