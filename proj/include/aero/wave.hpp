#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace aero::dsp {

/// Mono time-domain audio. Samples are nominally in [-1, 1].
struct WaveSignal {
  std::vector<double> samples;
  int sample_rate = 0;

  std::size_t size() const noexcept { return samples.size(); }
  double duration_seconds() const noexcept {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// Throws std::invalid_argument unless rate > 0, length >= 1 and every sample is finite.
void validate(const WaveSignal& x, const std::string& what = "signal");

/// 1-D float64 tensor copy of the samples.
torch::Tensor to_tensor(const WaveSignal& x, torch::Dtype dtype = torch::kFloat64);
/// Builds a signal from a 1-D tensor (any floating dtype).
WaveSignal from_tensor(const torch::Tensor& t, int sample_rate);

// ---------------------------------------------------------------------------
// RIFF/WAVE
// ---------------------------------------------------------------------------

enum class WavSampleFormat { pcm16, float32 };

struct WavReadResult {
  WaveSignal signal;
  int source_channels = 1;
  bool downmixed = false;
};

/// Reads 16-bit PCM or 32-bit float WAV. Multichannel audio is averaged to mono
/// and a warning is written to stderr.
WavReadResult read_wav_ex(const std::filesystem::path& path);
WaveSignal read_wav(const std::filesystem::path& path);

/// Header-only probe used by manifest scanning.
struct WavInfo {
  int sample_rate = 0;
  int channels = 0;
  std::int64_t frames = 0;
};
WavInfo probe_wav(const std::filesystem::path& path);

/// Writes mono WAV; pcm16 output is clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, const WaveSignal& x,
               WavSampleFormat format = WavSampleFormat::float32);

}  // namespace aero::dsp
