#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "aero/cac.hpp"
#include "aero/model_config.hpp"
#include "aero/modules.hpp"
#include "aero/transform_pair.hpp"
#include "aero/wave.hpp"

namespace aero::model {

inline constexpr const char* kParameterSetVersion = "aero-params/1";

/// Named learnable arrays plus the config that shapes them.
struct ParameterSet {
  std::string version = kParameterSetVersion;
  ModelConfig config;
  torch::OrderedDict<std::string, torch::Tensor> arrays;
};

/// Frequency-axis U-Net over complex-as-channels spectrograms.
/// Input and output are [batch, 2, freq_bins, frames].
class AeroGeneratorImpl : public torch::nn::Module {
 public:
  explicit AeroGeneratorImpl(ModelConfig cfg);

  torch::Tensor forward(const torch::Tensor& x);
  /// Encoder output (the latent grid) shaped [batch, C_L, F_L, frames].
  torch::Tensor encode(const torch::Tensor& x);

  /// Deterministic re-initialisation from `seed` (no global RNG involved).
  void initialize(uint64_t seed);
  ParameterSet snapshot() const;
  /// Copies values in; unknown names warn, missing names or shape mismatch throw.
  void load(const ParameterSet& params);

  const ModelConfig& config() const noexcept { return cfg_; }

 private:
  torch::Tensor unfold_frames(const torch::Tensor& x) const;

  ModelConfig cfg_;
  torch::nn::ModuleList encoder_;
  torch::nn::ModuleList decoder_;  ///< decoder_[0] mirrors the deepest encoder layer
};
TORCH_MODULE(AeroGenerator);

/// Builds and initialises a generator for `cfg`; identical seeds give identical bytes.
ParameterSet build_model(const ModelConfig& cfg, uint64_t seed);
AeroGenerator make_generator(const ParameterSet& params);

/// Inference-mode forward of a single [2, B', N] array.
dsp::CacArray model_forward(const ParameterSet& params, const dsp::CacArray& x);
dsp::CacArray model_forward(AeroGenerator& net, const dsp::CacArray& x);

/// Any map from [batch, 2, B', N] to the same shape (the generator, or a stub).
using SpectralMapper = std::function<torch::Tensor(const torch::Tensor&)>;

/// Differentiable spectral upsampling of a [batch, T/s] low-rate batch into
/// [batch, out_length]: analysis STFT, Nyquist drop, network, Nyquist re-add,
/// synthesis iSTFT. Frames beyond the synthesis frame count are truncated.
torch::Tensor spectral_upsample(const SpectralMapper& net, const torch::Tensor& lr,
                                const dsp::SpectroTransformSpec& spec, int64_t out_length);

/// Ablation switch: `time` sinc-interpolates the input to the target rate first
/// and runs both transforms with the synthesis configuration.
enum class UpsamplingMode { spectral, time };
UpsamplingMode parse_upsampling_mode(const std::string& name);
std::string to_string(UpsamplingMode m);

/// Time-domain counterpart of spectral_upsample. `lr` carries no gradient.
torch::Tensor time_upsample(const SpectralMapper& net, const torch::Tensor& lr,
                            const dsp::SpectroTransformSpec& spec, int64_t out_length);
torch::Tensor upsample(const SpectralMapper& net, const torch::Tensor& lr, const dsp::SpectroTransformSpec& spec,
                       int64_t out_length, UpsamplingMode mode);

/// Output holds s * len(x) samples at s * rate.
dsp::WaveSignal super_resolve(const SpectralMapper& net, const dsp::WaveSignal& x,
                              const dsp::SpectroTransformSpec& spec,
                              UpsamplingMode mode = UpsamplingMode::spectral);
dsp::WaveSignal super_resolve(AeroGenerator& net, const dsp::WaveSignal& x,
                              const dsp::SpectroTransformSpec& spec,
                              UpsamplingMode mode = UpsamplingMode::spectral);
dsp::WaveSignal super_resolve(const ParameterSet& params, const dsp::WaveSignal& x,
                              const dsp::SpectroTransformSpec& spec,
                              UpsamplingMode mode = UpsamplingMode::spectral);

struct ParameterSummary {
  struct Row {
    std::string name;
    std::vector<int64_t> shape;
    int64_t count = 0;
  };
  std::vector<Row> rows;
  int64_t total = 0;

  std::string to_table() const;
};

ParameterSummary parameter_summary(const ParameterSet& params);

}  // namespace aero::model
