#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace aero::loss {

struct ConvSpec {
  int out_channels;
  int kernel;
  int stride;
  int groups;
};

/// Waveform discriminator stack, applied at `num_discriminators` time scales.
/// Scale i sees the input average-pooled i times by `downsample_factor`.
struct DiscriminatorConfig {
  int num_discriminators = 3;
  int downsample_factor = 2;
  /// Conv stack; the last entry produces the logits (no activation).
  std::vector<ConvSpec> layers = default_layers();
  double leaky_slope = 0.2;

  static std::vector<ConvSpec> default_layers();
  /// Same topology with every channel count divided by `divisor` (groups
  /// adjusted), for desk-scale runs.
  static std::vector<ConvSpec> narrow_layers(int divisor);
};

void validate(const DiscriminatorConfig& cfg);
nlohmann::json to_json(const DiscriminatorConfig& cfg);
DiscriminatorConfig discriminator_config_from_json(const nlohmann::json& j);

struct ScaleOutput {
  torch::Tensor logits;                 ///< [batch, 1, frames]
  std::vector<torch::Tensor> features;  ///< activations of every hidden layer
};

class WaveDiscriminatorImpl : public torch::nn::Module {
 public:
  WaveDiscriminatorImpl(const DiscriminatorConfig& cfg);
  ScaleOutput forward(const torch::Tensor& x);  ///< x: [batch, 1, T]
  void init(at::Generator& gen);

 private:
  double slope_;
  torch::nn::ModuleList convs_;
};
TORCH_MODULE(WaveDiscriminator);

/// Multi-scale discriminator set.
class MultiScaleDiscriminatorImpl : public torch::nn::Module {
 public:
  explicit MultiScaleDiscriminatorImpl(DiscriminatorConfig cfg);

  /// w: [batch, T] or [T]. Throws std::invalid_argument below min_length().
  std::vector<ScaleOutput> forward(const torch::Tensor& w);
  void initialize(uint64_t seed);
  /// Shortest input for which the deepest scale still spans the widest kernel.
  int64_t min_length() const;
  const DiscriminatorConfig& config() const noexcept { return cfg_; }

 private:
  DiscriminatorConfig cfg_;
  torch::nn::ModuleList scales_;
};
TORCH_MODULE(MultiScaleDiscriminator);

}  // namespace aero::loss
