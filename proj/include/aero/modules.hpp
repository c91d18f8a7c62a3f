#pragma once

#include <cstdint>

#include <ATen/core/Generator.h>
#include <torch/torch.h>

#include "aero/model_config.hpp"

// Building blocks of the generator. Feature maps travel in "frame-folded" layout
// [batch * frames, channels, freq]: every frequency convolution sees one frame at
// a time. Modules that model time (LSTM, attention) receive batch and frame
// counts explicitly and unfold.

namespace aero::model {

/// x + sin^2(alpha x) / alpha, alpha broadcast against x.
torch::Tensor snake(const torch::Tensor& x, const torch::Tensor& alpha);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for a weight and its bias.
void init_fan_in(torch::Tensor& weight, torch::Tensor* bias, int64_t fan_in, at::Generator& gen);

class ActivationImpl : public torch::nn::Module {
 public:
  ActivationImpl(ActivationKind kind, int channels, double alpha_init);
  torch::Tensor forward(const torch::Tensor& x);
  void init(at::Generator& gen);

  ActivationKind kind;
  torch::Tensor alpha;  ///< per-channel, snake only

 private:
  double alpha_init_;
};
TORCH_MODULE(Activation);

/// Frequency transformation block: a per-frame frequency attention mask
/// (softplus, so in [0, inf)) scales the input, a learned F x F matrix maps
/// frequencies onto frequencies, and a bias-free 1x1 conv fuses both paths.
class FtbImpl : public torch::nn::Module {
 public:
  FtbImpl(int channels, int freq, int attention_channels, int attention_kernel);
  torch::Tensor forward(const torch::Tensor& x);
  void init(at::Generator& gen);

  int channels;
  int freq;
  torch::nn::Conv1d att_compress{nullptr};
  torch::nn::Conv1d att_freq{nullptr};
  torch::Tensor freq_map;  ///< [freq, freq], row = output frequency
  torch::nn::Conv1d fuse{nullptr};
};
TORCH_MODULE(Ftb);

/// Multi-head dot-product self-attention over frames, each frame attending only
/// to frames within +-window/2. Residual output.
class LocalAttentionImpl : public torch::nn::Module {
 public:
  LocalAttentionImpl(int channels, int heads, int window);
  /// x: [batch, frames, channels]
  torch::Tensor forward(const torch::Tensor& x);
  void init(at::Generator& gen);

  int heads;
  int window;
  torch::nn::Linear query{nullptr}, key{nullptr}, value{nullptr}, proj{nullptr};
};
TORCH_MODULE(LocalAttention);

/// Bidirectional LSTM over frames (frequency folded into batch) followed by
/// local attention; both residual.
class SequenceBlockImpl : public torch::nn::Module {
 public:
  SequenceBlockImpl(int channels, int lstm_layers, int heads, int window);
  torch::Tensor forward(const torch::Tensor& x, int64_t batch, int64_t frames);
  void init(at::Generator& gen);

  int channels;
  torch::nn::LSTM lstm{nullptr};
  torch::nn::Linear lstm_proj{nullptr};
  LocalAttention attention{nullptr};
};
TORCH_MODULE(SequenceBlock);

/// Compressed residual branch: 1x1 C->C/k, dilated frequency conv, activation,
/// optional sequence block, 1x1 C/k->2C, GLU, residual add with a learnable
/// per-channel scale (initialised to 1e-3).
class ResidualBranchImpl : public torch::nn::Module {
 public:
  ResidualBranchImpl(const ModelConfig& cfg, int channels, int dilation, bool with_sequence);
  torch::Tensor forward(const torch::Tensor& x, int64_t batch, int64_t frames);
  void init(at::Generator& gen);

  torch::nn::Conv1d compress{nullptr};
  torch::nn::Conv1d dilated{nullptr};
  Activation act{nullptr};
  SequenceBlock sequence{nullptr};
  torch::nn::Conv1d expand{nullptr};
  torch::Tensor layer_scale;
};
TORCH_MODULE(ResidualBranch);

/// FTB -> strided frequency conv -> activation -> residual branches -> 1x1 + GLU.
class EncoderLayerImpl : public torch::nn::Module {
 public:
  EncoderLayerImpl(const ModelConfig& cfg, int layer);
  torch::Tensor forward(const torch::Tensor& x, int64_t batch, int64_t frames);
  void init(at::Generator& gen);

  int stride;
  int kernel;
  Ftb ftb{nullptr};
  torch::nn::Conv1d conv{nullptr};
  Activation act{nullptr};
  torch::nn::ModuleList branches;
  torch::nn::Conv1d rewrite{nullptr};
};
TORCH_MODULE(EncoderLayer);

/// 1x1 + GLU on [input ++ skip] -> transposed frequency conv -> activation
/// (omitted on the output layer).
class DecoderLayerImpl : public torch::nn::Module {
 public:
  DecoderLayerImpl(const ModelConfig& cfg, int layer);
  torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& skip);
  void init(at::Generator& gen);

  int stride;
  int kernel;
  bool last;
  torch::nn::Conv1d rewrite{nullptr};
  torch::nn::ConvTranspose1d conv{nullptr};
  Activation act{nullptr};
};
TORCH_MODULE(DecoderLayer);

}  // namespace aero::model
