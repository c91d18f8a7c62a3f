#include "aero/modules.hpp"

#include <cmath>
#include <stdexcept>

namespace aero::model {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

torch::Tensor snake(const torch::Tensor& x, const torch::Tensor& alpha) {
  auto s = torch::sin(alpha * x);
  return x + s * s / (alpha + 1e-9);
}

void init_fan_in(torch::Tensor& weight, torch::Tensor* bias, int64_t fan_in, at::Generator& gen) {
  torch::NoGradGuard guard;
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<int64_t>(fan_in, 1)));
  weight.uniform_(-bound, bound, gen);
  if (bias != nullptr && bias->defined()) bias->uniform_(-bound, bound, gen);
}

namespace {

template <typename ConvLike>
void init_conv(ConvLike& conv, at::Generator& gen) {
  auto& w = conv->weight;
  const int64_t fan_in = w.size(1) * (w.dim() > 2 ? w.size(2) : 1);
  init_fan_in(w, conv->bias.defined() ? &conv->bias : nullptr, fan_in, gen);
}

}  // namespace

// --- Activation -------------------------------------------------------------

ActivationImpl::ActivationImpl(ActivationKind kind_, int channels, double alpha_init)
    : kind(kind_), alpha_init_(alpha_init) {
  if (kind == ActivationKind::snake) {
    alpha = register_parameter("alpha", torch::full({channels}, alpha_init));
  }
}

torch::Tensor ActivationImpl::forward(const torch::Tensor& x) {
  switch (kind) {
    case ActivationKind::gelu: return F::gelu(x);
    case ActivationKind::relu: return torch::relu(x);
    case ActivationKind::snake: {
      std::vector<int64_t> shape(static_cast<std::size_t>(x.dim()), 1);
      shape[1] = alpha.size(0);
      return snake(x, alpha.view(shape));
    }
  }
  return x;
}

void ActivationImpl::init(at::Generator&) {
  if (alpha.defined()) {
    torch::NoGradGuard guard;
    alpha.fill_(alpha_init_);
  }
}

// --- FTB --------------------------------------------------------------------

FtbImpl::FtbImpl(int channels_, int freq_, int attention_channels, int attention_kernel)
    : channels(channels_), freq(freq_) {
  att_compress = register_module("att_compress", nn::Conv1d(nn::Conv1dOptions(channels, attention_channels, 1)));
  att_freq = register_module(
      "att_freq", nn::Conv1d(nn::Conv1dOptions(attention_channels, 1, attention_kernel).padding(attention_kernel / 2)));
  freq_map = register_parameter("freq_map", torch::eye(freq));
  fuse = register_module("fuse", nn::Conv1d(nn::Conv1dOptions(2 * channels, channels, 1).bias(false)));
}

torch::Tensor FtbImpl::forward(const torch::Tensor& x) {
  if (x.size(2) != freq) {
    throw std::invalid_argument("FTB holds a " + std::to_string(freq) + "x" + std::to_string(freq) +
                                " frequency map but received " + std::to_string(x.size(2)) + " frequency rows");
  }
  auto mask = F::softplus(att_freq(torch::relu(att_compress(x))));
  auto attended = x * mask;
  auto mapped = torch::matmul(attended, freq_map.t());
  return fuse(torch::cat({attended, mapped}, 1));
}

void FtbImpl::init(at::Generator& gen) {
  init_conv(att_compress, gen);
  init_conv(att_freq, gen);
  init_conv(fuse, gen);
  torch::NoGradGuard guard;
  freq_map.copy_(torch::eye(freq));
}

// --- Local attention ----------------------------------------------------------

LocalAttentionImpl::LocalAttentionImpl(int channels, int heads_, int window_) : heads(heads_), window(window_) {
  query = register_module("query", nn::Linear(channels, channels));
  key = register_module("key", nn::Linear(channels, channels));
  value = register_module("value", nn::Linear(channels, channels));
  proj = register_module("proj", nn::Linear(channels, channels));
}

torch::Tensor LocalAttentionImpl::forward(const torch::Tensor& x) {
  const int64_t b = x.size(0), n = x.size(1), c = x.size(2);
  const int64_t d = c / heads;
  auto split = [&](const torch::Tensor& t) { return t.view({b, n, heads, d}).transpose(1, 2); };
  auto q = split(query(x));
  auto k = split(key(x));
  auto v = split(value(x));
  auto scores = torch::matmul(q, k.transpose(-2, -1)) / std::sqrt(static_cast<double>(d));
  auto idx = torch::arange(n, torch::TensorOptions().device(x.device()));
  auto far = (idx.unsqueeze(0) - idx.unsqueeze(1)).abs() > window / 2;
  scores = scores.masked_fill(far, -std::numeric_limits<float>::infinity());
  auto out = torch::matmul(torch::softmax(scores, -1), v).transpose(1, 2).reshape({b, n, c});
  return x + proj(out);
}

void LocalAttentionImpl::init(at::Generator& gen) {
  for (auto* l : {&query, &key, &value, &proj}) init_fan_in((*l)->weight, &(*l)->bias, (*l)->weight.size(1), gen);
}

// --- Sequence block -------------------------------------------------------------

SequenceBlockImpl::SequenceBlockImpl(int channels_, int lstm_layers, int heads, int window) : channels(channels_) {
  lstm = register_module(
      "lstm", nn::LSTM(nn::LSTMOptions(channels, channels).num_layers(lstm_layers).bidirectional(true).batch_first(true)));
  lstm_proj = register_module("lstm_proj", nn::Linear(2 * channels, channels));
  attention = register_module("attention", LocalAttention(channels, heads, window));
}

torch::Tensor SequenceBlockImpl::forward(const torch::Tensor& x, int64_t batch, int64_t frames) {
  const int64_t f = x.size(2);
  auto h = x.view({batch, frames, channels, f}).permute({0, 3, 1, 2}).reshape({batch * f, frames, channels});
  auto lstm_out = std::get<0>(lstm->forward(h));
  h = h + lstm_proj(lstm_out);
  h = attention(h);
  return h.view({batch, f, frames, channels}).permute({0, 2, 3, 1}).reshape({batch * frames, channels, f});
}

void SequenceBlockImpl::init(at::Generator& gen) {
  torch::NoGradGuard guard;
  const double bound = 1.0 / std::sqrt(static_cast<double>(channels));
  for (auto& p : lstm->named_parameters()) {
    auto t = p.value();
    t.uniform_(-bound, bound, gen);
    // Gate order is (input, forget, cell, output); forget bias totals 1.0.
    if (p.key().rfind("bias_ih", 0) == 0) t.narrow(0, channels, channels).fill_(1.0);
    if (p.key().rfind("bias_hh", 0) == 0) t.narrow(0, channels, channels).zero_();
  }
  init_fan_in(lstm_proj->weight, &lstm_proj->bias, lstm_proj->weight.size(1), gen);
  attention->init(gen);
}

// --- Residual branch ----------------------------------------------------------

ResidualBranchImpl::ResidualBranchImpl(const ModelConfig& cfg, int channels, int dilation, bool with_sequence) {
  const int hidden = channels / cfg.branch_compress_factor;
  compress = register_module("compress", nn::Conv1d(nn::Conv1dOptions(channels, hidden, 1)));
  dilated = register_module("dilated",
                            nn::Conv1d(nn::Conv1dOptions(hidden, hidden, 3).dilation(dilation).padding(dilation)));
  act = register_module("act", Activation(cfg.activation, hidden, cfg.snake_alpha_init));
  if (with_sequence) {
    sequence = register_module(
        "sequence", SequenceBlock(hidden, cfg.lstm_layers, cfg.attention_heads, cfg.attention_window));
  }
  expand = register_module("expand", nn::Conv1d(nn::Conv1dOptions(hidden, 2 * channels, 1)));
  layer_scale = register_parameter("layer_scale", torch::full({channels}, 1e-3));
}

torch::Tensor ResidualBranchImpl::forward(const torch::Tensor& x, int64_t batch, int64_t frames) {
  auto h = act(dilated(compress(x)));
  if (sequence) h = sequence->forward(h, batch, frames);
  h = F::glu(expand(h), 1);
  return x + layer_scale.view({1, -1, 1}) * h;
}

void ResidualBranchImpl::init(at::Generator& gen) {
  init_conv(compress, gen);
  init_conv(dilated, gen);
  act->init(gen);
  if (sequence) sequence->init(gen);
  init_conv(expand, gen);
  torch::NoGradGuard guard;
  layer_scale.fill_(1e-3);
}

// --- Encoder / decoder layers ----------------------------------------------------

EncoderLayerImpl::EncoderLayerImpl(const ModelConfig& cfg, int layer)
    : stride(cfg.freq_strides[static_cast<std::size_t>(layer - 1)]), kernel(cfg.kernel_size) {
  const int c_in = cfg.channels_at(layer - 1);
  const int c = cfg.channels_at(layer);
  if (cfg.use_ftb) {
    ftb = register_module("ftb", Ftb(c_in, cfg.freq_at(layer - 1), cfg.ftb_attention_channels, cfg.ftb_attention_kernel));
  }
  conv = register_module("conv", nn::Conv1d(nn::Conv1dOptions(c_in, c, kernel).stride(stride)));
  act = register_module("act", Activation(cfg.activation, c, cfg.snake_alpha_init));
  const bool inner = cfg.inner_layers_with_sequence_modules.count(layer) > 0;
  branches = register_module("branches", nn::ModuleList());
  for (int i = 0; i < cfg.residual_branches_per_layer; ++i) {
    branches->push_back(ResidualBranch(cfg, c, 1 << i, inner));
  }
  rewrite = register_module("rewrite", nn::Conv1d(nn::Conv1dOptions(c, 2 * c, 1)));
}

torch::Tensor EncoderLayerImpl::forward(const torch::Tensor& x, int64_t batch, int64_t frames) {
  auto h = ftb ? ftb(x) : x;
  const int64_t left = (kernel - stride) / 2;
  h = act(conv(torch::constant_pad_nd(h, {left, kernel - stride - left})));
  for (auto& m : *branches) h = m->as<ResidualBranchImpl>()->forward(h, batch, frames);
  return F::glu(rewrite(h), 1);
}

void EncoderLayerImpl::init(at::Generator& gen) {
  if (ftb) ftb->init(gen);
  init_conv(conv, gen);
  act->init(gen);
  for (auto& m : *branches) m->as<ResidualBranchImpl>()->init(gen);
  init_conv(rewrite, gen);
}

DecoderLayerImpl::DecoderLayerImpl(const ModelConfig& cfg, int layer)
    : stride(cfg.freq_strides[static_cast<std::size_t>(layer - 1)]), kernel(cfg.kernel_size), last(layer == 1) {
  const int c = cfg.channels_at(layer);
  const int c_out = cfg.channels_at(layer - 1);
  rewrite = register_module("rewrite", nn::Conv1d(nn::Conv1dOptions(2 * c, 2 * c, 1)));
  conv = register_module("conv", nn::ConvTranspose1d(nn::ConvTranspose1dOptions(c, c_out, kernel).stride(stride)));
  if (!last) act = register_module("act", Activation(cfg.activation, c_out, cfg.snake_alpha_init));
}

torch::Tensor DecoderLayerImpl::forward(const torch::Tensor& x, const torch::Tensor& skip) {
  auto h = F::glu(rewrite(torch::cat({x, skip}, 1)), 1);
  const int64_t f_out = h.size(2) * stride;
  h = conv(h).narrow(2, (kernel - stride) / 2, f_out);
  return last ? h : act(h);
}

void DecoderLayerImpl::init(at::Generator& gen) {
  init_conv(rewrite, gen);
  init_conv(conv, gen);
  if (act) act->init(gen);
}

}  // namespace aero::model
