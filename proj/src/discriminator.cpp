#include "aero/discriminator.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <algorithm>
#include <stdexcept>

#include "aero/modules.hpp"

namespace aero::loss {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

std::vector<ConvSpec> DiscriminatorConfig::default_layers() {
  return {{16, 15, 1, 1},   {64, 41, 4, 4},     {256, 41, 4, 16}, {1024, 41, 4, 64},
          {1024, 41, 4, 256}, {1024, 5, 1, 1}, {1, 3, 1, 1}};
}

std::vector<ConvSpec> DiscriminatorConfig::narrow_layers(int divisor) {
  auto layers = default_layers();
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    auto& l = layers[i];
    l.out_channels = std::max(1, l.out_channels / divisor);
    l.groups = std::max(1, l.groups / divisor);
  }
  return layers;
}

void validate(const DiscriminatorConfig& cfg) {
  if (cfg.num_discriminators < 1) throw std::invalid_argument("num_discriminators must be >= 1");
  if (cfg.downsample_factor < 1) throw std::invalid_argument("downsample_factor must be >= 1");
  if (cfg.layers.empty()) throw std::invalid_argument("discriminator needs at least one conv layer");
  int in = 1;
  for (const auto& l : cfg.layers) {
    if (l.out_channels < 1 || l.kernel < 1 || l.stride < 1 || l.groups < 1 || in % l.groups != 0 ||
        l.out_channels % l.groups != 0) {
      throw std::invalid_argument("discriminator conv layer has inconsistent channels/groups");
    }
    in = l.out_channels;
  }
  if (cfg.layers.back().out_channels != 1) throw std::invalid_argument("last discriminator layer must output 1 channel");
}

nlohmann::json to_json(const DiscriminatorConfig& cfg) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : cfg.layers) layers.push_back({l.out_channels, l.kernel, l.stride, l.groups});
  return {{"num_discriminators", cfg.num_discriminators},
          {"downsample_factor", cfg.downsample_factor},
          {"leaky_slope", cfg.leaky_slope},
          {"layers", layers}};
}

DiscriminatorConfig discriminator_config_from_json(const nlohmann::json& j) {
  DiscriminatorConfig cfg;
  if (j.contains("num_discriminators")) j.at("num_discriminators").get_to(cfg.num_discriminators);
  if (j.contains("downsample_factor")) j.at("downsample_factor").get_to(cfg.downsample_factor);
  if (j.contains("leaky_slope")) j.at("leaky_slope").get_to(cfg.leaky_slope);
  if (j.contains("layers")) {
    cfg.layers.clear();
    for (const auto& l : j.at("layers")) {
      cfg.layers.push_back({l.at(0).get<int>(), l.at(1).get<int>(), l.at(2).get<int>(), l.at(3).get<int>()});
    }
  }
  return cfg;
}

WaveDiscriminatorImpl::WaveDiscriminatorImpl(const DiscriminatorConfig& cfg) : slope_(cfg.leaky_slope) {
  convs_ = register_module("convs", nn::ModuleList());
  int in = 1;
  for (const auto& l : cfg.layers) {
    convs_->push_back(nn::Conv1d(
        nn::Conv1dOptions(in, l.out_channels, l.kernel).stride(l.stride).groups(l.groups).padding(l.kernel / 2)));
    in = l.out_channels;
  }
}

ScaleOutput WaveDiscriminatorImpl::forward(const torch::Tensor& x) {
  ScaleOutput out;
  auto h = x;
  const std::size_t n = convs_->size();
  for (std::size_t i = 0; i < n; ++i) {
    h = convs_[i]->as<nn::Conv1dImpl>()->forward(h);
    if (i + 1 < n) {
      h = F::leaky_relu(h, F::LeakyReLUFuncOptions().negative_slope(slope_));
      out.features.push_back(h);
    }
  }
  out.logits = h;
  return out;
}

void WaveDiscriminatorImpl::init(at::Generator& gen) {
  for (auto& m : *convs_) {
    auto* conv = m->as<nn::Conv1dImpl>();
    model::init_fan_in(conv->weight, &conv->bias, conv->weight.size(1) * conv->weight.size(2), gen);
  }
}

MultiScaleDiscriminatorImpl::MultiScaleDiscriminatorImpl(DiscriminatorConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  scales_ = register_module("scales", nn::ModuleList());
  for (int i = 0; i < cfg_.num_discriminators; ++i) scales_->push_back(WaveDiscriminator(cfg_));
}

int64_t MultiScaleDiscriminatorImpl::min_length() const {
  int widest = 1;
  for (const auto& l : cfg_.layers) widest = std::max(widest, l.kernel);
  int64_t len = widest;
  for (int i = 1; i < cfg_.num_discriminators; ++i) len *= cfg_.downsample_factor;
  return len;
}

std::vector<ScaleOutput> MultiScaleDiscriminatorImpl::forward(const torch::Tensor& w) {
  if (w.size(-1) < min_length()) {
    throw std::invalid_argument("discriminator input of " + std::to_string(w.size(-1)) +
                                " samples is shorter than the minimum " + std::to_string(min_length()));
  }
  auto h = w.dim() == 1 ? w.view({1, 1, -1}) : w.reshape({-1, 1, w.size(-1)});
  const int k = cfg_.downsample_factor;
  std::vector<ScaleOutput> out;
  for (std::size_t i = 0; i < scales_->size(); ++i) {
    if (i > 0 && k > 1) {
      h = F::avg_pool1d(h, F::AvgPool1dFuncOptions(2 * k).stride(k).padding(k / 2).count_include_pad(false));
    }
    out.push_back(scales_[i]->as<WaveDiscriminatorImpl>()->forward(h));
  }
  return out;
}

void MultiScaleDiscriminatorImpl::initialize(uint64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  for (auto& m : *scales_) m->as<WaveDiscriminatorImpl>()->init(gen);
}

}  // namespace aero::loss
