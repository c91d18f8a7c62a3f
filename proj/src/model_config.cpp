#include "aero/model_config.hpp"

#include <numeric>
#include <stdexcept>

namespace aero::model {

ActivationKind parse_activation(const std::string& name) {
  if (name == "snake") return ActivationKind::snake;
  if (name == "gelu") return ActivationKind::gelu;
  if (name == "relu") return ActivationKind::relu;
  throw std::invalid_argument("unknown activation '" + name + "' (snake, gelu, relu)");
}

std::string to_string(ActivationKind a) {
  switch (a) {
    case ActivationKind::snake: return "snake";
    case ActivationKind::gelu: return "gelu";
    case ActivationKind::relu: return "relu";
  }
  return "?";
}

int ModelConfig::total_stride() const noexcept {
  return std::accumulate(freq_strides.begin(), freq_strides.end(), 1, std::multiplies<>());
}

int ModelConfig::channels_at(int layer) const noexcept {
  if (layer <= 0) return in_channels;
  int c = base_channels;
  for (int l = 1; l < layer; ++l) c *= channel_growth;
  return c;
}

int ModelConfig::freq_at(int layer) const noexcept {
  int f = freq_bins;
  for (int l = 0; l < layer && l < depth(); ++l) f /= freq_strides[static_cast<std::size_t>(l)];
  return f;
}

void validate(const ModelConfig& cfg) {
  auto fail = [](const std::string& m) { throw std::invalid_argument("model config: " + m); };
  if (cfg.in_channels != 2) fail("in_channels must be 2 (real, imaginary)");
  if (cfg.base_channels < 1 || cfg.channel_growth < 1) fail("channel counts must be positive");
  if (cfg.freq_strides.empty()) fail("freq_strides must not be empty");
  for (int s : cfg.freq_strides) {
    if (s < 1) fail("strides must be positive");
    if (cfg.kernel_size < s) fail("kernel_size must be >= every stride");
  }
  if (cfg.total_stride() != 64) {
    fail("product of freq_strides must be 64 (got " + std::to_string(cfg.total_stride()) + ")");
  }
  if (cfg.freq_bins < 1 || cfg.freq_bins % cfg.total_stride() != 0) {
    fail("freq_bins " + std::to_string(cfg.freq_bins) + " is not divisible by the downsampling product " +
         std::to_string(cfg.total_stride()) + "; drop the Nyquist row so the network sees fft_size/2 rows");
  }
  if (cfg.residual_branches_per_layer < 0) fail("residual_branches_per_layer must be >= 0");
  if (cfg.branch_compress_factor < 1) fail("branch_compress_factor must be >= 1");
  if (cfg.attention_heads < 1 || cfg.attention_window < 1) fail("attention heads/window must be positive");
  if (cfg.lstm_layers < 1) fail("lstm_layers must be >= 1");
  if (cfg.snake_alpha_init <= 0.0) fail("snake_alpha_init must be positive");
  if (cfg.ftb_attention_channels < 1 || cfg.ftb_attention_kernel < 1 || cfg.ftb_attention_kernel % 2 == 0) {
    fail("ftb attention channels must be positive and kernel odd");
  }
  for (int layer = 1; layer <= cfg.depth(); ++layer) {
    const int c = cfg.channels_at(layer);
    if (c % cfg.branch_compress_factor != 0) {
      fail("layer " + std::to_string(layer) + " channels not divisible by branch_compress_factor");
    }
    if (cfg.inner_layers_with_sequence_modules.count(layer) &&
        (c / cfg.branch_compress_factor) % cfg.attention_heads != 0) {
      fail("layer " + std::to_string(layer) + " branch channels not divisible by attention_heads");
    }
  }
  for (int l : cfg.inner_layers_with_sequence_modules) {
    if (l < 1 || l > cfg.depth()) fail("inner layer index out of range");
  }
}

nlohmann::json to_json(const ModelConfig& cfg) {
  return {{"in_channels", cfg.in_channels},
          {"base_channels", cfg.base_channels},
          {"channel_growth", cfg.channel_growth},
          {"freq_strides", cfg.freq_strides},
          {"kernel_size", cfg.kernel_size},
          {"residual_branches_per_layer", cfg.residual_branches_per_layer},
          {"branch_compress_factor", cfg.branch_compress_factor},
          {"inner_layers_with_sequence_modules", cfg.inner_layers_with_sequence_modules},
          {"lstm_layers", cfg.lstm_layers},
          {"attention_heads", cfg.attention_heads},
          {"attention_window", cfg.attention_window},
          {"use_ftb", cfg.use_ftb},
          {"ftb_attention_channels", cfg.ftb_attention_channels},
          {"ftb_attention_kernel", cfg.ftb_attention_kernel},
          {"activation", to_string(cfg.activation)},
          {"snake_alpha_init", cfg.snake_alpha_init},
          {"freq_bins", cfg.freq_bins},
          {"normalize_input", cfg.normalize_input}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("in_channels", cfg.in_channels);
  get("base_channels", cfg.base_channels);
  get("channel_growth", cfg.channel_growth);
  get("freq_strides", cfg.freq_strides);
  get("kernel_size", cfg.kernel_size);
  get("residual_branches_per_layer", cfg.residual_branches_per_layer);
  get("branch_compress_factor", cfg.branch_compress_factor);
  get("inner_layers_with_sequence_modules", cfg.inner_layers_with_sequence_modules);
  get("lstm_layers", cfg.lstm_layers);
  get("attention_heads", cfg.attention_heads);
  get("attention_window", cfg.attention_window);
  get("use_ftb", cfg.use_ftb);
  get("ftb_attention_channels", cfg.ftb_attention_channels);
  get("ftb_attention_kernel", cfg.ftb_attention_kernel);
  if (j.contains("activation")) cfg.activation = parse_activation(j.at("activation").get<std::string>());
  get("snake_alpha_init", cfg.snake_alpha_init);
  get("freq_bins", cfg.freq_bins);
  get("normalize_input", cfg.normalize_input);
  return cfg;
}

}  // namespace aero::model
