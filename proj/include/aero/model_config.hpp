#pragma once

#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace aero::model {

enum class ActivationKind { snake, gelu, relu };

ActivationKind parse_activation(const std::string& name);
std::string to_string(ActivationKind a);

struct ModelConfig {
  int in_channels = 2;
  int base_channels = 48;
  int channel_growth = 2;
  std::vector<int> freq_strides{4, 4, 2, 2};
  int kernel_size = 8;
  int residual_branches_per_layer = 2;
  int branch_compress_factor = 4;
  /// 1-based encoder layers whose residual branches carry LSTM + attention.
  std::set<int> inner_layers_with_sequence_modules{3, 4};
  int lstm_layers = 2;
  int attention_heads = 4;
  int attention_window = 100;
  bool use_ftb = true;
  int ftb_attention_channels = 5;
  int ftb_attention_kernel = 9;
  ActivationKind activation = ActivationKind::snake;
  double snake_alpha_init = 1.0;
  /// Frequency rows seen by the network (Nyquist row dropped), B'.
  int freq_bins = 256;
  /// Divide the input by its standard deviation and undo it on the output.
  bool normalize_input = true;

  int depth() const noexcept { return static_cast<int>(freq_strides.size()); }
  int total_stride() const noexcept;
  /// Channels after encoder layer `layer` (1-based); layer 0 is the input.
  int channels_at(int layer) const noexcept;
  /// Frequency extent after encoder layer `layer` (1-based).
  int freq_at(int layer) const noexcept;
};

/// Throws std::invalid_argument describing the first violated constraint.
void validate(const ModelConfig& cfg);

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace aero::model
