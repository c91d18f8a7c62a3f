#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aero/data.hpp"
#include "aero/discriminator.hpp"
#include "aero/generator.hpp"
#include "aero/losses.hpp"
#include "aero/transform_pair.hpp"

namespace aero::train {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct TrainConfig {
  int64_t total_steps = 2000;
  int batch_size = 16;
  double lr_g = 3e-4;
  double lr_d = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double grad_clip = 5.0;
  uint64_t seed = 0;
  std::string device = "cpu";
  int64_t log_every = 10;
  int64_t ckpt_every = 500;
  /// Discriminator update period in steps.
  int d_every = 1;

  loss::LossWeights weights;
  loss::AdversarialKind adversarial = loss::AdversarialKind::hinge;
  loss::DiscriminatorConfig discriminator;
  /// Channel divisor applied to the default discriminator stack when read from INI.
  int discriminator_width_divisor = 1;

  data::PairSpec pair{8000, 16000};
  int fft_size = 512;
  dsp::OverlapRatio overlap = dsp::OverlapRatio::quarter;
  model::UpsamplingMode upsampling = model::UpsamplingMode::spectral;
  model::ModelConfig model;

  double chunk_seconds = 0.5;
  double hop_seconds = 0.5;
  std::string train_pairs;

  dsp::SpectroTransformSpec transform() const;
};

/// Checks ranges and forces model.freq_bins = fft_size / 2.
void validate(TrainConfig& cfg);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Flattened "section.key" -> raw value.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_ini_file(const std::filesystem::path& path);
KeyValues parse_ini_text(const std::string& text);
/// Applies "section.key=value"; throws ConfigError for malformed input.
void apply_override(KeyValues& kv, const std::string& assignment);

const std::vector<std::string>& known_config_keys();
/// Closest known key by edit distance.
std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates);

/// Builds a config from defaults plus `kv`; unknown keys throw ConfigError
/// naming the nearest valid key.
TrainConfig train_config_from_keys(const KeyValues& kv);
std::string to_ini(const TrainConfig& cfg);

}  // namespace aero::train
