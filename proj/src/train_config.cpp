#include "aero/train_config.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace aero::train {

namespace pt = boost::property_tree;
using nlohmann::json;

dsp::SpectroTransformSpec TrainConfig::transform() const {
  return dsp::make_transform_pair(pair.scale(), fft_size, overlap);
}

void validate(TrainConfig& cfg) {
  if (cfg.total_steps < 0) throw ConfigError("train.total_steps must be >= 0");
  if (cfg.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(cfg.lr_g > 0) || !(cfg.lr_d > 0)) throw ConfigError("learning rates must be positive");
  if (!(cfg.beta1 >= 0 && cfg.beta1 < 1) || !(cfg.beta2 >= 0 && cfg.beta2 < 1)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(cfg.grad_clip > 0)) throw ConfigError("train.grad_clip must be positive");
  if (cfg.log_every < 1 || cfg.ckpt_every < 1 || cfg.d_every < 1) {
    throw ConfigError("log_every, ckpt_every and d_every must be >= 1");
  }
  if (!(cfg.chunk_seconds > 0) || !(cfg.hop_seconds > 0)) throw ConfigError("chunk and hop durations must be positive");
  try {
    loss::validate(cfg.weights);
    loss::validate(cfg.discriminator);
    data::validate(cfg.pair);
    (void)cfg.transform();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  cfg.model.freq_bins = cfg.fft_size / 2;
  try {
    model::validate(cfg.model);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

json to_json(const TrainConfig& c) {
  return {{"total_steps", c.total_steps},
          {"batch_size", c.batch_size},
          {"lr_g", c.lr_g},
          {"lr_d", c.lr_d},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"grad_clip", c.grad_clip},
          {"seed", c.seed},
          {"device", c.device},
          {"log_every", c.log_every},
          {"ckpt_every", c.ckpt_every},
          {"d_every", c.d_every},
          {"lambda_spectral", c.weights.lambda_spectral},
          {"lambda_adv", c.weights.lambda_adv},
          {"lambda_feat", c.weights.lambda_feat},
          {"adversarial", loss::to_string(c.adversarial)},
          {"discriminator", loss::to_json(c.discriminator)},
          {"discriminator_width_divisor", c.discriminator_width_divisor},
          {"source_rate", c.pair.source_rate},
          {"target_rate", c.pair.target_rate},
          {"fft_size", c.fft_size},
          {"overlap", dsp::to_string(c.overlap)},
          {"upsampling", model::to_string(c.upsampling)},
          {"model", model::to_json(c.model)},
          {"chunk_seconds", c.chunk_seconds},
          {"hop_seconds", c.hop_seconds},
          {"train_pairs", c.train_pairs}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  auto get = [&j](const char* key, auto& dst) {
    if (j.contains(key)) j.at(key).get_to(dst);
  };
  get("total_steps", c.total_steps);
  get("batch_size", c.batch_size);
  get("lr_g", c.lr_g);
  get("lr_d", c.lr_d);
  get("beta1", c.beta1);
  get("beta2", c.beta2);
  get("grad_clip", c.grad_clip);
  get("seed", c.seed);
  get("device", c.device);
  get("log_every", c.log_every);
  get("ckpt_every", c.ckpt_every);
  get("d_every", c.d_every);
  get("lambda_spectral", c.weights.lambda_spectral);
  get("lambda_adv", c.weights.lambda_adv);
  get("lambda_feat", c.weights.lambda_feat);
  if (j.contains("adversarial")) c.adversarial = loss::parse_adversarial(j.at("adversarial").get<std::string>());
  if (j.contains("discriminator")) c.discriminator = loss::discriminator_config_from_json(j.at("discriminator"));
  get("discriminator_width_divisor", c.discriminator_width_divisor);
  get("source_rate", c.pair.source_rate);
  get("target_rate", c.pair.target_rate);
  get("fft_size", c.fft_size);
  if (j.contains("overlap")) c.overlap = dsp::parse_overlap_ratio(j.at("overlap").get<std::string>());
  if (j.contains("upsampling")) c.upsampling = model::parse_upsampling_mode(j.at("upsampling").get<std::string>());
  if (j.contains("model")) c.model = model::model_config_from_json(j.at("model"));
  get("chunk_seconds", c.chunk_seconds);
  get("hop_seconds", c.hop_seconds);
  get("train_pairs", c.train_pairs);
  return c;
}

// ---------------------------------------------------------------------------
// INI

namespace {

KeyValues flatten(const pt::ptree& tree) {
  KeyValues kv;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config key '" + section + "' must live under a [section]");
    for (const auto& [key, value] : body) kv[section + "." + key] = boost::trim_copy(value.data());
  }
  return kv;
}

template <class T>
T parse_value(const std::string& key, const std::string& raw) {
  try {
    return boost::lexical_cast<T>(raw);
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + raw + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const auto v = boost::to_lower_copy(raw);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + raw + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& raw) {
  std::vector<std::string> parts;
  boost::split(parts, raw, boost::is_any_of(","));
  std::vector<int> out;
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) out.push_back(parse_value<int>(key, p));
  }
  return out;
}

std::string join_ints(const auto& values) {
  std::string out;
  for (int v : values) out += (out.empty() ? "" : ",") + std::to_string(v);
  return out;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

}  // namespace

KeyValues parse_ini_text(const std::string& text) {
  std::istringstream in(text);
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return flatten(tree);
}

KeyValues parse_ini_file(const std::filesystem::path& path) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return flatten(tree);
}

void apply_override(KeyValues& kv, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  const auto key = boost::trim_copy(assignment.substr(0, eq));
  if (key.find('.') == std::string::npos || key.front() == '.' || key.back() == '.') {
    throw ConfigError("override key '" + key + "' is not of the form section.key");
  }
  kv[key] = boost::trim_copy(assignment.substr(eq + 1));
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys{
      "train.total_steps",          "train.batch_size",
      "train.lr_g",                 "train.lr_d",
      "train.beta1",                "train.beta2",
      "train.grad_clip",            "train.seed",
      "train.device",               "train.log_every",
      "train.ckpt_every",           "train.d_every",
      "loss.lambda_spectral",       "loss.lambda_adv",
      "loss.lambda_feat",           "loss.adversarial",
      "discriminator.count",        "discriminator.downsample_factor",
      "discriminator.width_divisor", "discriminator.leaky_slope",
      "data.source_rate",           "data.target_rate",
      "data.chunk_seconds",         "data.hop_seconds",
      "data.train_pairs",           "transform.fft_size",
      "transform.overlap",          "transform.upsampling",
      "model.base_channels",        "model.channel_growth",
      "model.freq_strides",         "model.kernel_size",
      "model.residual_branches",    "model.branch_compress",
      "model.sequence_layers",      "model.lstm_layers",
      "model.attention_heads",      "model.attention_window",
      "model.use_ftb",              "model.ftb_attention_channels",
      "model.ftb_attention_kernel", "model.activation",
      "model.snake_alpha",          "model.normalize_input"};
  return keys;
}

std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& c : candidates) {
    const auto d = edit_distance(key, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

TrainConfig train_config_from_keys(const KeyValues& kv) {
  const auto& known = known_config_keys();
  for (const auto& [key, value] : kv) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown config key '" + key + "' (did you mean '" + nearest_key(key, known) + "'?)");
    }
  }
  TrainConfig c;
  auto has = [&kv](const char* k) { return kv.count(k) != 0; };
  auto str = [&kv](const char* k) { return kv.at(k); };
  auto set = [&](const char* k, auto& dst) {
    if (has(k)) dst = parse_value<std::decay_t<decltype(dst)>>(k, str(k));
  };
  auto set_bool = [&](const char* k, bool& dst) {
    if (has(k)) dst = parse_bool(k, str(k));
  };
  auto wrap = [](const char* k, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config key '") + k + "': " + e.what());
    }
  };

  set("train.total_steps", c.total_steps);
  set("train.batch_size", c.batch_size);
  set("train.lr_g", c.lr_g);
  set("train.lr_d", c.lr_d);
  set("train.beta1", c.beta1);
  set("train.beta2", c.beta2);
  set("train.grad_clip", c.grad_clip);
  set("train.seed", c.seed);
  if (has("train.device")) c.device = str("train.device");
  set("train.log_every", c.log_every);
  set("train.ckpt_every", c.ckpt_every);
  set("train.d_every", c.d_every);

  set("loss.lambda_spectral", c.weights.lambda_spectral);
  set("loss.lambda_adv", c.weights.lambda_adv);
  set("loss.lambda_feat", c.weights.lambda_feat);
  if (has("loss.adversarial")) {
    wrap("loss.adversarial", [&] { c.adversarial = loss::parse_adversarial(str("loss.adversarial")); });
  }

  set("discriminator.count", c.discriminator.num_discriminators);
  set("discriminator.downsample_factor", c.discriminator.downsample_factor);
  set("discriminator.leaky_slope", c.discriminator.leaky_slope);
  set("discriminator.width_divisor", c.discriminator_width_divisor);
  if (c.discriminator_width_divisor < 1) throw ConfigError("discriminator.width_divisor must be >= 1");
  c.discriminator.layers = loss::DiscriminatorConfig::narrow_layers(c.discriminator_width_divisor);

  set("data.source_rate", c.pair.source_rate);
  set("data.target_rate", c.pair.target_rate);
  set("data.chunk_seconds", c.chunk_seconds);
  set("data.hop_seconds", c.hop_seconds);
  if (has("data.train_pairs")) c.train_pairs = str("data.train_pairs");

  set("transform.fft_size", c.fft_size);
  if (has("transform.overlap")) {
    wrap("transform.overlap", [&] { c.overlap = dsp::parse_overlap_ratio(str("transform.overlap")); });
  }
  if (has("transform.upsampling")) {
    wrap("transform.upsampling", [&] { c.upsampling = model::parse_upsampling_mode(str("transform.upsampling")); });
  }

  auto& m = c.model;
  set("model.base_channels", m.base_channels);
  set("model.channel_growth", m.channel_growth);
  if (has("model.freq_strides")) m.freq_strides = parse_int_list("model.freq_strides", str("model.freq_strides"));
  set("model.kernel_size", m.kernel_size);
  set("model.residual_branches", m.residual_branches_per_layer);
  set("model.branch_compress", m.branch_compress_factor);
  if (has("model.sequence_layers")) {
    const auto layers = parse_int_list("model.sequence_layers", str("model.sequence_layers"));
    m.inner_layers_with_sequence_modules = {layers.begin(), layers.end()};
  }
  set("model.lstm_layers", m.lstm_layers);
  set("model.attention_heads", m.attention_heads);
  set("model.attention_window", m.attention_window);
  set_bool("model.use_ftb", m.use_ftb);
  set("model.ftb_attention_channels", m.ftb_attention_channels);
  set("model.ftb_attention_kernel", m.ftb_attention_kernel);
  if (has("model.activation")) {
    wrap("model.activation", [&] { m.activation = model::parse_activation(str("model.activation")); });
  }
  set("model.snake_alpha", m.snake_alpha_init);
  set_bool("model.normalize_input", m.normalize_input);

  validate(c);
  return c;
}

std::string to_ini(const TrainConfig& c) {
  const auto& m = c.model;
  std::ostringstream os;
  os.precision(17);
  os << "[train]\n"
     << "total_steps = " << c.total_steps << "\nbatch_size = " << c.batch_size << "\nlr_g = " << c.lr_g
     << "\nlr_d = " << c.lr_d << "\nbeta1 = " << c.beta1 << "\nbeta2 = " << c.beta2 << "\ngrad_clip = " << c.grad_clip
     << "\nseed = " << c.seed << "\ndevice = " << c.device << "\nlog_every = " << c.log_every
     << "\nckpt_every = " << c.ckpt_every << "\nd_every = " << c.d_every << "\n\n";
  os << "[loss]\n"
     << "lambda_spectral = " << c.weights.lambda_spectral << "\nlambda_adv = " << c.weights.lambda_adv
     << "\nlambda_feat = " << c.weights.lambda_feat << "\nadversarial = " << loss::to_string(c.adversarial) << "\n\n";
  os << "[discriminator]\n"
     << "count = " << c.discriminator.num_discriminators
     << "\ndownsample_factor = " << c.discriminator.downsample_factor
     << "\nwidth_divisor = " << c.discriminator_width_divisor << "\nleaky_slope = " << c.discriminator.leaky_slope
     << "\n\n";
  os << "[data]\n"
     << "source_rate = " << c.pair.source_rate << "\ntarget_rate = " << c.pair.target_rate
     << "\nchunk_seconds = " << c.chunk_seconds << "\nhop_seconds = " << c.hop_seconds;
  if (!c.train_pairs.empty()) os << "\ntrain_pairs = " << c.train_pairs;
  os << "\n\n";
  os << "[transform]\n"
     << "fft_size = " << c.fft_size << "\noverlap = " << dsp::to_string(c.overlap)
     << "\nupsampling = " << model::to_string(c.upsampling) << "\n\n";
  os << "[model]\n"
     << "base_channels = " << m.base_channels << "\nchannel_growth = " << m.channel_growth
     << "\nfreq_strides = " << join_ints(m.freq_strides) << "\nkernel_size = " << m.kernel_size
     << "\nresidual_branches = " << m.residual_branches_per_layer << "\nbranch_compress = " << m.branch_compress_factor
     << "\nsequence_layers = " << join_ints(m.inner_layers_with_sequence_modules) << "\nlstm_layers = " << m.lstm_layers
     << "\nattention_heads = " << m.attention_heads << "\nattention_window = " << m.attention_window
     << "\nuse_ftb = " << (m.use_ftb ? "true" : "false") << "\nftb_attention_channels = " << m.ftb_attention_channels
     << "\nftb_attention_kernel = " << m.ftb_attention_kernel << "\nactivation = " << model::to_string(m.activation)
     << "\nsnake_alpha = " << m.snake_alpha_init << "\nnormalize_input = " << (m.normalize_input ? "true" : "false")
     << "\n";
  return os.str();
}

}  // namespace aero::train
