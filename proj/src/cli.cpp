#include "aero/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include <CLI11.hpp>

#include "aero/container.hpp"
#include "aero/data.hpp"
#include "aero/evaluator.hpp"
#include "aero/model_io.hpp"
#include "aero/mushra_export.hpp"
#include "aero/resample.hpp"
#include "aero/train_config.hpp"
#include "aero/trainer.hpp"

#ifndef AERO_PRESET_DIR
#define AERO_PRESET_DIR "configs"
#endif

namespace aero::cli {

namespace fs = std::filesystem;

std::string preset_dir() {
  if (const char* env = std::getenv("AERO_PRESET_DIR")) return env;
  return AERO_PRESET_DIR;
}

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs `fn`, prefixing runtime failures with the stage name.
template <class F>
auto stage(const std::string& name, F&& fn) {
  try {
    return fn();
  } catch (const train::ConfigError&) {
    throw;
  } catch (const UsageError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name + ": " + e.what());
  }
}

fs::path resolve_config(const std::string& name) {
  if (fs::is_regular_file(name)) return name;
  for (const auto& candidate : {fs::path(preset_dir()) / name, fs::path(preset_dir()) / (name + ".ini")}) {
    if (fs::is_regular_file(candidate)) return candidate;
  }
  std::string presets;
  if (fs::is_directory(preset_dir())) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(preset_dir())) {
      if (e.path().extension() == ".ini") names.push_back(e.path().stem().string());
    }
    std::sort(names.begin(), names.end());
    for (const auto& n : names) presets += " " + n;
  }
  throw UsageError("config '" + name + "' is neither a file nor a preset (presets:" + presets + ")");
}

struct ConfigArgs {
  std::string config;
  std::vector<std::string> sets;
};

void add_config_flags(CLI::App* sub, ConfigArgs& a) {
  sub->add_option("-c,--config", a.config, "Config file or preset name (e.g. 8-16_r1-4)");
  sub->add_option("--set", a.sets, "Override a config key: section.key=value (repeatable)");
}

train::TrainConfig load_config(const ConfigArgs& a, std::optional<uint64_t> seed) {
  train::KeyValues kv;
  if (!a.config.empty()) kv = train::parse_ini_file(resolve_config(a.config));
  for (const auto& s : a.sets) train::apply_override(kv, s);
  if (seed) kv["train.seed"] = std::to_string(*seed);
  return train::train_config_from_keys(kv);
}

struct LoadedModel {
  model::ParameterSet params;
  train::TrainConfig config;
};

LoadedModel load_model(const std::string& path, const ConfigArgs& a, std::optional<uint64_t> seed) {
  LoadedModel m;
  const auto box = stage("loading model", [&] { return io::read_container(path); });
  const bool is_checkpoint = box.meta.value("format", std::string()) == train::kCheckpointFormat;
  if (is_checkpoint && a.config.empty() && a.sets.empty()) {
    m.config = stage("loading model", [&] { return train::load_checkpoint(path).config; });
  } else {
    if (!is_checkpoint && a.config.empty()) {
      throw UsageError("--config is required with a bare parameter file (it defines the transform)");
    }
    m.config = load_config(a, seed);
  }
  m.params = stage("loading model", [&] { return model::load_parameters(path); });
  if (m.params.config.freq_bins != m.config.fft_size / 2) {
    throw StageError("loading model: model expects " + std::to_string(m.params.config.freq_bins) +
                     " frequency rows but the config's fft_size gives " + std::to_string(m.config.fft_size / 2));
  }
  return m;
}

using WaveFn = std::function<dsp::WaveSignal(const dsp::WaveSignal&)>;

/// Applies `fn` to one file, or to every .wav below a directory (mirrored into `out`).
std::size_t map_audio(const fs::path& in, const fs::path& out, const WaveFn& fn, std::ostream& log) {
  std::vector<std::pair<fs::path, fs::path>> jobs;
  if (fs::is_directory(in)) {
    for (const auto& e : fs::recursive_directory_iterator(in)) {
      if (e.is_regular_file() && e.path().extension() == ".wav") {
        jobs.emplace_back(e.path(), out / fs::relative(e.path(), in));
      }
    }
    std::sort(jobs.begin(), jobs.end());
    if (jobs.empty()) throw std::runtime_error("no .wav files under " + in.string());
  } else if (fs::is_regular_file(in)) {
    jobs.emplace_back(in, fs::is_directory(out) ? out / in.filename() : out);
  } else {
    throw std::runtime_error("input not found: " + in.string());
  }
  for (const auto& [src, dst] : jobs) {
    const auto x = stage("reading " + src.string(), [&] { return dsp::read_wav(src); });
    const auto y = stage("processing " + src.string(), [&] { return fn(x); });
    stage("writing " + dst.string(), [&] {
      if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
      dsp::write_wav(dst, y);
      return 0;
    });
    log << src.string() << " -> " << dst.string() << " (" << y.sample_rate << " Hz, " << y.size() << " samples)\n";
  }
  return jobs.size();
}

void apply_seed(std::optional<uint64_t> seed) {
  if (seed) torch::manual_seed(*seed);
}

// ---------------------------------------------------------------------------

struct PrepareArgs {
  std::string input_dir, out_dir, layout = "vctk", pattern = "*.wav";
  int source_rate = 0, target_rate = 0;
  double test_fraction = 0.1;
  ConfigArgs cfg;
};

int run_prepare(const PrepareArgs& a, std::optional<uint64_t> seed, std::ostream& out, std::ostream& err) {
  data::PairSpec pair;
  if (!a.cfg.config.empty() || !a.cfg.sets.empty()) pair = load_config(a.cfg, seed).pair;
  if (a.source_rate > 0) pair.source_rate = a.source_rate;
  if (a.target_rate > 0) pair.target_rate = a.target_rate;
  try {
    data::validate(pair);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path root(a.input_dir), dst(a.out_dir);
  auto scan = stage("scanning", [&] { return data::build_manifest(root, a.pattern); });
  stage("writing manifest", [&] {
    data::write_manifest(dst / "manifest.jsonl", scan.entries);
    return 0;
  });

  data::Split split;
  if (a.layout == "vctk") {
    split = stage("splitting", [&] { return data::split_vctk(scan.entries); });
  } else if (a.layout == "musdb") {
    split = data::split_musdb(scan.entries);
  } else {
    auto entries = scan.entries;
    std::mt19937_64 rng(seed.value_or(0));
    std::shuffle(entries.begin(), entries.end(), rng);
    const auto n_test = std::min(entries.size(), static_cast<std::size_t>(std::ceil(a.test_fraction * entries.size())));
    split.test.assign(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.assign(entries.begin() + static_cast<std::ptrdiff_t>(n_test), entries.end());
    auto by_path = [](const auto& l, const auto& r) { return l.path < r.path; };
    std::sort(split.train.begin(), split.train.end(), by_path);
    std::sort(split.test.begin(), split.test.end(), by_path);
  }
  if (split.train.empty() && split.test.empty()) throw StageError("splitting: no usable files under " + root.string());

  auto convert = [&](const std::vector<data::ManifestEntry>& entries) {
    std::vector<data::PairRecord> pairs;
    for (const auto& e : entries) {
      try {
        auto y = dsp::read_wav(e.path);
        if (y.sample_rate < pair.target_rate) {
          throw std::runtime_error("sample rate " + std::to_string(y.sample_rate) + " is below the target rate");
        }
        if (y.sample_rate != pair.target_rate) y = dsp::sinc_resample(y, pair.target_rate);
        auto [lr, hr] = data::make_lr_hr_pair(y, pair);
        const auto rel = fs::relative(e.path, root);
        const auto lr_path = data::lr_cache_path(dst, pair.source_rate, rel);
        const auto hr_path = dst / ("hr_" + std::to_string(pair.target_rate)) / rel;
        fs::create_directories(lr_path.parent_path());
        fs::create_directories(hr_path.parent_path());
        dsp::write_wav(lr_path, lr);
        dsp::write_wav(hr_path, hr);
        pairs.push_back({fs::absolute(lr_path).string(), fs::absolute(hr_path).string()});
      } catch (const std::exception& ex) {
        err << "warning: prepare: skipping " << e.path << ": " << ex.what() << "\n";
      }
    }
    return pairs;
  };
  const auto train_pairs = stage("building pairs", [&] { return convert(split.train); });
  const auto test_pairs = stage("building pairs", [&] { return convert(split.test); });
  stage("writing pairs", [&] {
    data::write_pairs(dst / "train_pairs.jsonl", train_pairs);
    data::write_pairs(dst / "test_pairs.jsonl", test_pairs);
    return 0;
  });
  out << "manifest: " << scan.entries.size() << " files (" << scan.skipped.size() << " skipped)\n"
      << "train pairs: " << train_pairs.size() << "\ntest pairs: " << test_pairs.size() << "\n"
      << "written to " << dst.string() << "\n";
  return kExitOk;
}

struct TrainArgs {
  ConfigArgs cfg;
  std::string out_dir, pairs, resume;
};

int run_train(const TrainArgs& a, std::optional<uint64_t> seed, std::ostream& out) {
  if (a.cfg.config.empty()) throw UsageError("train needs --config");
  auto cfg = load_config(a.cfg, seed);
  const std::string pairs_path = a.pairs.empty() ? cfg.train_pairs : a.pairs;
  if (pairs_path.empty()) throw UsageError("no training pairs: pass --pairs or set data.train_pairs");
  const auto pairs = stage("loading data", [&] {
    std::vector<data::SignalPair> loaded;
    for (const auto& rec : data::read_pairs(pairs_path)) loaded.push_back(data::load_pair(rec));
    return loaded;
  });
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  std::ofstream(dir / "config.ini") << train::to_ini(cfg);
  std::ofstream log(dir / "log.jsonl", std::ios::app);

  train::FitOptions opts;
  opts.log = &log;
  opts.checkpoint_dir = dir / "checkpoints";
  if (!a.resume.empty()) opts.resume = stage("loading checkpoint", [&] { return train::load_checkpoint(a.resume); });
  opts.on_step = [&out, &cfg](int64_t step, const loss::LossReport& r) {
    if (step % cfg.log_every == 0) out << "step " << step << " total_g " << r.total_g << " total_d " << r.total_d << "\n";
    return true;
  };
  const auto result = stage("training", [&] { return train::fit(cfg, pairs, opts); });
  stage("saving model", [&] {
    model::save_parameters(result.final.generator, dir / "model.params");
    return 0;
  });
  out << "finished at step " << result.final.step << "; parameters in " << (dir / "model.params").string() << "\n";
  return kExitOk;
}

struct UpsampleArgs {
  ConfigArgs cfg;
  std::string in, out, model;
};

int run_upsample(const UpsampleArgs& a, std::optional<uint64_t> seed, std::ostream& out) {
  auto m = load_model(a.model, a.cfg, seed);
  auto net = model::make_generator(m.params);
  const auto spec = m.config.transform();
  map_audio(a.in, a.out,
            [&](const dsp::WaveSignal& x) {
              if (x.sample_rate != m.config.pair.source_rate) {
                throw std::runtime_error("input is " + std::to_string(x.sample_rate) + " Hz but the model expects " +
                                         std::to_string(m.config.pair.source_rate) + " Hz");
              }
              return model::super_resolve(net, x, spec, m.config.upsampling);
            },
            out);
  return kExitOk;
}

struct EvaluateArgs {
  ConfigArgs cfg;
  std::string pairs, model, baseline, metrics = "lsd", visqol_bin = "visqol", visqol_mode = "speech", out_dir;
};

int run_evaluate(const EvaluateArgs& a, std::optional<uint64_t> seed, std::ostream& out) {
  eval::MetricSelection sel;
  try {
    sel = eval::parse_metrics(a.metrics);
    sel.visqol_mode = eval::parse_visqol_mode(a.visqol_mode);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  sel.visqol_binary = a.visqol_bin;
  if (a.model.empty() == a.baseline.empty()) throw UsageError("evaluate needs exactly one of --model or --baseline");

  const auto pairs = stage("loading pairs", [&] { return data::read_pairs(a.pairs); });
  if (pairs.empty()) throw StageError("loading pairs: " + a.pairs + " lists no pairs");

  eval::Upsampler up;
  std::optional<model::AeroGenerator> net;
  dsp::SpectroTransformSpec spec;
  model::UpsamplingMode mode = model::UpsamplingMode::spectral;
  if (!a.model.empty()) {
    auto m = load_model(a.model, a.cfg, seed);
    net = model::make_generator(m.params);
    spec = m.config.transform();
    mode = m.config.upsampling;
    up = [&](const dsp::WaveSignal& x) { return model::super_resolve(*net, x, spec, mode); };
  } else if (a.baseline == "sinc") {
    const int target = stage("loading pairs", [&] { return dsp::probe_wav(pairs.front().hr).sample_rate; });
    up = [target](const dsp::WaveSignal& x) { return dsp::sinc_resample(x, target); };
  } else {
    throw UsageError("unknown baseline '" + a.baseline + "' (expected sinc)");
  }
  const auto result = stage("evaluating", [&] { return eval::evaluate_testset(up, pairs, sel); });
  out << result.to_table();
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    std::ofstream(fs::path(a.out_dir) / "results.csv") << result.to_csv();
    std::ofstream(fs::path(a.out_dir) / "results.txt") << result.to_table();
  }
  return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------------------

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral-domain audio super-resolution", "aero"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::optional<uint64_t> seed;
  auto add_seed = [&seed](CLI::App* sub) { sub->add_option("--seed", seed, "Random seed"); };

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "Scan a corpus, split it and cache low/high-rate pairs");
  prepare->add_option("--input-dir", prep.input_dir, "Corpus root")->required();
  prepare->add_option("--out-dir", prep.out_dir, "Output directory")->required();
  prepare->add_option("--layout", prep.layout, "vctk | musdb | flat")->check(CLI::IsMember({"vctk", "musdb", "flat"}));
  prepare->add_option("--pattern", prep.pattern, "File name glob");
  prepare->add_option("--source-rate", prep.source_rate, "Low rate in Hz");
  prepare->add_option("--target-rate", prep.target_rate, "High rate in Hz");
  prepare->add_option("--test-fraction", prep.test_fraction, "Test share for the flat layout");
  add_config_flags(prepare, prep.cfg);
  add_seed(prepare);

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  add_config_flags(train_cmd, tr.cfg);
  train_cmd->add_option("--out-dir", tr.out_dir, "Run directory")->required();
  train_cmd->add_option("--pairs", tr.pairs, "Pair list (JSON lines); defaults to data.train_pairs");
  train_cmd->add_option("--resume", tr.resume, "Checkpoint to resume from");
  add_seed(train_cmd);

  UpsampleArgs upa;
  auto* upsample = app.add_subcommand("upsample", "Super-resolve a file or directory");
  upsample->add_option("input", upa.in, "Input .wav or directory")->required();
  upsample->add_option("output", upa.out, "Output .wav or directory")->required();
  upsample->add_option("-m,--model", upa.model, "Parameter file or checkpoint")->required();
  add_config_flags(upsample, upa.cfg);
  add_seed(upsample);

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "LSD / ViSQOL over a pair list");
  evaluate->add_option("--pairs", ev.pairs, "Pair list (JSON lines)")->required();
  evaluate->add_option("-m,--model", ev.model, "Parameter file or checkpoint");
  evaluate->add_option("--baseline", ev.baseline, "Evaluate a baseline instead of a model (sinc)");
  evaluate->add_option("--metrics", ev.metrics, "Comma list: lsd,visqol");
  evaluate->add_option("--visqol-bin", ev.visqol_bin, "ViSQOL executable");
  evaluate->add_option("--visqol-mode", ev.visqol_mode, "speech | audio");
  evaluate->add_option("--out-dir", ev.out_dir, "Write results.csv and results.txt here");
  add_config_flags(evaluate, ev.cfg);
  add_seed(evaluate);

  std::string sinc_in, sinc_out;
  int sinc_rate = 0;
  auto* baseline = app.add_subcommand("baseline-sinc", "Sinc-interpolate a file or directory");
  baseline->add_option("input", sinc_in)->required();
  baseline->add_option("output", sinc_out)->required();
  baseline->add_option("--target-rate", sinc_rate, "Output rate in Hz")->required()->check(CLI::PositiveNumber);
  add_seed(baseline);

  std::string anchor_in, anchor_out;
  double cutoff = mushra::kAnchorCutoffHz;
  auto* anchor = app.add_subcommand("anchor", "Low-pass listening-test anchor for a file or directory");
  anchor->add_option("input", anchor_in)->required();
  anchor->add_option("output", anchor_out)->required();
  anchor->add_option("--cutoff", cutoff, "Cutoff in Hz")->check(CLI::PositiveNumber);
  add_seed(anchor);

  std::string plot_in, plot_out;
  eval::SpectrogramImageOptions plot_opts;
  auto* plot = app.add_subcommand("plot-spec", "Render a spectrogram PNG");
  plot->add_option("input", plot_in, "Input .wav")->required();
  plot->add_option("output", plot_out, "Output .png")->required();
  plot->add_option("--fft", plot_opts.fft_size, "FFT size")->check(CLI::PositiveNumber);
  plot->add_option("--hop", plot_opts.hop_length, "Hop length")->check(CLI::PositiveNumber);
  plot->add_option("--range-db", plot_opts.dynamic_range_db, "Dynamic range in dB")->check(CLI::PositiveNumber);
  add_seed(plot);

  mushra::ExportRequest mx;
  std::vector<std::string> mx_systems;
  std::string mx_refs, mx_out, mx_check;
  auto* mexport = app.add_subcommand("mushra-export", "Bundle stimuli and a session manifest for the listening test");
  mexport->add_option("--reference-dir", mx_refs, "Reference .wav directory");
  mexport->add_option("--system", mx_systems, "name=directory (repeatable)");
  mexport->add_option("--out-dir", mx_out, "Bundle directory");
  mexport->add_option("--anchor-cutoff", mx.anchor_cutoff_hz, "Anchor low-pass cutoff in Hz")
      ->check(CLI::PositiveNumber);
  mexport->add_option("--check", mx_check, "Validate an existing session.json instead of exporting");
  add_seed(mexport);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "aero: usage error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  const auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    apply_seed(seed);
    if (name == "prepare") return run_prepare(prep, seed, out, err);
    if (name == "train") return run_train(tr, seed, out);
    if (name == "upsample") return run_upsample(upa, seed, out);
    if (name == "evaluate") return run_evaluate(ev, seed, out);
    if (name == "baseline-sinc") {
      stage("baseline-sinc", [&] {
        return map_audio(sinc_in, sinc_out, [&](const dsp::WaveSignal& x) { return dsp::sinc_resample(x, sinc_rate); },
                         out);
      });
      return kExitOk;
    }
    if (name == "anchor") {
      stage("anchor", [&] {
        return map_audio(anchor_in, anchor_out,
                         [&](const dsp::WaveSignal& x) { return dsp::lowpass_filter(x, cutoff); }, out);
      });
      return kExitOk;
    }
    if (name == "plot-spec") {
      const auto w = stage("reading " + plot_in, [&] { return dsp::read_wav(plot_in); });
      stage("rendering", [&] {
        eval::render_spectrogram_image(w, plot_out, plot_opts);
        return 0;
      });
      out << "wrote " << plot_out << "\n";
      return kExitOk;
    }
    if (name == "mushra-export") {
      if (!mx_check.empty()) {
        const auto errors = stage("checking manifest", [&] {
          std::ifstream in(mx_check);
          if (!in) throw std::runtime_error("cannot read " + mx_check);
          return mushra::validate_session_manifest(nlohmann::json::parse(in), fs::path(mx_check).parent_path());
        });
        for (const auto& e : errors) err << "aero mushra-export: schema: " << e << "\n";
        if (!errors.empty()) return kExitRuntime;
        out << mx_check << ": valid\n";
        return kExitOk;
      }
      if (mx_refs.empty() || mx_out.empty() || mx_systems.empty()) {
        throw UsageError("mushra-export needs --reference-dir, --out-dir and at least one --system name=dir");
      }
      mx.reference_dir = mx_refs;
      mx.out_dir = mx_out;
      for (const auto& s : mx_systems) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--system expects name=directory, got '" + s + "'");
        mx.systems.emplace_back(s.substr(0, eq), s.substr(eq + 1));
      }
      const auto m = stage("exporting", [&] { return mushra::mushra_export(mx); });
      out << "exported " << m.items.size() << " items to " << (fs::path(mx_out) / "session.json").string() << "\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "aero " << name << ": usage error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  } catch (const train::ConfigError& e) {
    err << "aero " << name << ": config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "aero " << name << ": error: " << e.what() << "\n";
    return kExitRuntime;
  }
  err << "aero: unhandled subcommand " << name << "\n";
  return kExitUsage;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace aero::cli
