#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "aero/data.hpp"
#include "aero/discriminator.hpp"
#include "aero/generator.hpp"
#include "aero/losses.hpp"
#include "aero/train_config.hpp"

namespace aero::train {

using NamedTensors = torch::OrderedDict<std::string, torch::Tensor>;

struct AdamState {
  int64_t step = 0;
  NamedTensors exp_avg;
  NamedTensors exp_avg_sq;
};

/// Plain Adam (no weight decay, no amsgrad) over a fixed set of named parameters.
class Adam {
 public:
  Adam(NamedTensors params, double lr, double beta1, double beta2, double eps = 1e-8);

  void zero_grad();
  void step();

  const AdamState& state() const noexcept { return state_; }
  /// Throws if names or shapes differ from the managed parameters.
  void load_state(const AdamState& s);

 private:
  NamedTensors params_;
  double lr_, beta1_, beta2_, eps_;
  AdamState state_;
};

class NonFiniteLossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  int64_t step = 0;
  model::ParameterSet generator;
  NamedTensors discriminator;
  AdamState opt_g;
  AdamState opt_d;
  TrainConfig config;
  /// Batch sampling is a pure function of (seed, samples drawn); this is that pair.
  uint64_t rng_seed = 0;
  int64_t rng_draws = 0;
};

inline constexpr const char* kCheckpointFormat = "aero-checkpoint/1";

/// Atomic write through the container format.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
/// Throws io::ContainerError on truncation or version mismatch; unknown keys warn.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Owns generator, discriminators and both optimisers.
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  /// lr: [batch, T/s], hr: [batch, T]. Discriminator update first (on the
  /// detached output), then the generator update; both clipped to grad_clip.
  loss::LossReport train_step(const torch::Tensor& lr, const torch::Tensor& hr);
  loss::LossReport train_step(const std::vector<data::TrainChunk>& batch);

  Checkpoint checkpoint() const;
  void restore(const Checkpoint& ckpt);

  int64_t step() const noexcept { return step_; }
  const TrainConfig& config() const noexcept { return cfg_; }
  model::AeroGenerator& generator() noexcept { return gen_; }
  loss::MultiScaleDiscriminator& discriminator() noexcept { return disc_; }
  double last_grad_norm_g() const noexcept { return grad_norm_g_; }
  double last_grad_norm_d() const noexcept { return grad_norm_d_; }

  /// Generator forward in inference mode (float64 in, float64 out).
  dsp::WaveSignal upsample(const dsp::WaveSignal& lr);

 private:
  [[noreturn]] void abort_non_finite(const std::string& stage, const loss::LossReport& r) const;

  TrainConfig cfg_;
  dsp::SpectroTransformSpec spec_;
  torch::Device device_;
  model::AeroGenerator gen_;
  loss::MultiScaleDiscriminator disc_;
  Adam opt_g_;
  Adam opt_d_;
  int64_t step_ = 0;
  double grad_norm_g_ = 0.0;
  double grad_norm_d_ = 0.0;
};

/// Deterministic batch order over a chunk stream: draw k comes from epoch
/// k / size, reshuffled per epoch from `seed`.
class BatchSampler {
 public:
  BatchSampler(const data::ChunkStream& stream, uint64_t seed);
  std::vector<data::TrainChunk> batch(int64_t first_draw, int batch_size);

 private:
  const std::vector<std::size_t>& epoch_order(int64_t epoch);

  const data::ChunkStream* stream_;
  uint64_t seed_;
  int64_t cached_epoch_ = -1;
  std::vector<std::size_t> order_;
};

struct StepLog {
  int64_t step = 0;
  loss::LossReport report;
};

struct FitOptions {
  /// JSON-lines destination for per-`log_every` reports (optional).
  std::ostream* log = nullptr;
  /// Checkpoints go to `<dir>/step_<n>.ckpt` and `<dir>/last.ckpt` (skipped if empty).
  std::filesystem::path checkpoint_dir;
  std::optional<Checkpoint> resume;
  /// Called after every step; returning false ends training early.
  std::function<bool(int64_t step, const loss::LossReport&)> on_step;
};

struct FitResult {
  Checkpoint final;
  std::vector<StepLog> logs;
  std::vector<std::filesystem::path> checkpoints;
};

/// Runs until config.total_steps (or early stop). Throws std::invalid_argument
/// for an empty dataset.
FitResult fit(const TrainConfig& config, const std::vector<data::SignalPair>& pairs, const FitOptions& options = {});

}  // namespace aero::train
