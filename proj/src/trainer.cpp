#include "aero/trainer.hpp"

#include <cmath>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "aero/common.hpp"
#include "aero/container.hpp"

namespace aero::train {

using torch::Tensor;
using nlohmann::json;

Adam::Adam(NamedTensors params, double lr, double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& p : params_) {
    state_.exp_avg.insert(p.key(), torch::zeros_like(p.value()));
    state_.exp_avg_sq.insert(p.key(), torch::zeros_like(p.value()));
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) {
    if (p.value().grad().defined()) p.value().mutable_grad().zero_();
  }
}

void Adam::step() {
  torch::NoGradGuard guard;
  ++state_.step;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(state_.step));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(state_.step));
  for (auto& p : params_) {
    const auto& g = p.value().grad();
    if (!g.defined()) continue;
    auto& m = state_.exp_avg[p.key()];
    auto& v = state_.exp_avg_sq[p.key()];
    m.mul_(beta1_).add_(g, 1.0 - beta1_);
    v.mul_(beta2_).addcmul_(g, g, 1.0 - beta2_);
    auto denom = (v / bc2).sqrt_().add_(eps_);
    p.value().addcdiv_(m, denom, -lr_ / bc1);
  }
}

void Adam::load_state(const AdamState& s) {
  torch::NoGradGuard guard;
  for (const auto& p : params_) {
    const auto* m = s.exp_avg.find(p.key());
    const auto* v = s.exp_avg_sq.find(p.key());
    if (m == nullptr || v == nullptr) throw std::runtime_error("optimizer state lacks '" + p.key() + "'");
    if (m->sizes() != p.value().sizes() || v->sizes() != p.value().sizes()) {
      throw std::runtime_error("optimizer state shape mismatch for '" + p.key() + "'");
    }
    state_.exp_avg[p.key()].copy_(*m);
    state_.exp_avg_sq[p.key()].copy_(*v);
  }
  state_.step = s.step;
}

// ---------------------------------------------------------------------------

namespace {

NamedTensors clone_all(const NamedTensors& src) {
  NamedTensors out;
  for (const auto& t : src) out.insert(t.key(), t.value().detach().to(torch::kCPU).clone());
  return out;
}

void set_requires_grad(torch::nn::Module& m, bool flag) {
  for (auto& p : m.parameters()) p.set_requires_grad(flag);
}

double clip(torch::nn::Module& m, double max_norm) {
  auto params = m.parameters();
  std::vector<Tensor> with_grad;
  for (auto& p : params) {
    if (p.grad().defined()) with_grad.push_back(p);
  }
  if (with_grad.empty()) return 0.0;
  return torch::nn::utils::clip_grad_norm_(with_grad, max_norm);
}

}  // namespace

Trainer::Trainer(TrainConfig cfg)
    : cfg_((validate(cfg), std::move(cfg))),
      spec_(cfg_.transform()),
      device_(cfg_.device),
      gen_(cfg_.model),
      disc_(cfg_.discriminator),
      opt_g_((gen_->initialize(cfg_.seed), gen_->to(device_), gen_->named_parameters()), cfg_.lr_g, cfg_.beta1,
             cfg_.beta2),
      opt_d_((disc_->initialize(cfg_.seed + 1), disc_->to(device_), disc_->named_parameters()), cfg_.lr_d,
             cfg_.beta1, cfg_.beta2) {
  gen_->train();
  disc_->train();
}

void Trainer::abort_non_finite(const std::string& stage, const loss::LossReport& r) const {
  std::ostringstream os;
  os << "non-finite loss in " << stage << " at step " << step_ + 1 << ": " << loss::to_json(r).dump()
     << " grad_norm_g=" << grad_norm_g_ << " grad_norm_d=" << grad_norm_d_;
  throw NonFiniteLossError(os.str());
}

loss::LossReport Trainer::train_step(const Tensor& lr_in, const Tensor& hr_in) {
  if (lr_in.dim() != 2 || hr_in.dim() != 2 || lr_in.size(0) != hr_in.size(0) || lr_in.size(0) == 0) {
    throw std::invalid_argument("train_step expects non-empty [batch, T/s] and [batch, T] tensors");
  }
  if (hr_in.size(1) != lr_in.size(1) * spec_.scale) {
    throw std::invalid_argument("reference length " + std::to_string(hr_in.size(1)) + " is not " +
                                std::to_string(spec_.scale) + " x low-rate length " + std::to_string(lr_in.size(1)));
  }
  if (!torch::isfinite(lr_in).all().item<bool>() || !torch::isfinite(hr_in).all().item<bool>()) {
    throw std::invalid_argument("train_step: batch holds non-finite samples");
  }
  const auto lr = lr_in.to(device_, torch::kFloat32);
  const auto hr = hr_in.to(device_, torch::kFloat32);
  const bool adversarial = cfg_.weights.adversarial_active();
  model::SpectralMapper mapper = [this](const Tensor& cac) { return gen_->forward(cac); };

  loss::LossReport report;
  Tensor yhat;
  try {
    yhat = model::upsample(mapper, lr, spec_, hr.size(1), cfg_.upsampling);
  } catch (const NonFiniteError& e) {
    abort_non_finite("generator forward (" + e.stage() + ")", report);
  }

  std::optional<double> d_loss;
  if (adversarial && step_ % cfg_.d_every == 0) {
    set_requires_grad(*disc_, true);
    opt_d_.zero_grad();
    auto real = loss::logits_of(disc_->forward(hr));
    auto fake = loss::logits_of(disc_->forward(yhat.detach()));
    auto ld = loss::discriminator_loss(real, fake, cfg_.adversarial);
    d_loss = ld.item<double>();
    if (!std::isfinite(*d_loss)) {
      report.total_d = *d_loss;
      abort_non_finite("discriminator update", report);
    }
    ld.backward();
    grad_norm_d_ = clip(*disc_, cfg_.grad_clip);
    opt_d_.step();
  }

  // Discriminator weights are constants for the generator update.
  set_requires_grad(*disc_, false);
  opt_g_.zero_grad();
  auto objective = loss::total_generator_loss(hr, yhat, adversarial ? &disc_ : nullptr, cfg_.weights, cfg_.adversarial);
  report = objective.report;
  if (d_loss) report.total_d = *d_loss;
  if (!std::isfinite(report.total_g) || !std::isfinite(objective.total.item<double>())) {
    abort_non_finite("generator update", report);
  }
  objective.total.backward();
  grad_norm_g_ = clip(*gen_, cfg_.grad_clip);
  if (!std::isfinite(grad_norm_g_)) abort_non_finite("generator gradient", report);
  opt_g_.step();
  set_requires_grad(*disc_, true);
  ++step_;
  return report;
}

loss::LossReport Trainer::train_step(const std::vector<data::TrainChunk>& batch) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  std::vector<Tensor> lr, hr;
  for (const auto& c : batch) {
    if (c.lr.size() != batch.front().lr.size() || c.hr.size() != batch.front().hr.size()) {
      throw std::invalid_argument("train_step: chunks in a batch must share one shape");
    }
    lr.push_back(dsp::to_tensor(c.lr, torch::kFloat32));
    hr.push_back(dsp::to_tensor(c.hr, torch::kFloat32));
  }
  return train_step(torch::stack(lr), torch::stack(hr));
}

dsp::WaveSignal Trainer::upsample(const dsp::WaveSignal& lr) {
  gen_->eval();
  auto out = model::super_resolve(gen_, lr, spec_, cfg_.upsampling);
  gen_->train();
  return out;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.step = step_;
  c.generator.config = cfg_.model;
  c.generator.arrays = clone_all(gen_->named_parameters());
  c.discriminator = clone_all(disc_->named_parameters());
  c.opt_g = {opt_g_.state().step, clone_all(opt_g_.state().exp_avg), clone_all(opt_g_.state().exp_avg_sq)};
  c.opt_d = {opt_d_.state().step, clone_all(opt_d_.state().exp_avg), clone_all(opt_d_.state().exp_avg_sq)};
  c.config = cfg_;
  c.rng_seed = cfg_.seed;
  c.rng_draws = step_ * cfg_.batch_size;
  return c;
}

void Trainer::restore(const Checkpoint& c) {
  gen_->load(c.generator);
  {
    torch::NoGradGuard guard;
    auto own = disc_->named_parameters();
    for (auto& p : own) {
      const auto* src = c.discriminator.find(p.key());
      if (src == nullptr || src->sizes() != p.value().sizes()) {
        throw std::runtime_error("checkpoint discriminator does not match '" + p.key() + "'");
      }
      p.value().copy_(*src);
    }
  }
  opt_g_.load_state(c.opt_g);
  opt_d_.load_state(c.opt_d);
  step_ = c.step;
}

// ---------------------------------------------------------------------------
// Checkpoint files

namespace {

void put_prefixed(NamedTensors& dst, const std::string& prefix, const NamedTensors& src) {
  for (const auto& t : src) dst.insert(prefix + t.key(), t.value());
}

bool strip(const std::string& name, const std::string& prefix, std::string& rest) {
  if (name.rfind(prefix, 0) != 0) return false;
  rest = name.substr(prefix.size());
  return true;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  io::Container box;
  box.meta = {{"format", kCheckpointFormat},
              {"step", c.step},
              {"config", to_json(c.config)},
              {"generator_version", c.generator.version},
              {"generator_config", model::to_json(c.generator.config)},
              {"opt_g_step", c.opt_g.step},
              {"opt_d_step", c.opt_d.step},
              {"rng", {{"seed", c.rng_seed}, {"draws", c.rng_draws}}}};
  put_prefixed(box.arrays, "generator/", c.generator.arrays);
  put_prefixed(box.arrays, "discriminator/", c.discriminator);
  put_prefixed(box.arrays, "opt_g/exp_avg/", c.opt_g.exp_avg);
  put_prefixed(box.arrays, "opt_g/exp_avg_sq/", c.opt_g.exp_avg_sq);
  put_prefixed(box.arrays, "opt_d/exp_avg/", c.opt_d.exp_avg);
  put_prefixed(box.arrays, "opt_d/exp_avg_sq/", c.opt_d.exp_avg_sq);
  io::write_container(path, box);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto box = io::read_container(path);
  const auto& meta = box.meta;
  if (meta.value("format", std::string()) != kCheckpointFormat) {
    throw io::ContainerError(path.string() + ": not a training checkpoint (format '" +
                             meta.value("format", std::string("?")) + "')");
  }
  static const std::vector<std::string> known{"format",      "step",       "config",     "generator_version",
                                              "generator_config", "opt_g_step", "opt_d_step", "rng"};
  for (const auto& [key, value] : meta.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      std::cerr << "warning: ignoring unknown checkpoint key '" << key << "'\n";
    }
  }
  Checkpoint c;
  c.step = meta.at("step").get<int64_t>();
  c.config = train_config_from_json(meta.at("config"));
  c.generator.version = meta.value("generator_version", std::string(model::kParameterSetVersion));
  c.generator.config = model::model_config_from_json(meta.at("generator_config"));
  c.opt_g.step = meta.at("opt_g_step").get<int64_t>();
  c.opt_d.step = meta.at("opt_d_step").get<int64_t>();
  c.rng_seed = meta.at("rng").at("seed").get<uint64_t>();
  c.rng_draws = meta.at("rng").at("draws").get<int64_t>();
  for (const auto& item : box.arrays) {
    std::string rest;
    const auto& name = item.key();
    if (strip(name, "generator/", rest)) {
      c.generator.arrays.insert(rest, item.value());
    } else if (strip(name, "discriminator/", rest)) {
      c.discriminator.insert(rest, item.value());
    } else if (strip(name, "opt_g/exp_avg_sq/", rest)) {
      c.opt_g.exp_avg_sq.insert(rest, item.value());
    } else if (strip(name, "opt_g/exp_avg/", rest)) {
      c.opt_g.exp_avg.insert(rest, item.value());
    } else if (strip(name, "opt_d/exp_avg_sq/", rest)) {
      c.opt_d.exp_avg_sq.insert(rest, item.value());
    } else if (strip(name, "opt_d/exp_avg/", rest)) {
      c.opt_d.exp_avg.insert(rest, item.value());
    } else {
      std::cerr << "warning: ignoring unknown checkpoint array '" << name << "'\n";
    }
  }
  return c;
}

// ---------------------------------------------------------------------------
// fit

BatchSampler::BatchSampler(const data::ChunkStream& stream, uint64_t seed) : stream_(&stream), seed_(seed) {}

const std::vector<std::size_t>& BatchSampler::epoch_order(int64_t epoch) {
  if (epoch != cached_epoch_) {
    order_.resize(stream_->size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::seed_seq seq{static_cast<uint32_t>(seed_), static_cast<uint32_t>(seed_ >> 32), static_cast<uint32_t>(epoch),
                      static_cast<uint32_t>(static_cast<uint64_t>(epoch) >> 32)};
    std::mt19937_64 rng(seq);
    std::shuffle(order_.begin(), order_.end(), rng);
    cached_epoch_ = epoch;
  }
  return order_;
}

std::vector<data::TrainChunk> BatchSampler::batch(int64_t first_draw, int batch_size) {
  const auto n = static_cast<int64_t>(stream_->size());
  std::vector<data::TrainChunk> out;
  out.reserve(static_cast<std::size_t>(batch_size));
  for (int64_t k = first_draw; k < first_draw + batch_size; ++k) {
    out.push_back(stream_->at(epoch_order(k / n)[static_cast<std::size_t>(k % n)]));
  }
  return out;
}

FitResult fit(const TrainConfig& config, const std::vector<data::SignalPair>& pairs, const FitOptions& options) {
  if (pairs.empty()) throw std::invalid_argument("fit: training dataset is empty");
  TrainConfig cfg = config;
  validate(cfg);
  for (const auto& p : pairs) {
    if (p.lr.sample_rate != cfg.pair.source_rate || p.hr.sample_rate != cfg.pair.target_rate) {
      throw std::invalid_argument("fit: pair rates " + std::to_string(p.lr.sample_rate) + "/" +
                                  std::to_string(p.hr.sample_rate) + " do not match the configured " +
                                  std::to_string(cfg.pair.source_rate) + "/" + std::to_string(cfg.pair.target_rate));
    }
  }
  data::ChunkStream stream(pairs, cfg.chunk_seconds, cfg.hop_seconds, cfg.seed);
  BatchSampler sampler(stream, cfg.seed);

  Trainer trainer(cfg);
  if (options.resume) trainer.restore(*options.resume);

  FitResult result;
  auto write_ckpt = [&](const Checkpoint& ck) {
    if (options.checkpoint_dir.empty()) return;
    const auto path = options.checkpoint_dir / ("step_" + std::to_string(ck.step) + ".ckpt");
    save_checkpoint(ck, path);
    save_checkpoint(ck, options.checkpoint_dir / "last.ckpt");
    result.checkpoints.push_back(path);
  };

  while (trainer.step() < cfg.total_steps) {
    const int64_t draw = trainer.step() * cfg.batch_size;
    const auto report = trainer.train_step(sampler.batch(draw, cfg.batch_size));
    const int64_t step = trainer.step();
    if (step % cfg.log_every == 0) {
      result.logs.push_back({step, report});
      if (options.log != nullptr) {
        auto j = loss::to_json(report);
        j["step"] = step;
        *options.log << j.dump() << "\n" << std::flush;
      }
    }
    if (step % cfg.ckpt_every == 0) write_ckpt(trainer.checkpoint());
    if (options.on_step && !options.on_step(step, report)) break;
  }
  result.final = trainer.checkpoint();
  if (result.checkpoints.empty() || result.checkpoints.back().filename() !=
                                        "step_" + std::to_string(result.final.step) + ".ckpt") {
    write_ckpt(result.final);
  }
  return result;
}

}  // namespace aero::train
