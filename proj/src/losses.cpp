#include "aero/losses.hpp"

#include <stdexcept>

namespace aero::loss {

const std::vector<StftLossResolution>& default_resolutions() {
  static const std::vector<StftLossResolution> res{{512, 50, 240}, {1024, 120, 600}, {2048, 240, 1200}};
  return res;
}

namespace {

torch::Tensor floored_magnitude(const torch::Tensor& spec) {
  auto power = torch::real(spec) * torch::real(spec) + torch::imag(spec) * torch::imag(spec);
  return torch::sqrt(torch::clamp_min(power, kMagnitudeFloor * kMagnitudeFloor));
}

}  // namespace

SpectralTerms spectral_loss_single(const torch::Tensor& y, const torch::Tensor& yhat, const StftLossResolution& res) {
  if (y.sizes() != yhat.sizes()) {
    throw std::invalid_argument("spectral loss: shape mismatch " + c10::str(y.sizes()) + " vs " +
                                c10::str(yhat.sizes()));
  }
  if (!y.ne(0).any().item<bool>()) throw std::invalid_argument("spectral loss: all-zero reference");
  const auto cfg = res.stft_config();
  auto mag_y = floored_magnitude(dsp::stft_tensor(y, cfg));
  auto mag_hat = floored_magnitude(dsp::stft_tensor(yhat, cfg));
  SpectralTerms t;
  t.sc = torch::linalg_vector_norm(mag_y - mag_hat, 2) / torch::linalg_vector_norm(mag_y, 2);
  t.mag = torch::mean(torch::abs(torch::log(mag_y) - torch::log(mag_hat)));
  return t;
}

SpectralTerms multi_res_spectral_loss(const torch::Tensor& y, const torch::Tensor& yhat,
                                      const std::vector<StftLossResolution>& resolutions) {
  if (resolutions.empty()) throw std::invalid_argument("multi-resolution loss needs at least one resolution");
  SpectralTerms sum{torch::zeros({}, y.options()), torch::zeros({}, y.options())};
  for (const auto& r : resolutions) {
    auto t = spectral_loss_single(y, yhat, r);
    sum.sc = sum.sc + t.sc;
    sum.mag = sum.mag + t.mag;
  }
  const double n = static_cast<double>(resolutions.size());
  return {sum.sc / n, sum.mag / n};
}

namespace {

std::pair<torch::Tensor, torch::Tensor> checked_pair(const dsp::WaveSignal& y, const dsp::WaveSignal& yhat) {
  dsp::validate(y, "reference");
  dsp::validate(yhat, "estimate");
  if (y.size() != yhat.size() || y.sample_rate != yhat.sample_rate) {
    throw std::invalid_argument("spectral loss: signals differ in length or sample rate");
  }
  return {dsp::to_tensor(y), dsp::to_tensor(yhat)};
}

}  // namespace

std::pair<double, double> spectral_loss_single(const dsp::WaveSignal& y, const dsp::WaveSignal& yhat,
                                               const StftLossResolution& res) {
  auto [a, b] = checked_pair(y, yhat);
  auto t = spectral_loss_single(a, b, res);
  return {t.sc.item<double>(), t.mag.item<double>()};
}

std::pair<double, double> multi_res_spectral_loss(const dsp::WaveSignal& y, const dsp::WaveSignal& yhat) {
  auto [a, b] = checked_pair(y, yhat);
  auto t = multi_res_spectral_loss(a, b);
  return {t.sc.item<double>(), t.mag.item<double>()};
}

AdversarialKind parse_adversarial(const std::string& name) {
  if (name == "hinge") return AdversarialKind::hinge;
  if (name == "least_squares" || name == "lsgan") return AdversarialKind::least_squares;
  throw std::invalid_argument("unknown adversarial formulation '" + name + "' (hinge, least_squares)");
}

std::string to_string(AdversarialKind k) { return k == AdversarialKind::hinge ? "hinge" : "least_squares"; }

torch::Tensor discriminator_loss(const std::vector<torch::Tensor>& real_logits,
                                 const std::vector<torch::Tensor>& fake_logits, AdversarialKind kind) {
  if (real_logits.size() != fake_logits.size() || real_logits.empty()) {
    throw std::invalid_argument("discriminator loss: real/fake scale structure differs");
  }
  torch::Tensor acc;
  for (std::size_t i = 0; i < real_logits.size(); ++i) {
    torch::Tensor term;
    if (kind == AdversarialKind::hinge) {
      term = torch::relu(1.0 - real_logits[i]).mean() + torch::relu(1.0 + fake_logits[i]).mean();
    } else {
      term = (1.0 - real_logits[i]).pow(2).mean() + fake_logits[i].pow(2).mean();
    }
    acc = acc.defined() ? acc + term : term;
  }
  return acc / static_cast<double>(real_logits.size());
}

torch::Tensor generator_adv_loss(const std::vector<torch::Tensor>& fake_logits, AdversarialKind kind) {
  if (fake_logits.empty()) throw std::invalid_argument("generator adversarial loss: no scales");
  torch::Tensor acc;
  for (const auto& d : fake_logits) {
    auto term = kind == AdversarialKind::hinge ? torch::relu(1.0 - d).mean() : (1.0 - d).pow(2).mean();
    acc = acc.defined() ? acc + term : term;
  }
  return acc / static_cast<double>(fake_logits.size());
}

torch::Tensor feature_matching_loss(const std::vector<std::vector<torch::Tensor>>& real_features,
                                    const std::vector<std::vector<torch::Tensor>>& fake_features) {
  if (real_features.size() != fake_features.size()) {
    throw std::invalid_argument("feature matching: scale count differs");
  }
  torch::Tensor acc;
  int64_t count = 0;
  for (std::size_t s = 0; s < real_features.size(); ++s) {
    if (real_features[s].size() != fake_features[s].size()) {
      throw std::invalid_argument("feature matching: layer count differs at scale " + std::to_string(s));
    }
    for (std::size_t l = 0; l < real_features[s].size(); ++l) {
      const auto& r = real_features[s][l];
      auto term = torch::abs(r - fake_features[s][l]).mean() / torch::clamp_min(torch::abs(r).mean(), 1e-7);
      acc = acc.defined() ? acc + term : term;
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("feature matching: no feature maps");
  return acc / static_cast<double>(count);
}

std::vector<torch::Tensor> logits_of(const std::vector<ScaleOutput>& outs) {
  std::vector<torch::Tensor> v;
  for (const auto& o : outs) v.push_back(o.logits);
  return v;
}

std::vector<std::vector<torch::Tensor>> features_of(const std::vector<ScaleOutput>& outs) {
  std::vector<std::vector<torch::Tensor>> v;
  for (const auto& o : outs) v.push_back(o.features);
  return v;
}

void validate(const LossWeights& w) {
  if (w.lambda_spectral < 0 || w.lambda_adv < 0 || w.lambda_feat < 0) {
    throw std::invalid_argument("loss weights must be non-negative");
  }
  if (w.lambda_spectral == 0 && w.lambda_adv == 0 && w.lambda_feat == 0) {
    throw std::invalid_argument("loss weights must not all be zero");
  }
}

nlohmann::json to_json(const LossReport& r) {
  return {{"spectral_sc", r.spectral_sc},     {"spectral_mag", r.spectral_mag}, {"adversarial_g", r.adversarial_g},
          {"feature_match", r.feature_match}, {"total_g", r.total_g},           {"total_d", r.total_d}};
}

LossReport loss_report_from_json(const nlohmann::json& j) {
  LossReport r;
  r.spectral_sc = j.at("spectral_sc").get<double>();
  r.spectral_mag = j.at("spectral_mag").get<double>();
  r.adversarial_g = j.at("adversarial_g").get<double>();
  r.feature_match = j.at("feature_match").get<double>();
  r.total_g = j.at("total_g").get<double>();
  r.total_d = j.at("total_d").get<double>();
  return r;
}

GeneratorObjective total_generator_loss(const torch::Tensor& y, const torch::Tensor& yhat,
                                        MultiScaleDiscriminator* disc, const LossWeights& weights,
                                        AdversarialKind kind) {
  validate(weights);
  GeneratorObjective out;
  auto total = torch::zeros({}, yhat.options());
  if (weights.lambda_spectral > 0) {
    auto spec = multi_res_spectral_loss(y, yhat);
    out.report.spectral_sc = spec.sc.item<double>();
    out.report.spectral_mag = spec.mag.item<double>();
    total = total + weights.lambda_spectral * (spec.sc + spec.mag);
  }
  if (weights.adversarial_active()) {
    if (disc == nullptr || !*disc) throw std::invalid_argument("adversarial weights set but no discriminator given");
    auto fake = (*disc)->forward(yhat);
    std::vector<ScaleOutput> real;
    {
      torch::NoGradGuard guard;
      real = (*disc)->forward(y);
    }
    auto fake_logits = logits_of(fake);
    if (weights.lambda_adv > 0) {
      auto adv = generator_adv_loss(fake_logits, kind);
      out.report.adversarial_g = adv.item<double>();
      total = total + weights.lambda_adv * adv;
    }
    if (weights.lambda_feat > 0) {
      auto feat = feature_matching_loss(features_of(real), features_of(fake));
      out.report.feature_match = feat.item<double>();
      total = total + weights.lambda_feat * feat;
    }
    std::vector<torch::Tensor> detached;
    for (const auto& t : fake_logits) detached.push_back(t.detach());
    out.report.total_d = discriminator_loss(logits_of(real), detached, kind).item<double>();
  }
  const auto& r = out.report;
  out.report.total_g = weights.lambda_spectral * (r.spectral_sc + r.spectral_mag) +
                       weights.lambda_adv * r.adversarial_g + weights.lambda_feat * r.feature_match;
  out.total = total;
  return out;
}

}  // namespace aero::loss
