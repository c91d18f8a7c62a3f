#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "aero/discriminator.hpp"
#include "aero/stft.hpp"
#include "aero/wave.hpp"

namespace aero::loss {

struct StftLossResolution {
  int fft_size;
  int hop_length;
  int win_length;

  dsp::StftConfig stft_config() const { return {fft_size, win_length, hop_length, dsp::WindowKind::hann, true}; }
};

/// The three resolutions of the multi-resolution loss, zipped in order:
/// 512/50/240, 1024/120/600, 2048/240/1200 (fft/hop/win).
const std::vector<StftLossResolution>& default_resolutions();

inline constexpr double kMagnitudeFloor = 1e-7;

/// Spectral convergence and log-magnitude terms (scalar tensors, differentiable).
struct SpectralTerms {
  torch::Tensor sc;
  torch::Tensor mag;
};

/// y, yhat: [..., T] with equal shapes. sc = ||Y|-|Yhat||_F / ||Y||_F and
/// mag = mean |log|Y| - log|Yhat||, with magnitudes floored at 1e-7.
/// Throws std::invalid_argument for an all-zero reference.
SpectralTerms spectral_loss_single(const torch::Tensor& y, const torch::Tensor& yhat, const StftLossResolution& res);
/// Mean of the single-resolution terms over `resolutions`.
SpectralTerms multi_res_spectral_loss(const torch::Tensor& y, const torch::Tensor& yhat,
                                      const std::vector<StftLossResolution>& resolutions = default_resolutions());

std::pair<double, double> spectral_loss_single(const dsp::WaveSignal& y, const dsp::WaveSignal& yhat,
                                               const StftLossResolution& res);
std::pair<double, double> multi_res_spectral_loss(const dsp::WaveSignal& y, const dsp::WaveSignal& yhat);

enum class AdversarialKind { hinge, least_squares };
AdversarialKind parse_adversarial(const std::string& name);
std::string to_string(AdversarialKind k);

/// Mean over scales of E[max(0, 1 - D(y))] + E[max(0, 1 + D(yhat))] (hinge) or
/// E[(1 - D(y))^2] + E[D(yhat)^2] (least squares).
torch::Tensor discriminator_loss(const std::vector<torch::Tensor>& real_logits,
                                 const std::vector<torch::Tensor>& fake_logits,
                                 AdversarialKind kind = AdversarialKind::hinge);
/// Mean over scales of E[max(0, 1 - D(yhat))] or E[(1 - D(yhat))^2].
torch::Tensor generator_adv_loss(const std::vector<torch::Tensor>& fake_logits,
                                 AdversarialKind kind = AdversarialKind::hinge);
/// Mean over scales and layers of mean|f_real - f_fake| / max(mean|f_real|, 1e-7).
torch::Tensor feature_matching_loss(const std::vector<std::vector<torch::Tensor>>& real_features,
                                    const std::vector<std::vector<torch::Tensor>>& fake_features);

std::vector<torch::Tensor> logits_of(const std::vector<ScaleOutput>& outs);
std::vector<std::vector<torch::Tensor>> features_of(const std::vector<ScaleOutput>& outs);

struct LossWeights {
  double lambda_spectral = 1.0;
  double lambda_adv = 1.0;
  double lambda_feat = 10.0;

  bool adversarial_active() const noexcept { return lambda_adv > 0.0 || lambda_feat > 0.0; }
};
void validate(const LossWeights& w);

struct LossReport {
  double spectral_sc = 0.0;
  double spectral_mag = 0.0;
  double adversarial_g = 0.0;
  double feature_match = 0.0;
  double total_g = 0.0;
  double total_d = 0.0;
};
nlohmann::json to_json(const LossReport& r);
LossReport loss_report_from_json(const nlohmann::json& j);

struct GeneratorObjective {
  torch::Tensor total;  ///< differentiable w.r.t. yhat
  LossReport report;
};

/// Weighted generator objective. Discriminator terms are evaluated only when
/// their weight is non-zero; real-side features are detached. `report.total_d`
/// carries the hinge/LS discriminator loss on (y, detached yhat).
GeneratorObjective total_generator_loss(const torch::Tensor& y, const torch::Tensor& yhat,
                                        MultiScaleDiscriminator* disc, const LossWeights& weights,
                                        AdversarialKind kind = AdversarialKind::hinge);

}  // namespace aero::loss
