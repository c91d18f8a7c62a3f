#include <gtest/gtest.h>

#include <cmath>

#include "aero/discriminator.hpp"
#include "aero/losses.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace aero;
using aero::testing::noise;

namespace {

torch::Tensor as_tensor(const dsp::WaveSignal& w) { return dsp::to_tensor(w); }

loss::DiscriminatorConfig tiny_disc() {
  loss::DiscriminatorConfig c;
  c.layers = loss::DiscriminatorConfig::narrow_layers(16);
  return c;
}

}  // namespace

TEST(SpectralLoss, MatchesDirectFormulaPerResolution) {
  const auto y = noise(16000, 3000, 1), yhat = noise(16000, 3000, 2);
  for (const auto& r : loss::default_resolutions()) {
    auto [sc, mag] = loss::spectral_loss_single(y, yhat, r);
    const auto ref = aero::testing::brute_spectral_terms(y.samples, yhat.samples, r.fft_size, r.hop_length, r.win_length);
    EXPECT_NEAR(sc, ref.sc, 1e-9) << r.fft_size;
    EXPECT_NEAR(mag, ref.mag, 1e-9) << r.fft_size;
  }
}

TEST(SpectralLoss, MultiResolutionIsMeanOfZippedTriples) {
  const auto y = noise(16000, 2500, 3), yhat = noise(16000, 2500, 4, 0.3);
  auto [sc, mag] = loss::multi_res_spectral_loss(y, yhat);
  double sc_ref = 0.0, mag_ref = 0.0;
  for (auto [f, h, w] : {std::tuple{512, 50, 240}, std::tuple{1024, 120, 600}, std::tuple{2048, 240, 1200}}) {
    const auto t = aero::testing::brute_spectral_terms(y.samples, yhat.samples, f, h, w);
    sc_ref += t.sc / 3;
    mag_ref += t.mag / 3;
  }
  EXPECT_NEAR(sc, sc_ref, 1e-9);
  EXPECT_NEAR(mag, mag_ref, 1e-9);
}

TEST(SpectralLoss, Identities) {
  const auto y = noise(16000, 4000, 5);
  auto [sc0, mag0] = loss::multi_res_spectral_loss(y, y);
  EXPECT_EQ(sc0, 0.0);
  EXPECT_EQ(mag0, 0.0);
  auto y2 = y;
  for (auto& v : y2.samples) v *= 2.0;
  for (const auto& r : loss::default_resolutions()) {
    auto [sc, mag] = loss::spectral_loss_single(y, y2, r);
    EXPECT_NEAR(sc, 1.0, 1e-12);
    EXPECT_NEAR(mag, std::log(2.0), 1e-9);
  }
}

TEST(SpectralLoss, ZeroReferenceAndMismatchThrow) {
  dsp::WaveSignal z{std::vector<double>(2000, 0.0), 16000};
  EXPECT_THROW(loss::multi_res_spectral_loss(z, noise(16000, 2000, 1)), std::invalid_argument);
  EXPECT_THROW(loss::multi_res_spectral_loss(noise(16000, 2000, 1), noise(16000, 2001, 1)), std::invalid_argument);
}

TEST(SpectralLoss, BatchedTensorInput) {
  auto y = torch::randn({3, 2000}, torch::kFloat64);
  auto t = loss::multi_res_spectral_loss(y, y.clone());
  EXPECT_EQ(t.sc.item<double>(), 0.0);
  EXPECT_EQ(t.mag.item<double>(), 0.0);
}

TEST(AdversarialLoss, HingeAndLeastSquaresAtZero) {
  std::vector<torch::Tensor> zeros{torch::zeros({2, 1, 7}), torch::zeros({2, 1, 4}), torch::zeros({2, 1, 2})};
  EXPECT_DOUBLE_EQ(loss::discriminator_loss(zeros, zeros).item<double>(), 2.0);
  EXPECT_DOUBLE_EQ(loss::discriminator_loss(zeros, zeros, loss::AdversarialKind::least_squares).item<double>(), 1.0);
  EXPECT_DOUBLE_EQ(loss::generator_adv_loss(zeros).item<double>(), 1.0);
}

TEST(AdversarialLoss, MatchesDirectFormula) {
  auto g = at::make_generator<at::CPUGeneratorImpl>(3);
  std::vector<torch::Tensor> real{torch::randn({2, 1, 9}, g, torch::kFloat64), torch::randn({2, 1, 5}, g, torch::kFloat64)};
  std::vector<torch::Tensor> fake{torch::randn({2, 1, 9}, g, torch::kFloat64), torch::randn({2, 1, 5}, g, torch::kFloat64)};
  auto mean_of = [](const torch::Tensor& t, auto f) {
    double acc = 0.0;
    auto a = t.contiguous();
    const double* p = a.data_ptr<double>();
    for (int64_t i = 0; i < a.numel(); ++i) acc += f(p[i]);
    return acc / static_cast<double>(a.numel());
  };
  double d_ref = 0.0, g_ref = 0.0, d_ls = 0.0;
  for (std::size_t s = 0; s < 2; ++s) {
    d_ref += mean_of(real[s], [](double v) { return std::max(0.0, 1.0 - v); }) +
             mean_of(fake[s], [](double v) { return std::max(0.0, 1.0 + v); });
    g_ref += mean_of(fake[s], [](double v) { return std::max(0.0, 1.0 - v); });
    d_ls += mean_of(real[s], [](double v) { return (1.0 - v) * (1.0 - v); }) + mean_of(fake[s], [](double v) { return v * v; });
  }
  EXPECT_NEAR(loss::discriminator_loss(real, fake).item<double>(), d_ref / 2, 1e-12);
  EXPECT_NEAR(loss::generator_adv_loss(fake).item<double>(), g_ref / 2, 1e-12);
  EXPECT_NEAR(loss::discriminator_loss(real, fake, loss::AdversarialKind::least_squares).item<double>(), d_ls / 2, 1e-12);
  EXPECT_THROW(loss::discriminator_loss(real, {fake[0]}), std::invalid_argument);
}

TEST(FeatureMatching, ZeroOnIdenticalAndDirectFormula) {
  auto g = at::make_generator<at::CPUGeneratorImpl>(4);
  std::vector<std::vector<torch::Tensor>> a{{torch::randn({1, 4, 10}, g, torch::kFloat64), torch::randn({1, 8, 3}, g, torch::kFloat64)},
                                            {torch::randn({1, 4, 5}, g, torch::kFloat64)}};
  std::vector<std::vector<torch::Tensor>> b{{torch::randn({1, 4, 10}, g, torch::kFloat64), torch::randn({1, 8, 3}, g, torch::kFloat64)},
                                            {torch::randn({1, 4, 5}, g, torch::kFloat64)}};
  EXPECT_EQ(loss::feature_matching_loss(a, a).item<double>(), 0.0);
  double ref = 0.0;
  int n = 0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    for (std::size_t l = 0; l < a[s].size(); ++l) {
      auto r = a[s][l].contiguous(), f = b[s][l].contiguous();
      double num = 0.0, den = 0.0;
      for (int64_t i = 0; i < r.numel(); ++i) {
        num += std::abs(r.data_ptr<double>()[i] - f.data_ptr<double>()[i]);
        den += std::abs(r.data_ptr<double>()[i]);
      }
      ref += num / den;
      ++n;
    }
  }
  EXPECT_NEAR(loss::feature_matching_loss(a, b).item<double>(), ref / n, 1e-12);
  EXPECT_THROW(loss::feature_matching_loss(a, {b[0]}), std::invalid_argument);
}

TEST(Discriminator, ScaleStructure) {
  loss::MultiScaleDiscriminator d(tiny_disc());
  d->initialize(1);
  auto outs = d->forward(torch::randn({2, 4000}));
  ASSERT_EQ(outs.size(), 3u);
  for (const auto& o : outs) {
    EXPECT_EQ(o.logits.size(0), 2);
    EXPECT_EQ(o.logits.size(1), 1);
    EXPECT_EQ(o.features.size(), tiny_disc().layers.size() - 1);
  }
  // Each scale halves the time resolution.
  EXPECT_GT(outs[0].logits.size(2), outs[1].logits.size(2));
  EXPECT_GT(outs[1].logits.size(2), outs[2].logits.size(2));
  EXPECT_EQ(d->min_length(), 41 * 4);
  EXPECT_THROW(d->forward(torch::randn({1, 100})), std::invalid_argument);
}

TEST(Discriminator, ConfigValidationAndJson) {
  auto c = tiny_disc();
  loss::validate(c);
  auto back = loss::discriminator_config_from_json(loss::to_json(c));
  EXPECT_EQ(loss::to_json(back), loss::to_json(c));
  c.layers.back().out_channels = 2;
  EXPECT_THROW(loss::validate(c), std::invalid_argument);
  auto d = tiny_disc();
  d.num_discriminators = 0;
  EXPECT_THROW(loss::validate(d), std::invalid_argument);
  loss::validate(loss::DiscriminatorConfig{});
}

TEST(Discriminator, SameSeedSameOutput) {
  loss::MultiScaleDiscriminator a(tiny_disc()), b(tiny_disc());
  a->initialize(9);
  b->initialize(9);
  auto x = torch::randn({1, 3000});
  torch::NoGradGuard ng;
  auto oa = a->forward(x), ob = b->forward(x);
  for (std::size_t i = 0; i < oa.size(); ++i) EXPECT_TRUE(torch::equal(oa[i].logits, ob[i].logits));
}

TEST(TotalLoss, CompositionOfWeightedTerms) {
  loss::MultiScaleDiscriminator d(tiny_disc());
  d->initialize(2);
  auto y = torch::randn({2, 3000}, torch::kFloat32) * 0.1;
  auto yhat = (torch::randn({2, 3000}, torch::kFloat32) * 0.1).requires_grad_();
  loss::LossWeights w{1.0, 0.5, 10.0};
  auto obj = loss::total_generator_loss(y, yhat, &d, w);
  const auto& r = obj.report;
  EXPECT_GT(r.spectral_sc, 0.0);
  EXPECT_GT(r.adversarial_g, 0.0);
  EXPECT_GT(r.feature_match, 0.0);
  EXPECT_NEAR(r.total_g, r.spectral_sc + r.spectral_mag + 0.5 * r.adversarial_g + 10.0 * r.feature_match, 1e-9);
  EXPECT_NEAR(obj.total.item<double>(), r.total_g, 1e-4 * std::abs(r.total_g));

  auto spec = loss::multi_res_spectral_loss(y, yhat.detach());
  EXPECT_NEAR(r.spectral_sc, spec.sc.item<double>(), 1e-6);

  obj.total.backward();
  EXPECT_GT(yhat.grad().norm().item<double>(), 0.0);
  // Feature matching detaches the real side: no gradient reaches y (it has none).
  EXPECT_FALSE(y.requires_grad());
}

TEST(TotalLoss, SpectralOnlyNeedsNoDiscriminator) {
  auto y = torch::randn({1, 3000}, torch::kFloat64);
  auto obj = loss::total_generator_loss(y, y * 0.5, nullptr, {1.0, 0.0, 0.0});
  EXPECT_EQ(obj.report.adversarial_g, 0.0);
  EXPECT_EQ(obj.report.total_d, 0.0);
  EXPECT_NEAR(obj.report.total_g, obj.report.spectral_sc + obj.report.spectral_mag, 1e-12);
  EXPECT_THROW(loss::total_generator_loss(y, y, nullptr, {1.0, 1.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(loss::total_generator_loss(y, y, nullptr, {0.0, 0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(loss::total_generator_loss(y, y, nullptr, {-1.0, 0.0, 0.0}), std::invalid_argument);
}

TEST(TotalLoss, SpectralFieldsIndependentOfDiscriminator) {
  auto y = torch::randn({1, 3000}) * 0.1;
  auto yhat = torch::randn({1, 3000}) * 0.1;
  loss::MultiScaleDiscriminator a(tiny_disc()), b(tiny_disc());
  a->initialize(1);
  b->initialize(2);
  auto ra = loss::total_generator_loss(y, yhat, &a, {1.0, 1.0, 1.0}).report;
  auto rb = loss::total_generator_loss(y, yhat, &b, {1.0, 1.0, 1.0}).report;
  EXPECT_EQ(ra.spectral_sc, rb.spectral_sc);
  EXPECT_EQ(ra.spectral_mag, rb.spectral_mag);
  EXPECT_NE(ra.adversarial_g, rb.adversarial_g);
}

TEST(LossReport, JsonRoundTrip) {
  loss::LossReport r{0.1, 0.2, 0.3, 0.4, 1.5, 2.0};
  auto back = loss::loss_report_from_json(loss::to_json(r));
  EXPECT_EQ(back.total_g, 1.5);
  EXPECT_EQ(back.total_d, 2.0);
  EXPECT_EQ(back.feature_match, 0.4);
  EXPECT_EQ(loss::parse_adversarial("least_squares"), loss::AdversarialKind::least_squares);
  EXPECT_THROW(loss::parse_adversarial("wasserstein"), std::invalid_argument);
}
