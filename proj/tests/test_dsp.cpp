#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "aero/cac.hpp"
#include "aero/resample.hpp"
#include "aero/stft.hpp"
#include "aero/transform_pair.hpp"
#include "aero/wave.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace aero;
using aero::testing::noise;
using aero::testing::sine;

namespace {

double rel_l2(const torch::Tensor& a, const torch::Tensor& b) {
  return ((a - b).norm() / b.norm()).item<double>();
}

dsp::StftConfig hann_cfg(int win, int denom) { return {win, win, win / denom, dsp::WindowKind::hann, true}; }

}  // namespace

// ---------------------------------------------------------------------------
// stft / istft

TEST(Stft, ConstantSignalRectWindowIsDcOnly) {
  dsp::WaveSignal x{std::vector<double>(8, 1.0), 8000};
  auto s = dsp::stft(x, {8, 8, 8, dsp::WindowKind::rect, false});
  ASSERT_EQ(s.bins(), 5);
  ASSERT_EQ(s.frames(), 1);
  auto v = s.values.index({torch::indexing::Slice(), 0});
  EXPECT_NEAR(torch::real(v[0]).item<double>(), 8.0, 1e-12);
  EXPECT_NEAR(torch::imag(v[0]).item<double>(), 0.0, 1e-12);
  EXPECT_LT(v.slice(0, 1).abs().max().item<double>(), 1e-12);
}

TEST(Stft, CosineMatchesDirectDft) {
  std::vector<double> x(8);
  for (int n = 0; n < 8; ++n) x[n] = std::cos(2 * std::numbers::pi * 2 * n / 8);
  auto s = dsp::stft(dsp::WaveSignal{x, 8}, {8, 8, 8, dsp::WindowKind::rect, false}).values;
  for (std::size_t k = 0; k < 5; ++k) {
    const auto ref = aero::testing::dft_bin(x, k);
    EXPECT_NEAR(torch::real(s[k][0]).item<double>(), ref.real(), 1e-12) << "bin " << k;
    EXPECT_NEAR(torch::imag(s[k][0]).item<double>(), ref.imag(), 1e-12) << "bin " << k;
  }
  EXPECT_NEAR(std::abs(aero::testing::dft_bin(x, 2)), 4.0, 1e-12);
}

TEST(Stft, CentredHannMatchesFramewiseOracle) {
  const auto x = noise(16000, 1000, 3);
  const dsp::StftConfig cfg{128, 96, 24, dsp::WindowKind::hann, true};
  auto s = dsp::stft(x, cfg).values;
  ASSERT_EQ(s.size(1), dsp::frame_count(cfg, 1000));
  const auto w = aero::testing::hann_periodic(96);
  for (std::size_t m : {0UL, 1UL, 20UL, static_cast<std::size_t>(s.size(1) - 1)}) {
    const auto ref = aero::testing::stft_frame(x.samples, 128, 96, 24, m, w);
    for (std::size_t k = 0; k < ref.size(); ++k) {
      EXPECT_NEAR(torch::real(s[k][m]).item<double>(), ref[k].real(), 1e-9);
      EXPECT_NEAR(torch::imag(s[k][m]).item<double>(), ref[k].imag(), 1e-9);
    }
  }
}

TEST(Stft, FrameCounts) {
  EXPECT_EQ(dsp::frame_count({512, 512, 64, dsp::WindowKind::hann, true}, 8192), 129);
  auto s = dsp::stft(noise(16000, 8192, 1), {512, 512, 64, dsp::WindowKind::hann, true});
  EXPECT_EQ(s.frames(), 129);
  EXPECT_EQ(s.bins(), 257);
  EXPECT_EQ(dsp::frame_count({8, 8, 4, dsp::WindowKind::rect, false}, 16), 3);
}

TEST(Stft, RejectsBadInput) {
  auto x = noise(8000, 100, 2);
  EXPECT_THROW(dsp::stft(x, {256, 256, 64, dsp::WindowKind::hann, false}), std::invalid_argument);
  x.samples[5] = std::nan("");
  EXPECT_THROW(dsp::stft(x, {64, 64, 16, dsp::WindowKind::hann, true}), std::invalid_argument);
  EXPECT_THROW(dsp::validate(dsp::StftConfig{64, 32, 48, dsp::WindowKind::hann, true}), std::invalid_argument);
  EXPECT_THROW(dsp::validate(dsp::StftConfig{63, 32, 8, dsp::WindowKind::hann, true}), std::invalid_argument);
}

TEST(Stft, LinearInInput) {
  const auto a = noise(8000, 2000, 4), b = noise(8000, 2000, 5);
  dsp::WaveSignal c{std::vector<double>(2000), 8000};
  for (int i = 0; i < 2000; ++i) c.samples[i] = 2.0 * a.samples[i] - 0.5 * b.samples[i];
  const dsp::StftConfig cfg = hann_cfg(256, 4);
  auto lhs = dsp::stft(c, cfg).values;
  auto rhs = 2.0 * dsp::stft(a, cfg).values - 0.5 * dsp::stft(b, cfg).values;
  EXPECT_LT((lhs - rhs).abs().max().item<double>(), 1e-10);
}

class RoundTrip : public ::testing::TestWithParam<std::tuple<int, int>> {};

TEST_P(RoundTrip, PerfectReconstruction) {
  const auto [length, denom] = GetParam();
  const auto x = noise(16000, static_cast<std::size_t>(length), 11 + length + denom);
  const auto cfg = hann_cfg(512, denom);
  auto y = dsp::istft(dsp::stft(x, cfg), cfg, length, 16000);
  ASSERT_EQ(y.size(), x.size());
  EXPECT_LT(rel_l2(dsp::to_tensor(y), dsp::to_tensor(x)), 1e-6);
}

INSTANTIATE_TEST_SUITE_P(Lengths, RoundTrip,
                         ::testing::Combine(::testing::Values(1600, 8192, 44100), ::testing::Values(2, 4, 8)));

TEST(Istft, ZeroSpectrogramGivesZeros) {
  const auto cfg = hann_cfg(256, 4);
  dsp::ComplexSpectrogram s{torch::zeros({129, 20}, torch::kComplexDouble), 8000};
  auto y = dsp::istft(s, cfg, 1234, 8000);
  ASSERT_EQ(y.size(), 1234u);
  for (double v : y.samples) EXPECT_EQ(v, 0.0);
}

TEST(Istft, ColaViolationNamesConfig) {
  // Hann with hop == win leaves zero-weight samples between frames.
  const dsp::StftConfig cfg{64, 64, 64, dsp::WindowKind::hann, false};
  auto s = dsp::stft(noise(8000, 640, 6), cfg);
  try {
    dsp::istft(s, cfg, 640, 8000);
    FAIL() << "expected COLA error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("fft 64"), std::string::npos) << e.what();
  }
}

TEST(Istft, RejectsBinMismatch) {
  dsp::ComplexSpectrogram s{torch::zeros({100, 4}, torch::kComplexDouble), 8000};
  EXPECT_THROW(dsp::istft(s, hann_cfg(256, 4), 100, 8000), std::invalid_argument);
}

TEST(Stft, GradientFlowsThroughRoundTrip) {
  auto x = torch::randn({2, 600}, torch::kFloat64).requires_grad_();
  const auto cfg = hann_cfg(128, 4);
  auto y = dsp::istft_tensor(dsp::stft_tensor(x, cfg), cfg, 600);
  y.sum().backward();
  // istft(stft(.)) is the identity, so d sum / dx = 1.
  EXPECT_LT((x.grad() - 1.0).abs().max().item<double>(), 1e-8);
}

// ---------------------------------------------------------------------------
// transform pair

TEST(TransformPair, TableConfigurations) {
  auto p = dsp::make_transform_pair(2, 512, dsp::OverlapRatio::quarter);
  EXPECT_EQ(p.analysis.fft_size, 512);
  EXPECT_EQ(p.analysis.win_length, 256);
  EXPECT_EQ(p.analysis.hop_length, 64);
  EXPECT_EQ(p.synthesis.fft_size, 512);
  EXPECT_EQ(p.synthesis.win_length, 512);
  EXPECT_EQ(p.synthesis.hop_length, 128);

  auto q = dsp::make_transform_pair(4, 1024, dsp::OverlapRatio::quarter);
  EXPECT_EQ(q.analysis.win_length, 256);
  EXPECT_EQ(q.analysis.hop_length, 64);
  EXPECT_EQ(q.synthesis.win_length, 1024);
  EXPECT_EQ(q.synthesis.hop_length, 256);
  EXPECT_EQ(q.network_bins(), 512);
}

TEST(TransformPair, IdentityScale) {
  auto p = dsp::make_transform_pair(1, 512, dsp::OverlapRatio::half);
  EXPECT_EQ(p.analysis, p.synthesis);
  EXPECT_EQ(p.synthesis.win_length, 512);
  EXPECT_EQ(p.synthesis.hop_length, 256);
}

TEST(TransformPair, HopScalesWithFactor) {
  for (int s : {2, 4, 8}) {
    for (auto r : {dsp::OverlapRatio::half, dsp::OverlapRatio::quarter, dsp::OverlapRatio::eighth}) {
      auto p = dsp::make_transform_pair(s, 1024, r);
      EXPECT_EQ(p.analysis.hop_length * s, p.synthesis.hop_length);
      EXPECT_EQ(p.analysis.win_length % 2, 0);
    }
  }
}

TEST(TransformPair, RejectsTinyWindow) {
  EXPECT_THROW(dsp::make_transform_pair(4, 4, dsp::OverlapRatio::half), std::invalid_argument);
  EXPECT_THROW(dsp::make_transform_pair(0, 512, dsp::OverlapRatio::half), std::invalid_argument);
}

TEST(TransformPair, ParsesOverlapRatio) {
  EXPECT_EQ(dsp::parse_overlap_ratio("1/8"), dsp::OverlapRatio::eighth);
  EXPECT_EQ(dsp::parse_overlap_ratio("0.5"), dsp::OverlapRatio::half);
  EXPECT_EQ(dsp::to_string(dsp::OverlapRatio::quarter), "1/4");
  EXPECT_THROW(dsp::parse_overlap_ratio("1/3"), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// complex-as-channels

TEST(Cac, DropsNyquistRow) {
  dsp::ComplexSpectrogram s{torch::randn({257, 10}, torch::kComplexDouble), 16000};
  auto c = dsp::to_cac(s, true);
  EXPECT_EQ(c.values.sizes(), (std::vector<int64_t>{2, 256, 10}));
  auto back = dsp::to_complex(c, true, 16000);
  ASSERT_EQ(back.bins(), 257);
  EXPECT_TRUE(torch::equal(back.values.slice(0, 0, 256), s.values.slice(0, 0, 256)));
  EXPECT_EQ(back.values[256].abs().max().item<double>(), 0.0);
}

TEST(Cac, RoundTripsBitExact) {
  dsp::ComplexSpectrogram s{torch::randn({129, 7}, torch::kComplexDouble), 8000};
  EXPECT_TRUE(torch::equal(dsp::to_complex(dsp::to_cac(s, false), false, 8000).values, s.values));
  auto c = dsp::to_cac(s, true);
  EXPECT_TRUE(torch::equal(dsp::to_cac(dsp::to_complex(c, true, 8000), true).values, c.values));
}

TEST(Cac, RealSignalHasRealDc) {
  auto s = dsp::stft(noise(8000, 4000, 8), hann_cfg(256, 4));
  auto c = dsp::to_cac(s, true);
  EXPECT_LT(c.values[1][0].abs().max().item<double>(), 1e-12);
}

TEST(Cac, RejectsWrongChannelCount) {
  dsp::CacArray c{torch::zeros({3, 256, 4}, torch::kFloat64)};
  EXPECT_THROW(dsp::to_complex(c, true, 8000), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// resampling and filtering

TEST(Resample, DcUpsampled) {
  dsp::WaveSignal x{std::vector<double>(4000, 0.5), 8000};
  auto y = dsp::sinc_resample(x, 16000);
  ASSERT_EQ(y.size(), 8000u);
  EXPECT_EQ(y.sample_rate, 16000);
  for (double v : y.samples) EXPECT_NEAR(v, 0.5, 1e-9);
}

TEST(Resample, OutputLengthIsRounded) {
  EXPECT_EQ(dsp::sinc_resample(noise(48000, 48000, 1), 8000).size(), 8000u);
  EXPECT_EQ(dsp::sinc_resample(noise(44100, 1001, 1), 11025).size(), 250u);  // round(250.25)
}

TEST(Resample, SinePreservedAtNewRate) {
  auto y = dsp::sinc_resample(sine(1000, 8000, 8000, 0.5), 16000);
  EXPECT_NEAR(aero::testing::tone_amplitude(y.samples, 1000, 16000), 0.5, 1e-3);
  // Phase and shape: compare against the analytic 16 kHz sine away from the edges.
  auto ref = sine(1000, 16000, 16000, 0.5);
  double err = 0.0;
  for (std::size_t i = 2000; i < 14000; ++i) err = std::max(err, std::abs(y.samples[i] - ref.samples[i]));
  EXPECT_LT(err, 1e-3);
}

TEST(Resample, PassbandAndNoImagesOnUpsampling) {
  auto x = sine(3500, 8000, 8000, 0.5);  // 0.875 x Nyquist
  auto y = dsp::sinc_resample(x, 16000);
  EXPECT_NEAR(aero::testing::tone_amplitude(y.samples, 3500, 16000), 0.5, 0.5 * 0.06);
  // Image of the tone would appear at 8000 - 3500 = 4500 Hz.
  EXPECT_LT(aero::testing::tone_amplitude(y.samples, 4500, 16000), 0.5 * 1e-2);
}

TEST(Resample, DownsamplingRemovesContentAboveNewNyquist) {
  auto x = sine(6000, 16000, 16000, 0.5);
  auto y = dsp::sinc_resample(x, 8000);
  // 6 kHz would alias to 2 kHz at 8 kHz.
  EXPECT_LT(aero::testing::tone_amplitude(y.samples, 2000, 8000), 0.5 * 1e-2);
}

TEST(Lowpass, PassbandAndStopband) {
  auto pass = dsp::lowpass_filter(sine(1000, 16000, 16000, 0.5), 3500);
  const double gain_db = 20 * std::log10(aero::testing::tone_amplitude(pass.samples, 1000, 16000) / 0.5);
  EXPECT_LT(std::abs(gain_db), 0.5);
  auto stop = dsp::lowpass_filter(sine(6000, 16000, 16000, 0.5), 3500);
  const double atten_db = 20 * std::log10(aero::testing::tone_amplitude(stop.samples, 6000, 16000) / 0.5);
  EXPECT_LE(atten_db, -40.0);
  auto edge = dsp::lowpass_filter(sine(1.2 * 3500, 16000, 16000, 0.5), 3500);
  EXPECT_LE(20 * std::log10(aero::testing::tone_amplitude(edge.samples, 4200, 16000) / 0.5), -40.0);
}

TEST(Lowpass, ZeroInZeroOut) {
  auto y = dsp::lowpass_filter(dsp::WaveSignal{std::vector<double>(1000, 0.0), 16000}, 3500);
  for (double v : y.samples) EXPECT_EQ(v, 0.0);
}

TEST(Lowpass, RejectsCutoffOutOfRange) {
  auto x = noise(16000, 100, 1);
  EXPECT_THROW(dsp::lowpass_filter(x, 0), std::invalid_argument);
  EXPECT_THROW(dsp::lowpass_filter(x, 8000), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// WaveSignal and WAV files

TEST(Wave, ValidateRejectsBadSignals) {
  EXPECT_THROW(dsp::validate(dsp::WaveSignal{{}, 8000}), std::invalid_argument);
  EXPECT_THROW(dsp::validate(dsp::WaveSignal{{0.1}, 0}), std::invalid_argument);
  EXPECT_THROW(dsp::validate(dsp::WaveSignal{{std::numeric_limits<double>::infinity()}, 8000}),
               std::invalid_argument);
}

TEST(Wave, FloatWavRoundTrip) {
  const auto dir = aero::testing::temp_dir("wav");
  auto x = noise(22050, 3000, 9);
  dsp::write_wav(dir / "a.wav", x);
  auto y = dsp::read_wav(dir / "a.wav");
  ASSERT_EQ(y.size(), x.size());
  EXPECT_EQ(y.sample_rate, 22050);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y.samples[i], x.samples[i], 1e-7);
  const auto info = dsp::probe_wav(dir / "a.wav");
  EXPECT_EQ(info.frames, 3000);
  EXPECT_EQ(info.channels, 1);
  std::filesystem::remove_all(dir);
}

TEST(Wave, Pcm16RoundTripAndClipping) {
  const auto dir = aero::testing::temp_dir("wav16");
  dsp::WaveSignal x{{0.0, 0.5, -0.5, 2.0, -2.0}, 8000};
  dsp::write_wav(dir / "b.wav", x, dsp::WavSampleFormat::pcm16);
  auto y = dsp::read_wav(dir / "b.wav");
  EXPECT_NEAR(y.samples[1], 0.5, 1.0 / 32768);
  EXPECT_NEAR(y.samples[3], 1.0, 1.0 / 32768);
  EXPECT_NEAR(y.samples[4], -1.0, 1.0 / 32768);
  std::filesystem::remove_all(dir);
}

TEST(Wave, StereoIsDownmixed) {
  const auto dir = aero::testing::temp_dir("stereo");
  // Hand-built 16-bit stereo file: L = 0.5, R = -0.25 (two frames).
  std::ofstream f(dir / "s.wav", std::ios::binary);
  auto u32 = [&f](uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&f](uint16_t v) { f.write(reinterpret_cast<const char*>(&v), 2); };
  f.write("RIFF", 4);
  u32(36 + 8);
  f.write("WAVEfmt ", 8);
  u32(16);
  u16(1);
  u16(2);
  u32(8000);
  u32(8000 * 4);
  u16(4);
  u16(16);
  f.write("data", 4);
  u32(8);
  for (int i = 0; i < 2; ++i) {
    u16(static_cast<uint16_t>(16384));
    u16(static_cast<uint16_t>(-8192));
  }
  f.close();
  auto r = dsp::read_wav_ex(dir / "s.wav");
  EXPECT_TRUE(r.downmixed);
  EXPECT_EQ(r.source_channels, 2);
  ASSERT_EQ(r.signal.size(), 2u);
  EXPECT_NEAR(r.signal.samples[0], 0.125, 1e-9);
  std::filesystem::remove_all(dir);
}

TEST(Wave, CorruptFileThrows) {
  const auto dir = aero::testing::temp_dir("corrupt");
  std::ofstream(dir / "bad.wav") << "not a wav file";
  EXPECT_THROW(dsp::read_wav(dir / "bad.wav"), std::runtime_error);
  std::filesystem::remove_all(dir);
}
