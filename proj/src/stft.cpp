#include "aero/stft.hpp"

#include <numbers>
#include <sstream>
#include <stdexcept>

namespace aero::dsp {

namespace F = torch::nn::functional;

std::string StftConfig::describe() const {
  std::ostringstream os;
  os << "{fft " << fft_size << ", win " << win_length << ", hop " << hop_length << ", "
     << (window == WindowKind::hann ? "hann" : "rect") << (centered ? ", centered" : "") << "}";
  return os.str();
}

void validate(const StftConfig& cfg) {
  if (cfg.hop_length < 1 || cfg.hop_length > cfg.win_length || cfg.win_length > cfg.fft_size) {
    throw std::invalid_argument("invalid STFT config " + cfg.describe() +
                                ": need 1 <= hop <= win <= fft");
  }
  if (cfg.fft_size % 2 != 0) {
    throw std::invalid_argument("invalid STFT config " + cfg.describe() + ": fft size must be even");
  }
}

torch::Tensor make_window(const StftConfig& cfg, torch::Dtype dtype) {
  const auto opts = torch::TensorOptions().dtype(dtype);
  if (cfg.window == WindowKind::rect) return torch::ones({cfg.win_length}, opts);
  auto n = torch::arange(cfg.win_length, opts);
  return 0.5 - 0.5 * torch::cos(2.0 * std::numbers::pi * n / cfg.win_length);
}

int64_t frame_count(const StftConfig& cfg, int64_t length) {
  if (cfg.centered) return length / cfg.hop_length + 1;
  if (length < cfg.win_length) return 0;
  return (length - cfg.win_length) / cfg.hop_length + 1;
}

namespace {

// Indices realising reflect padding for any pad width (the reflection repeats
// when the pad exceeds the signal length).
torch::Tensor reflect_indices(int64_t length, int64_t pad) {
  auto i = torch::arange(-pad, length + pad, torch::kLong);
  if (length == 1) return torch::zeros_like(i);
  const int64_t period = 2 * (length - 1);
  auto j = torch::remainder(i, period);
  return torch::where(j >= length, period - j, j);
}

int64_t center_pad(const StftConfig& cfg) { return cfg.centered ? cfg.win_length / 2 : 0; }

}  // namespace

torch::Tensor stft_tensor(const torch::Tensor& x, const StftConfig& cfg) {
  validate(cfg);
  if (x.dim() < 1 || x.size(-1) < 1) throw std::invalid_argument("stft: empty input");
  if (!torch::isfinite(x).all().item<bool>()) throw std::invalid_argument("stft: non-finite input");
  const int64_t length = x.size(-1);
  auto lead = x.sizes().vec();
  lead.pop_back();
  auto flat = x.reshape({-1, length});
  if (cfg.centered) {
    flat = flat.index_select(1, reflect_indices(length, center_pad(cfg)).to(x.device()));
  } else if (length < cfg.win_length) {
    throw std::invalid_argument("stft: win_length " + std::to_string(cfg.win_length) +
                                " exceeds signal length " + std::to_string(length) +
                                " with centered=false");
  }
  auto window = make_window(cfg, x.scalar_type()).to(x.device());
  auto frames = flat.unfold(1, cfg.win_length, cfg.hop_length) * window;
  const int64_t off = (cfg.fft_size - cfg.win_length) / 2;
  if (cfg.fft_size != cfg.win_length) {
    frames = torch::constant_pad_nd(frames, {off, cfg.fft_size - cfg.win_length - off});
  }
  auto spec = torch::fft::rfft(frames, cfg.fft_size, -1).transpose(1, 2);
  lead.push_back(spec.size(1));
  lead.push_back(spec.size(2));
  return spec.reshape(lead);
}

torch::Tensor istft_tensor(const torch::Tensor& spec, const StftConfig& cfg, int64_t out_length) {
  validate(cfg);
  if (spec.dim() < 2 || spec.size(-2) != cfg.bins()) {
    throw std::invalid_argument("istft: spectrogram bins do not match " + cfg.describe());
  }
  if (out_length < 1) throw std::invalid_argument("istft: out_length must be positive");
  const int64_t bins = spec.size(-2);
  const int64_t n_frames = spec.size(-1);
  auto lead = spec.sizes().vec();
  lead.resize(lead.size() - 2);
  auto flat = spec.reshape({-1, bins, n_frames});
  const auto real_type = c10::toRealValueType(spec.scalar_type());
  auto window = make_window(cfg, real_type).to(spec.device());

  const int64_t off = (cfg.fft_size - cfg.win_length) / 2;
  auto frames = torch::fft::irfft(flat.transpose(1, 2), cfg.fft_size, -1)
                    .narrow(-1, off, cfg.win_length) *
                window;  // [B, N, win]
  const int64_t total = (n_frames - 1) * cfg.hop_length + cfg.win_length;
  auto fold = F::FoldFuncOptions({1, total}, {1, cfg.win_length}).stride({1, cfg.hop_length});
  auto ola = F::fold(frames.transpose(1, 2), fold).reshape({flat.size(0), total});
  auto wsq = (window * window).reshape({1, cfg.win_length, 1}).expand({1, cfg.win_length, n_frames});
  auto denom = F::fold(wsq.contiguous(), fold).reshape({total});

  const int64_t start = center_pad(cfg);
  const int64_t stop = std::min(start + out_length, total);
  torch::Tensor out;
  if (stop > start) {
    auto d = denom.narrow(0, start, stop - start);
    if (d.min().item<double>() < 1e-8) {
      throw std::runtime_error("istft: overlap-add normaliser below 1e-8 (COLA violated) for " +
                               cfg.describe());
    }
    out = ola.narrow(1, start, stop - start) / d;
    if (stop - start < out_length) out = torch::constant_pad_nd(out, {0, out_length - (stop - start)});
  } else {
    out = torch::zeros({flat.size(0), out_length}, ola.options());
  }
  lead.push_back(out_length);
  return out.reshape(lead);
}

ComplexSpectrogram stft(const WaveSignal& x, const StftConfig& cfg) {
  validate(x, "stft input");
  return {stft_tensor(to_tensor(x), cfg), x.sample_rate};
}

WaveSignal istft(const ComplexSpectrogram& s, const StftConfig& cfg, int64_t out_length,
                 int sample_rate) {
  return from_tensor(istft_tensor(s.values, cfg, out_length), sample_rate);
}

}  // namespace aero::dsp
