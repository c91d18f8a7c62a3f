#include "aero/generator.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "aero/common.hpp"
#include "aero/resample.hpp"

namespace aero::model {

namespace nn = torch::nn;

AeroGeneratorImpl::AeroGeneratorImpl(ModelConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  encoder_ = register_module("encoder", nn::ModuleList());
  decoder_ = register_module("decoder", nn::ModuleList());
  for (int layer = 1; layer <= cfg_.depth(); ++layer) encoder_->push_back(EncoderLayer(cfg_, layer));
  for (int layer = cfg_.depth(); layer >= 1; --layer) decoder_->push_back(DecoderLayer(cfg_, layer));
}

torch::Tensor AeroGeneratorImpl::unfold_frames(const torch::Tensor& x) const {
  if (x.dim() != 4 || x.size(1) != 2 || x.size(2) != cfg_.freq_bins) {
    throw std::invalid_argument("generator expects [batch, 2, " + std::to_string(cfg_.freq_bins) +
                                ", frames], got " + c10::str(x.sizes()));
  }
  return x.permute({0, 3, 1, 2}).reshape({x.size(0) * x.size(3), 2, x.size(2)});
}

torch::Tensor AeroGeneratorImpl::forward(const torch::Tensor& x) {
  const int64_t batch = x.size(0);
  const int64_t frames = x.dim() == 4 ? x.size(3) : 0;
  auto h = unfold_frames(x);
  torch::Tensor scale;
  if (cfg_.normalize_input) {
    scale = 1e-5 + x.reshape({batch, -1}).std(1, /*unbiased=*/false);
    h = h / scale.repeat_interleave(frames).view({-1, 1, 1});
  }
  std::vector<torch::Tensor> skips;
  for (std::size_t i = 0; i < encoder_->size(); ++i) {
    h = encoder_[i]->as<EncoderLayerImpl>()->forward(h, batch, frames);
    require_finite(h, "encoder." + std::to_string(i));
    skips.push_back(h);
  }
  for (std::size_t i = 0; i < decoder_->size(); ++i) {
    h = decoder_[i]->as<DecoderLayerImpl>()->forward(h, skips[skips.size() - 1 - i]);
    require_finite(h, "decoder." + std::to_string(i));
  }
  if (cfg_.normalize_input) h = h * scale.repeat_interleave(frames).view({-1, 1, 1});
  return h.view({batch, frames, 2, cfg_.freq_bins}).permute({0, 2, 3, 1}).contiguous();
}

torch::Tensor AeroGeneratorImpl::encode(const torch::Tensor& x) {
  const int64_t batch = x.size(0);
  const int64_t frames = x.dim() == 4 ? x.size(3) : 0;
  auto h = unfold_frames(x);
  if (cfg_.normalize_input) {
    auto scale = 1e-5 + x.reshape({batch, -1}).std(1, false);
    h = h / scale.repeat_interleave(frames).view({-1, 1, 1});
  }
  for (auto& m : *encoder_) h = m->as<EncoderLayerImpl>()->forward(h, batch, frames);
  return h.view({batch, frames, h.size(1), h.size(2)}).permute({0, 2, 3, 1}).contiguous();
}

void AeroGeneratorImpl::initialize(uint64_t seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  for (auto& m : *encoder_) m->as<EncoderLayerImpl>()->init(gen);
  for (auto& m : *decoder_) m->as<DecoderLayerImpl>()->init(gen);
}

ParameterSet AeroGeneratorImpl::snapshot() const {
  ParameterSet out;
  out.config = cfg_;
  for (const auto& p : named_parameters()) out.arrays.insert(p.key(), p.value().detach().clone());
  return out;
}

void AeroGeneratorImpl::load(const ParameterSet& params) {
  torch::NoGradGuard guard;
  auto own = named_parameters();
  for (auto& p : own) {
    const auto* src = params.arrays.find(p.key());
    if (src == nullptr) throw std::runtime_error("parameter set lacks '" + p.key() + "'");
    if (src->sizes() != p.value().sizes()) {
      throw std::runtime_error("shape mismatch for '" + p.key() + "': expected " + c10::str(p.value().sizes()) +
                               ", got " + c10::str(src->sizes()));
    }
    p.value().copy_(*src);
  }
  for (const auto& item : params.arrays) {
    if (own.find(item.key()) == nullptr) {
      std::cerr << "warning: ignoring unknown generator parameter '" << item.key() << "'\n";
    }
  }
}

ParameterSet build_model(const ModelConfig& cfg, uint64_t seed) {
  AeroGenerator net(cfg);
  net->initialize(seed);
  return net->snapshot();
}

AeroGenerator make_generator(const ParameterSet& params) {
  AeroGenerator net(params.config);
  net->load(params);
  return net;
}

dsp::CacArray model_forward(AeroGenerator& net, const dsp::CacArray& x) {
  torch::NoGradGuard guard;
  net->eval();
  auto out = net->forward(x.values.to(torch::kFloat32).unsqueeze(0)).squeeze(0);
  return {out.to(x.values.scalar_type())};
}

dsp::CacArray model_forward(const ParameterSet& params, const dsp::CacArray& x) {
  auto net = make_generator(params);
  return model_forward(net, x);
}

torch::Tensor spectral_upsample(const SpectralMapper& net, const torch::Tensor& lr,
                                const dsp::SpectroTransformSpec& spec, int64_t out_length) {
  auto spec_lr = dsp::stft_tensor(lr, spec.analysis);
  const int64_t frames = std::min(spec_lr.size(-1), dsp::frame_count(spec.synthesis, out_length));
  auto cac = dsp::complex_to_cac(spec_lr.narrow(-1, 0, frames), /*drop_nyquist=*/true);
  auto out = net(cac);
  return dsp::istft_tensor(dsp::cac_to_complex(out, true), spec.synthesis, out_length);
}

UpsamplingMode parse_upsampling_mode(const std::string& name) {
  if (name == "spectral") return UpsamplingMode::spectral;
  if (name == "time") return UpsamplingMode::time;
  throw std::invalid_argument("unknown upsampling mode '" + name + "' (expected spectral or time)");
}

std::string to_string(UpsamplingMode m) { return m == UpsamplingMode::time ? "time" : "spectral"; }

torch::Tensor time_upsample(const SpectralMapper& net, const torch::Tensor& lr,
                            const dsp::SpectroTransformSpec& spec, int64_t out_length) {
  // Only the rate ratio matters to the resampler.
  constexpr int kUnitRate = 1000;
  auto rows = lr.detach().to(torch::kFloat64).reshape({-1, lr.size(-1)});
  std::vector<torch::Tensor> up;
  for (int64_t i = 0; i < rows.size(0); ++i) {
    auto w = dsp::sinc_resample(dsp::from_tensor(rows[i], kUnitRate), kUnitRate * spec.scale);
    w.samples.resize(static_cast<std::size_t>(out_length), 0.0);
    up.push_back(dsp::to_tensor(w));
  }
  auto x = torch::stack(up).to(lr.scalar_type());
  auto sizes = lr.sizes().vec();
  sizes.back() = out_length;
  x = x.view(sizes);
  auto cac = dsp::complex_to_cac(dsp::stft_tensor(x, spec.synthesis), /*drop_nyquist=*/true);
  return dsp::istft_tensor(dsp::cac_to_complex(net(cac), true), spec.synthesis, out_length);
}

torch::Tensor upsample(const SpectralMapper& net, const torch::Tensor& lr, const dsp::SpectroTransformSpec& spec,
                       int64_t out_length, UpsamplingMode mode) {
  return mode == UpsamplingMode::time ? time_upsample(net, lr, spec, out_length)
                                      : spectral_upsample(net, lr, spec, out_length);
}

dsp::WaveSignal super_resolve(const SpectralMapper& net, const dsp::WaveSignal& x,
                              const dsp::SpectroTransformSpec& spec, UpsamplingMode mode) {
  dsp::validate(x, "super_resolve input");
  torch::NoGradGuard guard;
  const int64_t out_length = static_cast<int64_t>(x.size()) * spec.scale;
  auto y = upsample(net, dsp::to_tensor(x).unsqueeze(0), spec, out_length, mode);
  return dsp::from_tensor(y, x.sample_rate * spec.scale);
}

dsp::WaveSignal super_resolve(AeroGenerator& net, const dsp::WaveSignal& x, const dsp::SpectroTransformSpec& spec,
                              UpsamplingMode mode) {
  if (spec.network_bins() != net->config().freq_bins) {
    throw std::invalid_argument("transform yields " + std::to_string(spec.network_bins()) +
                                " network rows but the model expects " + std::to_string(net->config().freq_bins));
  }
  net->eval();
  SpectralMapper mapper = [&net](const torch::Tensor& cac) {
    return net->forward(cac.to(torch::kFloat32)).to(cac.scalar_type());
  };
  return super_resolve(mapper, x, spec, mode);
}

dsp::WaveSignal super_resolve(const ParameterSet& params, const dsp::WaveSignal& x,
                              const dsp::SpectroTransformSpec& spec, UpsamplingMode mode) {
  auto net = make_generator(params);
  return super_resolve(net, x, spec, mode);
}

std::string ParameterSummary::to_table() const {
  std::size_t width = 5;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width)) << "name" << "  " << std::setw(20) << "shape"
     << "  count\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(static_cast<int>(width)) << r.name << "  " << std::setw(20)
       << c10::str(c10::IntArrayRef(r.shape)) << "  " << r.count << "\n";
  }
  os << "total " << total << "\n";
  return os.str();
}

ParameterSummary parameter_summary(const ParameterSet& params) {
  ParameterSummary s;
  for (const auto& item : params.arrays) {
    ParameterSummary::Row row{item.key(), item.value().sizes().vec(), item.value().numel()};
    s.total += row.count;
    s.rows.push_back(std::move(row));
  }
  return s;
}

}  // namespace aero::model
