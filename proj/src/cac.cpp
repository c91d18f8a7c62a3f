#include "aero/cac.hpp"

#include <stdexcept>

namespace aero::dsp {

torch::Tensor complex_to_cac(const torch::Tensor& spec, bool drop_nyquist) {
  if (!spec.is_complex()) throw std::invalid_argument("to_cac: expected a complex spectrogram");
  auto s = drop_nyquist ? spec.narrow(-2, 0, spec.size(-2) - 1) : spec;
  return torch::stack({torch::real(s), torch::imag(s)}, -3);
}

torch::Tensor cac_to_complex(const torch::Tensor& cac, bool drop_nyquist) {
  if (cac.dim() < 3 || cac.size(-3) != 2) {
    throw std::invalid_argument("to_complex: expected 2 channels (real, imaginary), got shape " +
                                c10::str(cac.sizes()));
  }
  auto s = torch::complex(cac.select(-3, 0), cac.select(-3, 1));
  if (drop_nyquist) {
    auto pad_shape = s.sizes().vec();
    pad_shape[pad_shape.size() - 2] = 1;
    s = torch::cat({s, torch::zeros(pad_shape, s.options())}, -2);
  }
  return s;
}

CacArray to_cac(const ComplexSpectrogram& s, bool drop_nyquist) {
  if (s.values.dim() != 2) throw std::invalid_argument("to_cac: expected [bins, frames]");
  return {complex_to_cac(s.values, drop_nyquist)};
}

ComplexSpectrogram to_complex(const CacArray& c, bool drop_nyquist, int source_rate) {
  if (c.values.dim() != 3) throw std::invalid_argument("to_complex: expected [2, bins, frames]");
  return {cac_to_complex(c.values, drop_nyquist), source_rate};
}

}  // namespace aero::dsp
