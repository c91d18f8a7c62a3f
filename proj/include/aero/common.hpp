#pragma once

#include <stdexcept>
#include <string>

#include <torch/torch.h>

namespace aero {

/// Raised when a tensor produced inside a network stage holds NaN or Inf.
class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& stage)
      : std::runtime_error("non-finite values produced at " + stage), stage_(stage) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Throws NonFiniteError naming `stage` when `t` contains NaN/Inf.
inline void require_finite(const torch::Tensor& t, const std::string& stage) {
  if (t.numel() > 0 && !torch::isfinite(t).all().item<bool>()) throw NonFiniteError(stage);
}

}  // namespace aero
