#pragma once

#include <filesystem>

#include "aero/generator.hpp"

namespace aero::model {

inline constexpr const char* kParameterFileFormat = "aero-params/1";

/// Container file holding one ParameterSet.
void save_parameters(const ParameterSet& params, const std::filesystem::path& path);
/// Accepts a parameter file or a training checkpoint (its generator is taken).
ParameterSet load_parameters(const std::filesystem::path& path);

}  // namespace aero::model
