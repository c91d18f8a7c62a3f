#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace aero::io {

inline constexpr std::uint32_t kContainerVersion = 1;

class ContainerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Binary layout:
///   "AEROCKPT" | u32 version | u64 header bytes | JSON header | array blob | "AEROEND."
/// The header holds free-form `meta` plus an index of arrays (name, dtype, shape,
/// offset, nbytes). Readers ignore keys they do not know.
struct Container {
  nlohmann::json meta = nlohmann::json::object();
  torch::OrderedDict<std::string, torch::Tensor> arrays;
};

/// Writes to a sibling temp file and renames over `path`.
void write_container(const std::filesystem::path& path, const Container& c);
/// Throws ContainerError on bad magic, version mismatch or truncation.
Container read_container(const std::filesystem::path& path);

}  // namespace aero::io
