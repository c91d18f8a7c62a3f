#include "aero/container.hpp"

#include <cstring>
#include <fstream>
#include <vector>

namespace aero::io {

namespace {

constexpr char kMagic[8] = {'A', 'E', 'R', 'O', 'C', 'K', 'P', 'T'};
constexpr char kTrailer[8] = {'A', 'E', 'R', 'O', 'E', 'N', 'D', '.'};

std::string dtype_name(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return "f32";
    case torch::kFloat64: return "f64";
    case torch::kInt64: return "i64";
    default: throw ContainerError("unsupported array dtype " + std::string(c10::toString(t)));
  }
}

torch::ScalarType dtype_from(const std::string& name) {
  if (name == "f32") return torch::kFloat32;
  if (name == "f64") return torch::kFloat64;
  if (name == "i64") return torch::kInt64;
  throw ContainerError("unknown array dtype '" + name + "'");
}

}  // namespace

void write_container(const std::filesystem::path& path, const Container& c) {
  nlohmann::json index = nlohmann::json::array();
  std::vector<torch::Tensor> blobs;
  std::uint64_t offset = 0;
  for (const auto& item : c.arrays) {
    auto t = item.value().detach().to(torch::kCPU).contiguous();
    const auto nbytes = static_cast<std::uint64_t>(t.numel() * t.element_size());
    index.push_back({{"name", item.key()},
                     {"dtype", dtype_name(t.scalar_type())},
                     {"shape", t.sizes().vec()},
                     {"offset", offset},
                     {"nbytes", nbytes}});
    offset += nbytes;
    blobs.push_back(t);
  }
  const std::string header = nlohmann::json{{"meta", c.meta}, {"arrays", index}}.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ContainerError("cannot open " + tmp.string() + " for writing");
    const std::uint32_t version = kContainerVersion;
    const std::uint64_t header_len = header.size();
    out.write(kMagic, 8);
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&header_len), sizeof header_len);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& t : blobs) {
      out.write(static_cast<const char*>(t.data_ptr()), static_cast<std::streamsize>(t.numel() * t.element_size()));
    }
    out.write(kTrailer, 8);
    out.flush();
    if (!out) throw ContainerError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw ContainerError("cannot open " + path.string());
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);
  constexpr std::uint64_t fixed = 8 + sizeof(std::uint32_t) + sizeof(std::uint64_t);
  if (file_size < fixed + 8) throw ContainerError(path.string() + ": truncated container (header incomplete)");

  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t header_len = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&header_len), sizeof header_len);
  if (std::memcmp(magic, kMagic, 8) != 0) throw ContainerError(path.string() + ": not an aero container");
  if (version != kContainerVersion) {
    throw ContainerError(path.string() + ": container format version " + std::to_string(version) +
                         " is not supported (expected " + std::to_string(kContainerVersion) + ")");
  }
  if (fixed + header_len + 8 > file_size) throw ContainerError(path.string() + ": truncated container (header)");
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw ContainerError(path.string() + ": corrupt header: " + e.what());
  }

  const std::uint64_t blob_start = fixed + header_len;
  std::uint64_t blob_len = 0;
  for (const auto& a : parsed.at("arrays")) blob_len = std::max(blob_len, a.at("offset").get<std::uint64_t>() + a.at("nbytes").get<std::uint64_t>());
  if (blob_start + blob_len + 8 != file_size) {
    throw ContainerError(path.string() + ": truncated or oversized container (expected " +
                         std::to_string(blob_start + blob_len + 8) + " bytes, found " + std::to_string(file_size) + ")");
  }
  in.seekg(static_cast<std::streamoff>(blob_start + blob_len));
  char trailer[8];
  in.read(trailer, 8);
  if (!in || std::memcmp(trailer, kTrailer, 8) != 0) throw ContainerError(path.string() + ": missing end marker");

  Container c;
  c.meta = parsed.value("meta", nlohmann::json::object());
  for (const auto& a : parsed.at("arrays")) {
    const auto shape = a.at("shape").get<std::vector<int64_t>>();
    auto t = torch::empty(shape, torch::TensorOptions().dtype(dtype_from(a.at("dtype").get<std::string>())));
    const auto nbytes = a.at("nbytes").get<std::uint64_t>();
    if (nbytes != static_cast<std::uint64_t>(t.numel() * t.element_size())) {
      throw ContainerError(path.string() + ": size mismatch for array " + a.at("name").get<std::string>());
    }
    in.seekg(static_cast<std::streamoff>(blob_start + a.at("offset").get<std::uint64_t>()));
    in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(nbytes));
    if (!in) throw ContainerError(path.string() + ": truncated array data");
    c.arrays.insert(a.at("name").get<std::string>(), t);
  }
  return c;
}

}  // namespace aero::io
