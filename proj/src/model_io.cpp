#include "aero/model_io.hpp"

#include "aero/container.hpp"

namespace aero::model {

void save_parameters(const ParameterSet& params, const std::filesystem::path& path) {
  io::Container box;
  box.meta = {{"format", kParameterFileFormat}, {"version", params.version}, {"config", to_json(params.config)}};
  box.arrays = params.arrays;
  io::write_container(path, box);
}

ParameterSet load_parameters(const std::filesystem::path& path) {
  auto box = io::read_container(path);
  const auto format = box.meta.value("format", std::string());
  ParameterSet params;
  if (format == kParameterFileFormat) {
    params.version = box.meta.value("version", std::string(kParameterSetVersion));
    params.config = model_config_from_json(box.meta.at("config"));
    params.arrays = box.arrays;
  } else if (box.meta.contains("generator_config")) {
    params.version = box.meta.value("generator_version", std::string(kParameterSetVersion));
    params.config = model_config_from_json(box.meta.at("generator_config"));
    const std::string prefix = "generator/";
    for (const auto& item : box.arrays) {
      if (item.key().rfind(prefix, 0) == 0) params.arrays.insert(item.key().substr(prefix.size()), item.value());
    }
  } else {
    throw io::ContainerError(path.string() + ": holds neither parameters nor a checkpoint (format '" + format + "')");
  }
  return params;
}

}  // namespace aero::model
