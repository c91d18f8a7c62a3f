#include "aero/mushra_export.hpp"

#include <fstream>
#include <regex>
#include <set>
#include <stdexcept>

#include "aero/resample.hpp"
#include "aero/wave.hpp"

namespace aero::mushra {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::regex& name_pattern() {
  static const std::regex re("^[A-Za-z0-9_.-]+$");
  return re;
}

}  // namespace

json to_json(const SessionManifest& m) {
  json items = json::array();
  for (const auto& it : m.items) {
    json systems = json::array();
    for (const auto& s : it.systems) systems.push_back({{"name", s.name}, {"path", s.path}});
    items.push_back({{"id", it.id}, {"reference", it.reference}, {"anchor", it.anchor}, {"systems", systems}});
  }
  return {{"items", items}, {"scale", m.scale}};
}

const json& session_manifest_schema() {
  static const json schema = json::parse(R"({
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "$id": "aero/session-manifest.schema.json",
  "title": "MUSHRA session manifest",
  "type": "object",
  "required": ["items", "scale"],
  "additionalProperties": false,
  "properties": {
    "scale": {"const": "0-100"},
    "items": {
      "type": "array",
      "minItems": 1,
      "items": {
        "type": "object",
        "required": ["id", "reference", "anchor", "systems"],
        "additionalProperties": false,
        "properties": {
          "id": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
          "reference": {"type": "string", "minLength": 1},
          "anchor": {"type": "string", "minLength": 1},
          "systems": {
            "type": "array",
            "minItems": 1,
            "items": {
              "type": "object",
              "required": ["name", "path"],
              "additionalProperties": false,
              "properties": {
                "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                "path": {"type": "string", "minLength": 1}
              }
            }
          }
        }
      }
    }
  }
})");
  return schema;
}

std::vector<std::string> validate_session_manifest(const json& j, const fs::path& base_dir) {
  std::vector<std::string> errors;
  auto err = [&errors](const std::string& where, const std::string& what) { errors.push_back(where + ": " + what); };
  auto allow_only = [&](const json& obj, const std::set<std::string>& keys, const std::string& where) {
    for (const auto& [k, v] : obj.items()) {
      if (!keys.count(k)) err(where, "unexpected property '" + k + "'");
    }
  };
  auto check_file = [&](const json& v, const std::string& where) {
    if (!v.is_string() || v.get<std::string>().empty()) {
      err(where, "must be a non-empty string");
      return;
    }
    if (!base_dir.empty() && !fs::is_regular_file(base_dir / v.get<std::string>())) {
      err(where, "missing audio file " + (base_dir / v.get<std::string>()).string());
    }
  };

  if (!j.is_object()) return {"$: manifest must be a JSON object"};
  allow_only(j, {"items", "scale"}, "$");
  if (!j.contains("scale")) {
    err("$", "missing 'scale'");
  } else if (j["scale"] != "0-100") {
    err("$.scale", "must be \"0-100\"");
  }
  if (!j.contains("items") || !j["items"].is_array()) {
    err("$", "'items' must be an array");
    return errors;
  }
  if (j["items"].empty()) err("$.items", "must contain at least one item");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j["items"].size(); ++i) {
    const auto& it = j["items"][i];
    const std::string where = "$.items[" + std::to_string(i) + "]";
    if (!it.is_object()) {
      err(where, "must be an object");
      continue;
    }
    allow_only(it, {"id", "reference", "anchor", "systems"}, where);
    for (const char* key : {"id", "reference", "anchor", "systems"}) {
      if (!it.contains(key)) err(where, std::string("missing '") + key + "'");
    }
    if (it.contains("id")) {
      if (!it["id"].is_string() || !std::regex_match(it["id"].get<std::string>(), name_pattern())) {
        err(where + ".id", "must match ^[A-Za-z0-9_.-]+$");
      } else if (!ids.insert(it["id"].get<std::string>()).second) {
        err(where + ".id", "duplicate id '" + it["id"].get<std::string>() + "'");
      }
    }
    if (it.contains("reference")) check_file(it["reference"], where + ".reference");
    if (it.contains("anchor")) check_file(it["anchor"], where + ".anchor");
    if (!it.contains("systems")) continue;
    if (!it["systems"].is_array() || it["systems"].empty()) {
      err(where + ".systems", "must be a non-empty array");
      continue;
    }
    std::set<std::string> names;
    for (std::size_t k = 0; k < it["systems"].size(); ++k) {
      const auto& s = it["systems"][k];
      const std::string sw = where + ".systems[" + std::to_string(k) + "]";
      if (!s.is_object()) {
        err(sw, "must be an object");
        continue;
      }
      allow_only(s, {"name", "path"}, sw);
      if (!s.contains("name") || !s["name"].is_string() ||
          !std::regex_match(s["name"].get<std::string>(), name_pattern())) {
        err(sw + ".name", "must match ^[A-Za-z0-9_.-]+$");
      } else if (!names.insert(s["name"].get<std::string>()).second) {
        err(sw + ".name", "duplicate system '" + s["name"].get<std::string>() + "'");
      }
      if (!s.contains("path")) {
        err(sw, "missing 'path'");
      } else {
        check_file(s["path"], sw + ".path");
      }
    }
  }
  return errors;
}

SessionManifest session_manifest_from_json(const json& j) {
  const auto errors = validate_session_manifest(j);
  if (!errors.empty()) {
    std::string msg = "invalid session manifest:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw std::invalid_argument(msg);
  }
  SessionManifest m;
  m.scale = j.at("scale").get<std::string>();
  for (const auto& it : j.at("items")) {
    SessionItem item{it.at("id").get<std::string>(), it.at("reference").get<std::string>(),
                     it.at("anchor").get<std::string>(), {}};
    for (const auto& s : it.at("systems")) item.systems.push_back({s.at("name"), s.at("path")});
    m.items.push_back(std::move(item));
  }
  return m;
}

SessionManifest mushra_export(const ExportRequest& req) {
  if (!fs::is_directory(req.reference_dir)) {
    throw std::invalid_argument("reference directory not found: " + req.reference_dir.string());
  }
  if (req.systems.empty()) throw std::invalid_argument("mushra-export needs at least one system");
  for (const auto& [name, dir] : req.systems) {
    if (!std::regex_match(name, name_pattern()) || name == "reference" || name == "anchor") {
      throw std::invalid_argument("invalid system name '" + name + "'");
    }
  }

  std::vector<fs::path> refs;
  for (const auto& e : fs::recursive_directory_iterator(req.reference_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".wav") refs.push_back(fs::relative(e.path(), req.reference_dir));
  }
  std::sort(refs.begin(), refs.end());
  if (refs.empty()) throw std::invalid_argument("no .wav references under " + req.reference_dir.string());

  SessionManifest m;
  for (const auto& rel : refs) {
    auto id = rel;
    id.replace_extension();
    std::string item_id = std::regex_replace(id.generic_string(), std::regex("[^A-Za-z0-9_.-]"), "_");
    const fs::path item_dir = fs::path("audio") / item_id;
    fs::create_directories(req.out_dir / item_dir);

    const auto reference = dsp::read_wav(req.reference_dir / rel);
    SessionItem item;
    item.id = item_id;
    item.reference = (item_dir / "reference.wav").generic_string();
    item.anchor = (item_dir / "anchor.wav").generic_string();
    dsp::write_wav(req.out_dir / item.reference, reference);
    dsp::write_wav(req.out_dir / item.anchor, dsp::lowpass_filter(reference, req.anchor_cutoff_hz));

    for (const auto& [name, dir] : req.systems) {
      const auto src = dir / rel;
      if (!fs::is_regular_file(src)) throw std::runtime_error("system '" + name + "' has no output " + src.string());
      auto sys = dsp::read_wav(src);
      if (sys.sample_rate != reference.sample_rate) {
        throw std::runtime_error("system '" + name + "' output " + src.string() + " is at " +
                                 std::to_string(sys.sample_rate) + " Hz, reference at " +
                                 std::to_string(reference.sample_rate) + " Hz");
      }
      sys.samples.resize(reference.size(), 0.0);
      const auto path = (item_dir / (name + ".wav")).generic_string();
      dsp::write_wav(req.out_dir / path, sys);
      item.systems.push_back({name, path});
    }
    m.items.push_back(std::move(item));
  }

  const auto j = to_json(m);
  const auto errors = validate_session_manifest(j, req.out_dir);
  if (!errors.empty()) throw std::logic_error("exported manifest fails its own schema: " + errors.front());
  std::ofstream(req.out_dir / "session.json") << j.dump(2) << "\n";
  std::ofstream(req.out_dir / "session.schema.json") << session_manifest_schema().dump(2) << "\n";
  return m;
}

}  // namespace aero::mushra
