#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace aero::mushra {

struct SystemStimulus {
  std::string name;
  std::string path;

  friend bool operator==(const SystemStimulus&, const SystemStimulus&) = default;
};

struct SessionItem {
  std::string id;
  std::string reference;
  std::string anchor;
  std::vector<SystemStimulus> systems;

  friend bool operator==(const SessionItem&, const SessionItem&) = default;
};

/// Input of the listening-test harness. Paths are relative to the manifest file.
struct SessionManifest {
  std::vector<SessionItem> items;
  std::string scale = "0-100";

  friend bool operator==(const SessionManifest&, const SessionManifest&) = default;
};

nlohmann::json to_json(const SessionManifest& m);
/// Throws std::invalid_argument listing every schema violation.
SessionManifest session_manifest_from_json(const nlohmann::json& j);

/// JSON Schema (draft 2020-12) describing the manifest.
const nlohmann::json& session_manifest_schema();

/// Structural check against the schema; returns one message per violation.
/// With `base_dir` set, referenced audio files must also exist.
std::vector<std::string> validate_session_manifest(const nlohmann::json& j,
                                                   const std::filesystem::path& base_dir = {});

inline constexpr double kAnchorCutoffHz = 3500.0;

struct ExportRequest {
  std::filesystem::path reference_dir;
  /// (system name, directory with files named like the references)
  std::vector<std::pair<std::string, std::filesystem::path>> systems;
  std::filesystem::path out_dir;
  double anchor_cutoff_hz = kAnchorCutoffHz;
};

/// Copies references and system outputs into `out_dir`, renders a low-pass
/// anchor per reference, and writes `out_dir/session.json` plus the schema.
/// Throws if any system lacks a file for some reference.
SessionManifest mushra_export(const ExportRequest& req);

}  // namespace aero::mushra
