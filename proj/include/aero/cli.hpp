#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace aero::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Runs one `aero` invocation. argv[0] is the program name.
/// Returns 0 on success, 1 on usage errors (bad flags, unknown config keys),
/// 2 on runtime failures; every error message names the failing stage.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Directory searched for preset names given to --config.
std::string preset_dir();

}  // namespace aero::cli
