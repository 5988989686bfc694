#ifndef NELSON_RUNNER_HPP
#define NELSON_RUNNER_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "nelson/config.hpp"

namespace nelson {

/// Subcommand names in the order the CLI lists them.
const std::vector<std::string>& command_names();

/// Runs one subcommand; outputs land in <cfg.outDir>/<command>/ next to a manifest.json.
/// Returns the process exit status (0 success, 1 failed checks, 2 errors, 3 interrupted sweep).
int run_command(const std::string& command, const RunConfig& cfg, std::ostream& log);

/// Manifest of a finished (or interrupted) command directory; empty object if none exists.
nlohmann::json read_manifest(const std::filesystem::path& commandDir);

/// Hash of every config field that affects results (output directory, jobs and stop_after excluded).
std::string config_fingerprint(const RunConfig& cfg);

}  // namespace nelson

#endif
