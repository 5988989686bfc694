#ifndef NELSON_CONFIG_HPP
#define NELSON_CONFIG_HPP

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nelson/derivatives.hpp"
#include "nelson/dressing.hpp"
#include "nelson/grid.hpp"
#include "nelson/spectral.hpp"

namespace nelson {

struct RunConfig {
    ModelParams model;
    GridSpec grid;
    TruncationSpec basis;
    SpectralOptions solver;
    FdOptions fd;
    std::vector<double> lambdas{0.05, 0.1};   ///< sweep couplings
    int contourSamples = 16;
    int stopAfter = -1;                       ///< sweep rows per coupling before a simulated interruption
    std::string outDir = "nelson_out";
    int jobs = 1;
    bool corruptWeight = false;               ///< verify: perturb one coupling in the closed-form route

    RunConfig();
    /// Throws Error naming the offending key.
    void validate() const;
};

/// Command-line overrides; unset fields leave the file/default value alone.
struct ConfigOverrides {
    std::optional<double> lambda, sigma, epsilon;
    std::optional<int> scales, qMax, jobs;
    std::optional<std::string> out;
};

/// Every key understood in a config file, as "section.key".
const std::vector<std::string>& config_keys();
/// Keys a config file must state explicitly.
const std::vector<std::string>& required_config_keys();

/// defaults < file < overrides; NELSON_LAB_OUT (when set) replaces the output directory last.
RunConfig load_config(const std::optional<std::string>& iniPath, const ConfigOverrides& overrides);
RunConfig parse_config(std::istream& ini, const ConfigOverrides& overrides = {});

/// INI text that parse_config reads back to an identical config.
std::string config_to_ini(const RunConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);

}  // namespace nelson

#endif
