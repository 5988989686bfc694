#ifndef NELSON_VERIFY_HPP
#define NELSON_VERIFY_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "nelson/config.hpp"

namespace nelson {

struct CheckResult {
    std::string name;
    double value = 0;       ///< measured defect (or order, for FD checks)
    double threshold = 0;
    bool lowerBound = false;   ///< pass iff value >= threshold (otherwise value <= threshold)
    bool pass = false;
    std::string detail;
};

/// Invariant suite: CCR, zero coupling, van Hove, dual-route H^W, FD oracles,
/// combinatorial identity, dual-route f^q. Deterministic in cfg.solver.seed.
std::vector<CheckResult> run_verify_suite(const RunConfig& cfg);

/// Exact ground energy -sum g^2/|k| and truncated coherent ground state of the van Hove model.
struct VanHoveResult {
    double E = 0, exactE = 0, relativeError = 0, overlap = 0, maxAmplitude = 0;
};
VanHoveResult van_hove_check(const ModelParams& params, const MomentumGrid& grid, int maxPhotons,
                             const SpectralOptions& opt);

/// Worst dual-route H^W mismatch over randomized small instances.
struct DualRouteResult {
    double worst = 0;
    int instances = 0;
    std::string detail;
};
DualRouteResult dual_route_check(int instances, std::uint64_t seed, bool corruptWeight);

/// max |[b_m, b*_n] v - delta_mn v| over v supported below the top photon level.
double ccr_defect(const FockBasis& basis, std::uint64_t seed);

void write_verify_csv(std::ostream& os, const std::vector<CheckResult>& checks);

}  // namespace nelson

#endif
