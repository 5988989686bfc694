#ifndef NELSON_GRID_HPP
#define NELSON_GRID_HPP

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace nelson {

using Vec3 = Eigen::Vector3d;

/// Raised for violated preconditions and unrecoverable numerical failures.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Physical and sweep parameters of one fiber Hamiltonian family.
struct ModelParams {
    double lambda = 0.1;     ///< coupling
    double kappa = 1.0;      ///< UV cutoff
    double sigma = 0.1;      ///< IR cutoff, 0 < sigma <= kappa
    double alphaBar = 0.0;   ///< infrared exponent in [0, 1/2]
    double eps0 = 0.2;       ///< width of the UV smoothing region
    Vec3 P = Vec3::Zero();   ///< total momentum
    double epsilon = 0.5;    ///< scale ratio sigma_{n+1}/sigma_n
    int nScales = 4;

    /// Throws Error on violated invariants; returns soft warnings.
    std::vector<std::string> validate() const;
};

/// Momentum discretization knobs.
struct GridSpec {
    int nRadialPerDecade = 4;
    int nPolar = 4;
    int nAzimuthal = 4;
};

struct Mode {
    Vec3 k;
    double w = 0;      ///< quadrature weight (volume element)
    int shell = 0;
    double radius() const { return k.norm(); }
};

/// Product quadrature of the annulus sigmaLow <= |k| <= kappaHigh.
///
/// Modes are ordered radius-major, then polar node, then azimuth. Grids built
/// by refine_annulus keep the parent's modes as a bitwise-identical prefix.
struct MomentumGrid {
    std::vector<Mode> modes;
    double sigmaLow = 0;
    double kappaHigh = 0;
    int parentModeCount = 0;   ///< length of the inherited prefix (0 for a root grid)
    int shellCount = 0;

    std::size_t size() const { return modes.size(); }
    double weight_sum() const;
    std::uint64_t hash() const;
};

/// Smooth UV cutoff: 1 below (1-eps0)kappa, 0 above kappa, quintic smoothstep between.
double cutoff_chi(double r, double kappa, double eps0);

/// Radial profile u(r) of the form factor and its first two radial derivatives.
struct RadialValue {
    double value = 0, d1 = 0, d2 = 0;
};
RadialValue form_factor_radial(double r, const ModelParams& params);

/// lambda * chi_[sigma,kappa)(k) |k|^alphaBar / sqrt(2|k|).
double form_factor(const Vec3& k, const ModelParams& params);

/// Discretized couplings g_m = v(k_m) sqrt(w_m).
Eigen::VectorXd mode_couplings(const MomentumGrid& grid, const ModelParams& params);

MomentumGrid build_grid(const ModelParams& params, const GridSpec& spec);

/// Appends shells covering [sigmaNew, grid.sigmaLow). Equal sigma is a no-op.
MomentumGrid refine_annulus(const MomentumGrid& grid, double sigmaNew, const GridSpec& spec);

/// Grid holding no modes; represents the scale sigma = kappa of a sweep.
MomentumGrid empty_grid(double kappa);

/// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/// CSV: index,kx,ky,kz,abs_k,w,shell
void write_grid_csv(std::ostream& os, const MomentumGrid& grid);

}  // namespace nelson

#endif
