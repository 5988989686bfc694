#ifndef NELSON_DRESSING_HPP
#define NELSON_DRESSING_HPP

#include <memory>
#include <vector>

#include "nelson/fiber_operator.hpp"
#include "nelson/fock.hpp"
#include "nelson/grid.hpp"
#include "nelson/spectral.hpp"

namespace nelson {

struct TruncationSpec {
    int maxPhotons = 2;
    int perModeCap = -1;
    std::size_t dimensionCap = kDefaultDimensionCap;
};

struct DressedScaleState {
    ModelParams params;
    std::shared_ptr<const MomentumGrid> grid;
    std::shared_ptr<const FockBasis> basis;
    double sigma = 0;

    std::shared_ptr<const SpectralProblem> bare;      ///< H_{P,sigma}
    std::shared_ptr<const SpectralProblem> dressed;   ///< H^W
    double E = 0, gap = 0;
    Eigen::VectorXd psi;
    Vec3 gradE = Vec3::Zero();                 ///< Hellmann-Feynman value in psi
    Eigen::VectorXd h;                         ///< Weyl shifts
    FiberOperator HW;
    double EW = 0, gapW = 0;
    Eigen::VectorXd phi;
    VectorFiberOperator gamma;                 ///< W(P_f - P)W* + gradE
    Vec3 gammaConst = Vec3::Zero();            ///< <phi, W(P - P_f)W* phi>
    Vec3 orthogonalityDefect = Vec3::Zero();   ///< <phi, Gamma phi>
    double spectrumMismatch = 0;               ///< |E - E^W|
    double topLevelWeight = 0;                 ///< weight of phi in the highest photon level

    /// Gamma shifted so that <phi, Gamma phi> = 0; used by the resolvent formulas.
    VectorFiberOperator centered_gamma() const { return centered(gamma, orthogonalityDefect); }
    const SparseMatrix& gamma_matrix(int i) const { return gammaMatrices.at(static_cast<std::size_t>(i)); }

    std::vector<SparseMatrix> gammaMatrices;   ///< centered components
};

/// <v, (P - P_f)_i v> for i = 0..2.
Vec3 momentum_expectation(const Vec3& P, const MomentumGrid& grid, const FockBasis& basis, const Eigen::VectorXd& v);

DressedScaleState dressed_ground_state(const ModelParams& params, std::shared_ptr<const MomentumGrid> grid,
                                       const TruncationSpec& trunc = {}, const SpectralOptions& opt = {});

/// H^W at momentum P with the dressing of `state` held fixed (only w and e move).
FiberOperator dressed_at(const DressedScaleState& state, const Vec3& P);

struct GradientBoundReport {
    double norm = 0;
    double bound = 0;    ///< 1/3 + c|lambda|
    double margin = 0;   ///< bound - norm
};
GradientBoundReport check_gradient_bound(const DressedScaleState& state, double cFit = 1.0);

/// min over k of (E_{P-k} - E_P)/|k|.
double dispersion_bound_probe(const DressedScaleState& state, const std::vector<Vec3>& kList);

/// Ground energy of H_{P', sigma} on the state's grid and basis.
double bare_energy_at(const DressedScaleState& state, const Vec3& P);

}  // namespace nelson

#endif
