#include "nelson/dressing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nelson {

Vec3 momentum_expectation(const Vec3& P, const MomentumGrid& grid, const FockBasis& basis, const Eigen::VectorXd& v) {
    // P - P_f is diagonal in the occupation basis
    Vec3 out = Vec3::Zero();
    for (Eigen::Index j = 0; j < basis.dimension(); ++j) {
        if (v[j] == 0) continue;
        Vec3 kTot = Vec3::Zero();
        for (auto m : basis.modes_of(j)) kTot += grid.modes[m].k;
        out += (v[j] * v[j]) * (P - kTot);
    }
    return out;
}

DressedScaleState dressed_ground_state(const ModelParams& params, std::shared_ptr<const MomentumGrid> grid,
                                       const TruncationSpec& trunc, const SpectralOptions& opt) {
    params.validate();
    DressedScaleState s;
    s.params = params;
    s.grid = grid;
    s.sigma = params.sigma;
    s.basis = std::make_shared<const FockBasis>(
        build_basis(static_cast<int>(grid->size()), trunc.maxPhotons, trunc.perModeCap, trunc.dimensionCap));
    const auto& basis = *s.basis;

    s.bare = std::make_shared<const SpectralProblem>(assemble(nelson_hamiltonian(params, *grid), basis), opt);
    s.E = s.bare->ground().E;
    s.gap = s.bare->ground().gap;
    s.psi = s.bare->ground().psi;
    s.gradE = momentum_expectation(params.P, *grid, basis, s.psi);

    s.h = weyl_coefficients(params, *grid, s.gradE);
    s.HW = transformed_hamiltonian(params, *grid, s.gradE);
    s.dressed = std::make_shared<const SpectralProblem>(assemble(s.HW, basis), opt);
    s.EW = s.dressed->ground().E;
    s.gapW = s.dressed->ground().gap;
    s.phi = s.dressed->ground().psi;

    s.gamma = gamma_operator(params, *grid, s.gradE);
    for (int i = 0; i < 3; ++i) s.orthogonalityDefect[i] = s.phi.dot(assemble_component(s.gamma, i, basis) * s.phi);
    s.gammaConst = s.gradE - s.orthogonalityDefect;
    const auto Gc = s.centered_gamma();
    for (int i = 0; i < 3; ++i) s.gammaMatrices.push_back(assemble_component(Gc, i, basis));

    s.spectrumMismatch = std::abs(s.E - s.EW);
    const auto top = basis.level_end(trunc.maxPhotons - 1);
    s.topLevelWeight = s.phi.tail(basis.dimension() - top).squaredNorm();
    return s;
}

FiberOperator dressed_at(const DressedScaleState& state, const Vec3& P) {
    ModelParams p = state.params;
    p.P = P;
    return displace(nelson_hamiltonian(p, *state.grid), state.h);
}

GradientBoundReport check_gradient_bound(const DressedScaleState& state, double cFit) {
    GradientBoundReport r;
    r.norm = state.gradE.norm();
    r.bound = 1.0 / 3.0 + cFit * std::abs(state.params.lambda);
    r.margin = r.bound - r.norm;
    return r;
}

double bare_energy_at(const DressedScaleState& state, const Vec3& P) {
    ModelParams p = state.params;
    p.P = P;
    return ground_state(assemble(nelson_hamiltonian(p, *state.grid), *state.basis), state.bare->options()).E;
}

double dispersion_bound_probe(const DressedScaleState& state, const std::vector<Vec3>& kList) {
    if (kList.empty()) throw Error("dispersion_bound_probe: empty k list");
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& k : kList) {
        const double r = k.norm();
        if (!(r > 0)) throw Error("dispersion_bound_probe: k must be nonzero");
        worst = std::min(worst, (bare_energy_at(state, state.params.P - k) - state.E) / r);
    }
    return worst;
}

}  // namespace nelson
