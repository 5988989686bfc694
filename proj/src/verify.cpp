#include "nelson/verify.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "nelson/io.hpp"
#include "nelson/wavefunctions.hpp"

namespace nelson {

namespace {

CheckResult upper(std::string name, double value, double threshold, std::string detail = {}) {
    CheckResult c{std::move(name), value, threshold, false, value <= threshold, std::move(detail)};
    return c;
}

CheckResult lower(std::string name, double value, double threshold, std::string detail = {}) {
    CheckResult c{std::move(name), value, threshold, true, value >= threshold, std::move(detail)};
    return c;
}

MomentumGrid four_mode_grid() {
    MomentumGrid g;
    const double radii[] = {0.3, 0.5, 0.7, 0.85};
    const Vec3 dirs[] = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1), Vec3(1, 1, 1).normalized()};
    for (int m = 0; m < 4; ++m) g.modes.push_back({radii[m] * dirs[m], 0.05, m});
    g.sigmaLow = 0.3;
    g.kappaHigh = 1.0;
    g.shellCount = 4;
    return g;
}

}  // namespace

double ccr_defect(const FockBasis& basis, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(basis.dimension());
    const auto below = basis.level_end(basis.max_photons() - 1);
    for (Eigen::Index j = 0; j < below; ++j) v[j] = nd(rng);
    v.normalize();
    double worst = 0;
    for (int m = 0; m < basis.mode_count(); ++m)
        for (int n = 0; n < basis.mode_count(); ++n) {
            const Eigen::VectorXd a = apply_annihilate<double>(basis, m, apply_create<double>(basis, n, v).vector);
            const Eigen::VectorXd b = apply_create<double>(basis, n, apply_annihilate<double>(basis, m, v)).vector;
            Eigen::VectorXd d = a - b;
            if (m == n) d -= v;
            worst = std::max(worst, d.cwiseAbs().maxCoeff());
        }
    return worst;
}

VanHoveResult van_hove_check(const ModelParams& params, const MomentumGrid& grid, int maxPhotons,
                             const SpectralOptions& opt) {
    FiberOperator H = nelson_hamiltonian(params, grid);
    H.A.w.setZero();
    H.A.K.setZero();
    H.A.C.setZero();
    H.e = 0;
    const FockBasis basis = build_basis(static_cast<int>(grid.size()), maxPhotons);
    const auto gs = ground_state(assemble(H, basis), opt);

    VanHoveResult r;
    r.E = gs.E;
    Eigen::VectorXd h(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t m = 0; m < grid.size(); ++m) {
        const double k = grid.modes[m].radius();
        r.exactE -= H.g[static_cast<Eigen::Index>(m)] * H.g[static_cast<Eigen::Index>(m)] / k;
        h[static_cast<Eigen::Index>(m)] = -H.g[static_cast<Eigen::Index>(m)] / k;
    }
    r.maxAmplitude = h.size() ? h.cwiseAbs().maxCoeff() : 0.0;
    r.relativeError = std::abs(r.E - r.exactE) / std::max(std::abs(r.exactE), 1e-300);
    Eigen::VectorXd coherent(basis.dimension());
    for (Eigen::Index j = 0; j < basis.dimension(); ++j) {
        const auto occ = basis.occupation_of(j);
        double a = 1;
        for (std::size_t m = 0; m < occ.size(); ++m)
            a *= std::pow(h[static_cast<Eigen::Index>(m)], occ[m]) / std::sqrt(std::tgamma(occ[m] + 1.0));
        coherent[j] = a;
    }
    coherent.normalize();
    r.overlap = std::abs(coherent.dot(gs.psi));
    return r;
}

DualRouteResult dual_route_check(int instances, std::uint64_t seed, bool corruptWeight) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto ball = [&](double radius) {
        Vec3 v;
        do v = Vec3(2 * u(rng) - 1, 2 * u(rng) - 1, 2 * u(rng) - 1);
        while (v.norm() > 1);
        return radius * v;
    };
    DualRouteResult r;
    for (int t = 0; t < instances; ++t) {
        ModelParams p;
        p.lambda = 0.3 * u(rng);
        p.sigma = 0.1 + 0.4 * u(rng);
        p.alphaBar = 0.5 * u(rng);
        p.P = ball(1.0 / 6.0);
        const GridSpec spec{1 + static_cast<int>(3 * u(rng)), 2 + static_cast<int>(2 * u(rng)),
                            2 + static_cast<int>(3 * u(rng))};
        const MomentumGrid grid = build_grid(p, spec);
        const Vec3 gradE = ball(0.3);
        const FiberOperator a = transformed_by_displacement(p, grid, gradE);
        FiberOperator b;
        if (corruptWeight) {
            Eigen::VectorXd g = mode_couplings(grid, p);
            g[0] *= 1.01;
            b = transformed_closed_form(p, grid, gradE, &g);
        } else {
            b = transformed_closed_form(p, grid, gradE);
        }
        const double mismatch = coefficient_mismatch(a, b);
        if (mismatch > r.worst) r.worst = mismatch;
        ++r.instances;
    }
    r.detail = "displacement route vs closed-form route, worst mismatch " + fmt_double(r.worst) + " over " +
               std::to_string(r.instances) + " instances";
    return r;
}

std::vector<CheckResult> run_verify_suite(const RunConfig& cfg) {
    std::vector<CheckResult> out;
    const std::uint64_t seed = cfg.solver.seed;

    {
        const FockBasis basis = build_basis(4, 3);
        out.push_back(upper("ccr", ccr_defect(basis, seed), 1e-12, "4 modes, 3 photons, below top level"));
    }

    auto grid = std::make_shared<const MomentumGrid>(build_grid(cfg.model, cfg.grid));

    {
        ModelParams p = cfg.model;
        p.lambda = 0;
        const auto s = dressed_ground_state(p, grid, cfg.basis, cfg.solver);
        double worst = std::abs(s.E - 0.5 * p.P.squaredNorm());
        worst = std::max(worst, 1 - s.psi[0]);
        for (int i = 0; i < 3; ++i) worst = std::max(worst, (s.gamma_matrix(i) * s.phi).norm());
        FroehlichEvaluator ev(s);
        for (const auto& m : grid->modes) worst = std::max(worst, std::abs(ev.f1(m.k)));
        const auto sn = scaling_norms(s);
        worst = std::max({worst, sn.n0, sn.n1, sn.n2});
        out.push_back(upper("zero_coupling", worst, 1e-12, "E - P^2/2, 1 - <Omega,psi>, |Gamma phi|, f^1, R0 norms"));
    }

    {
        ModelParams p;
        p.lambda = 1;
        p.sigma = 0.3;
        const MomentumGrid g = four_mode_grid();
        const Eigen::VectorXd g0 = mode_couplings(g, p);
        double amp = 0;
        for (std::size_t m = 0; m < g.size(); ++m)
            amp = std::max(amp, std::abs(g0[static_cast<Eigen::Index>(m)]) / g.modes[m].radius());
        p.lambda = 0.1 / amp;   // largest displacement amplitude 0.1
        const auto r = van_hove_check(p, g, 6, cfg.solver);
        out.push_back(upper("van_hove_energy", r.relativeError, 1e-8, "4 modes, 6 photons"));
        out.push_back(lower("van_hove_overlap", r.overlap, 1 - 1e-6, "truncated coherent state"));
    }

    {
        const auto r = dual_route_check(20, seed, cfg.corruptWeight);
        out.push_back(upper("dual_route_hw", r.worst, 1e-14, r.detail));
    }

    const auto state = dressed_ground_state(cfg.model, grid, cfg.basis, cfg.solver);
    {
        const auto rep = derivative_report(state, true, cfg.fd);
        for (const auto& c : rep.fd) {
            const bool second = c.quantity.rfind("psi_d", 0) == 0 && c.quantity.size() == 7;
            out.push_back(lower("fd_" + c.quantity, c.minOrder, second ? 1.8 : 2.0,
                                "observed order over h, h/2, h/4; smallest error " + fmt_double(c.errors.back())));
        }
        out.push_back(upper("radial_hessian", rep.radialHessian, 1 + 1e-8, "d^2E/d|P|^2"));
    }

    {
        std::mt19937_64 rng(seed + 1);
        std::uniform_real_distribution<double> u(0.01, 1.0);
        double worst = 0;
        for (int t = 0; t < 100; ++t) {
            std::vector<double> moduli(static_cast<std::size_t>(1 + t % 6));
            for (auto& m : moduli) m = u(rng);
            worst = std::max(worst, combinatorial_identity_check(moduli));
        }
        out.push_back(upper("combinatorial_identity", worst, 1e-12, "100 random sets, q <= 6"));
    }

    {
        FroehlichEvaluator ev(state);
        double worst = 0;
        const int M = static_cast<int>(grid->size());
        for (int m = 0; m < M; ++m)
            worst = std::max(worst, std::abs(extract_fq(*state.basis, *grid, state.psi, {m}) - ev.f1(grid->modes[static_cast<std::size_t>(m)].k)));
        if (state.basis->max_photons() >= 2)
            for (int t = 0; t < 24; ++t) {
                const int a = (7 * t) % M, b = (11 * t + 3) % M;
                const double x = extract_fq(*state.basis, *grid, state.psi, {a, b});
                const double y = ev.fq({grid->modes[static_cast<std::size_t>(a)].k, grid->modes[static_cast<std::size_t>(b)].k});
                worst = std::max(worst, std::abs(x - y));
            }
        out.push_back(upper("dual_route_fq", worst, 1e-9, "extracted vs pull-through, q = 1, 2"));
    }
    return out;
}

void write_verify_csv(std::ostream& os, const std::vector<CheckResult>& checks) {
    os << "check,value,threshold,relation,pass,detail\n";
    for (const auto& c : checks)
        os << c.name << ',' << fmt_double(c.value) << ',' << fmt_double(c.threshold) << ',' << (c.lowerBound ? ">=" : "<=")
           << ',' << (c.pass ? "true" : "false") << ",\"" << c.detail << "\"\n";
}

}  // namespace nelson
