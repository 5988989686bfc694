#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "helpers.hpp"
#include "nelson/multiscale.hpp"

using namespace nelson;

namespace {

SweepOptions small_options() {
    SweepOptions o;
    o.grid = {2, 2, 2};
    o.contourSamples = 8;
    return o;
}

std::string ledger_csv(const ScaleSweepLedger& l) {
    std::ostringstream os;
    write_ledger_csv(os, l);
    return os.str();
}

}  // namespace

TEST_SUITE("multiscale") {
    TEST_CASE("exponent fit recovers an exact power law") {
        std::vector<double> s, y, c;
        for (int n = 0; n < 6; ++n) {
            s.push_back(std::pow(0.5, n));
            y.push_back(3.0 * std::pow(s.back(), -0.1));
            c.push_back(2.0);
        }
        const auto f = fit_exponent(s, y);
        REQUIRE(f.ok);
        CHECK(std::abs(f.deltaHat - 0.1) <= 1e-12);
        CHECK(f.points == 6);
        CHECK(std::abs(fit_exponent(s, c).deltaHat) <= 1e-12);
    }

    TEST_CASE("exponent fit drops non-positive points and needs four") {
        const std::vector<double> s{1, 0.5, 0.25, 0.125, 0.0625};
        const auto f = fit_exponent(s, {0.0, 1, 2, 4, 8});
        CHECK(f.ok);
        CHECK(f.excluded == std::vector<int>{0});
        CHECK(std::abs(f.deltaHat - 1) <= 1e-12);
        CHECK_FALSE(fit_exponent(s, {0, 0, 1, 2, 3}).ok);
    }

    TEST_CASE("Weyl difference against the dense matrix exponential") {
        const int M = 3;
        const auto basis = build_basis(M, 8);
        std::mt19937_64 rng(12);
        std::normal_distribution<double> nd;
        const Eigen::VectorXd hOld = Eigen::VectorXd::NullaryExpr(M, [&] { return 0.05 * nd(rng); });
        const Eigen::VectorXd hNew = Eigen::VectorXd::NullaryExpr(M, [&] { return 0.05 * nd(rng); });
        Eigen::VectorXd v = Eigen::VectorXd::Zero(basis.dimension());
        for (Eigen::Index j = 0; j < basis.level_end(2); ++j) v[j] = nd(rng);
        v.normalize();
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(basis.dimension(), basis.dimension());
        for (int m = 0; m < M; ++m) {
            const Eigen::MatrixXd B = testing::dense_lowering(basis, m);
            G += (hNew[m] - hOld[m]) * (B - B.transpose());
        }
        const Eigen::VectorXd ref = G.exp() * v;
        const auto w = apply_weyl_difference(basis, v, hOld, hNew);
        CHECK((w.vector - ref).norm() <= 1e-12);
        CHECK(w.leakage <= 1e-12);
        CHECK(w.step == doctest::Approx((hNew - hOld).norm()));
        const auto back = apply_weyl_difference(basis, w.vector, hNew, hOld);
        CHECK((back.vector - v).norm() <= 1e-10);
    }

    TEST_CASE("Weyl difference of the vacuum is close to a coherent state") {
        const auto basis = build_basis(1, 10);
        Eigen::VectorXd vac = Eigen::VectorXd::Zero(basis.dimension());
        vac[0] = 1;
        const double h = 0.2;
        const auto w = apply_weyl_difference(basis, vac, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, h));
        // exp(h(b - b*)) Omega has amplitudes e^{-h^2/2} (-h)^n / sqrt(n!)
        for (int n = 0; n <= 4; ++n)
            CHECK(w.vector[n] == doctest::Approx(std::exp(-h * h / 2) * std::pow(-h, n) / std::sqrt(std::tgamma(n + 1.0))).epsilon(1e-8));
    }

    TEST_CASE("projection onto the intermediate ground state") {
        Eigen::VectorXd chi(3), prev(3);
        chi << 1, 0, 0;
        prev << 1, 0, 0;
        auto pr = project_previous(chi, prev);
        CHECK(pr.difference == 0.0);
        CHECK(pr.overlap == 1.0);
        prev << 0.6, 0.8, 0;
        pr = project_previous(chi, prev);
        CHECK(pr.overlap == doctest::Approx(0.6));
        CHECK(pr.difference == doctest::Approx(0.8).epsilon(1e-12));
        CHECK((pr.phiHat - 0.6 * chi).norm() <= 1e-15);
    }

    TEST_CASE("sigma column is a geometric sequence") {
        auto p = testing::desk_params(0.0, 0.1);
        p.nScales = 4;
        auto opt = small_options();
        const auto l = run_sweep(p, opt);
        REQUIRE(l.rows.size() == 5);
        const double expected[] = {1, 0.5, 0.25, 0.125, 0.0625};
        for (int n = 0; n < 5; ++n) CHECK(l.rows[static_cast<std::size_t>(n)].sigma == expected[n]);
        CHECK(l.complete);
    }

    TEST_CASE("zero coupling ledger is trivial and the gap matches the free oracle") {
        auto p = testing::desk_params(0.0, 0.1);
        p.nScales = 3;
        const auto opt = small_options();
        const auto l = run_sweep(p, opt);
        GridSpec spec = opt.grid;
        MomentumGrid g;
        for (const auto& r : l.rows) {
            CHECK(std::abs(r.E - 0.5 * p.P.squaredNorm()) <= 1e-13);
            CHECK(r.deltaE == doctest::Approx(0.0));
            CHECK(r.psiCauchy <= 1e-13);
            CHECK(r.n0 == 0.0);
            CHECK(r.weylStep == 0.0);
            if (r.n == 0) continue;
            ModelParams q = p;
            q.sigma = r.sigma;
            g = r.n == 1 ? build_grid(q, spec) : refine_annulus(g, r.sigma, spec);
            double gap = 1e300;
            for (const auto& m : g.modes) gap = std::min(gap, m.radius() + m.k.dot(0.5 * m.k - p.P));
            CHECK(r.gap == doctest::Approx(gap).epsilon(1e-10));
        }
    }

    TEST_CASE("interrupted sweep resumes to the same ledger") {
        auto p = testing::desk_params(0.1, 0.1);
        p.nScales = 3;
        auto opt = small_options();
        const auto full = run_sweep(p, opt);
        opt.stopAfter = 2;
        const auto part = run_sweep(p, opt);
        CHECK(part.rows.size() == 2);
        CHECK_FALSE(part.complete);
        opt.stopAfter = -1;
        const auto resumed = run_sweep(p, opt, part.rows);
        CHECK(ledger_csv(resumed) == ledger_csv(full));
    }

    TEST_CASE("ledger rows survive a JSON round trip") {
        auto p = testing::desk_params(0.1, 0.1);
        p.nScales = 2;
        const auto l = run_sweep(p, small_options());
        ScaleSweepLedger copy = l;
        copy.rows.clear();
        for (const auto& r : l.rows) copy.rows.push_back(ledger_row_from_json(to_json(r)));
        CHECK(ledger_csv(copy) == ledger_csv(l));
    }

    TEST_CASE("energies decrease along the sweep") {
        auto p = testing::desk_params(0.1, 0.1);
        p.nScales = 3;
        const auto l = run_sweep(p, small_options());
        for (std::size_t n = 1; n < l.rows.size(); ++n) CHECK(l.rows[n].E <= l.rows[n - 1].E + 1e-12);
        CHECK(energy_shift_ledger(l).worstIncrease <= 1e-12);
        CHECK(gap_ledger(l).allPositive);
    }
}
