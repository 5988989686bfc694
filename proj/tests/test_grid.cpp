#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "helpers.hpp"
#include "nelson/grid.hpp"

using namespace nelson;

TEST_SUITE("grid") {
    TEST_CASE("cutoff bridge endpoints and monotonicity") {
        CHECK(cutoff_chi(0.5, 1.0, 0.2) == 1.0);
        CHECK(cutoff_chi(1.1, 1.0, 0.2) == 0.0);
        const double mid = cutoff_chi(0.9, 1.0, 0.2);
        CHECK(mid > 0.0);
        CHECK(mid < 1.0);
        double prev = 1.0;
        for (double r = 0.7; r <= 1.05; r += 0.001) {
            const double c = cutoff_chi(r, 1.0, 0.2);
            CHECK(c <= prev + 1e-15);
            prev = c;
        }
    }

    TEST_CASE("cutoff bridge is C2 at both ends") {
        const double h = 1e-6;
        for (double r0 : {0.8, 1.0}) {
            auto f = [&](double r) { return cutoff_chi(r, 1.0, 0.2); };
            const double d1 = (f(r0 + h) - f(r0 - h)) / (2 * h);
            const double d2 = (f(r0 + h) - 2 * f(r0) + f(r0 - h)) / (h * h);
            CHECK(std::abs(d1) < 1e-8);
            CHECK(std::abs(d2) < 1e-2);
        }
    }

    TEST_CASE("form factor values and support") {
        ModelParams p;
        p.lambda = 0.1;
        p.sigma = 0.01;
        CHECK(form_factor(Vec3(0.5, 0, 0), p) == doctest::Approx(0.1).epsilon(1e-15));
        CHECK(form_factor(Vec3(0.005, 0, 0), p) == 0.0);
        CHECK(form_factor(Vec3(1.0, 0, 0), p) == 0.0);
        CHECK(form_factor(Vec3::Zero(), p) == 0.0);
        p.lambda = 0;
        CHECK(form_factor(Vec3(0.5, 0, 0), p) == 0.0);
    }

    TEST_CASE("radial derivatives of the form factor match finite differences") {
        ModelParams p;
        p.lambda = 0.2;
        p.sigma = 0.05;
        p.alphaBar = 0.3;
        for (double r : {0.3, 0.85, 0.93}) {
            const double h = 1e-5;
            const auto u = form_factor_radial(r, p);
            const double fp = form_factor_radial(r + h, p).value, fm = form_factor_radial(r - h, p).value;
            CHECK(u.d1 == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-7));
            CHECK(u.d2 == doctest::Approx((fp - 2 * u.value + fm) / (h * h)).epsilon(1e-4));
        }
    }

    TEST_CASE("Gauss-Legendre integrates polynomials exactly") {
        for (int n = 1; n <= 8; ++n) {
            std::vector<double> x, w;
            gauss_legendre(n, x, w);
            for (int deg = 0; deg <= 2 * n - 1; ++deg) {
                double q = 0;
                for (int i = 0; i < n; ++i) q += w[static_cast<std::size_t>(i)] * std::pow(x[static_cast<std::size_t>(i)], deg);
                const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
                CHECK(std::abs(q - exact) < 1e-14);
            }
        }
    }

    TEST_CASE("build_grid: empty annulus is an error") {
        ModelParams p;
        p.sigma = 1.0;
        CHECK_THROWS_AS(build_grid(p, {}), Error);
    }

    TEST_CASE("build_grid: product structure and exact volume") {
        ModelParams p;
        p.sigma = 0.01;
        const GridSpec spec{3, 5, 7};
        const auto g = build_grid(p, spec);
        const int shells = g.shellCount;
        CHECK(shells == 6);   // two decades at three shells per decade
        CHECK(g.size() == static_cast<std::size_t>(shells * 5 * 7));
        const double volume = 4.0 * std::numbers::pi / 3.0 * (1.0 - std::pow(0.01, 3));
        CHECK(std::abs(g.weight_sum() - volume) < 1e-10);
        for (const auto& m : g.modes) {
            CHECK(m.w > 0);
            CHECK(m.radius() >= p.sigma);
            CHECK(m.radius() <= p.kappa);
        }
    }

    TEST_CASE("couplings are rotationally symmetric within a shell") {
        ModelParams p;
        p.lambda = 0.3;
        p.sigma = 0.05;
        const auto g = build_grid(p, {4, 4, 4});
        for (std::size_t a = 0; a < g.size(); ++a)
            for (std::size_t b = a + 1; b < g.size(); ++b)
                if (g.modes[a].shell == g.modes[b].shell)
                    CHECK(std::abs(form_factor(g.modes[a].k, p) - form_factor(g.modes[b].k, p)) <= 1e-15);
    }

    TEST_CASE("refine_annulus nests the parent grid") {
        ModelParams p;
        p.sigma = 0.25;
        const GridSpec spec{};
        const auto parent = build_grid(p, spec);
        const auto child = refine_annulus(parent, 0.0625, spec);
        REQUIRE(child.size() > parent.size());
        CHECK(child.parentModeCount == static_cast<int>(parent.size()));
        for (std::size_t m = 0; m < parent.size(); ++m) {
            CHECK(child.modes[m].k == parent.modes[m].k);
            CHECK(child.modes[m].w == parent.modes[m].w);
        }
        double added = 0;
        for (std::size_t m = parent.size(); m < child.size(); ++m) {
            added += child.modes[m].w;
            CHECK(child.modes[m].radius() < 0.25);
            CHECK(child.modes[m].radius() >= 0.0625);
        }
        const double volume = 4.0 * std::numbers::pi / 3.0 * (std::pow(0.25, 3) - std::pow(0.0625, 3));
        CHECK(std::abs(added - volume) < 1e-10);
    }

    TEST_CASE("refine_annulus: same sigma is a no-op, larger sigma is an error") {
        ModelParams p;
        p.sigma = 0.25;
        const auto g = build_grid(p, {});
        const auto same = refine_annulus(g, 0.25, {});
        CHECK(same.hash() == g.hash());
        CHECK_THROWS_AS(refine_annulus(g, 0.5, {}), Error);
        CHECK_THROWS_AS(refine_annulus(g, 0.0, {}), Error);
    }

    TEST_CASE("params validation") {
        ModelParams p;
        CHECK(p.validate().empty());
        p.P = Vec3(0.2, 0, 0);
        CHECK(p.validate().size() == 1);
        p.P = Vec3(0.4, 0, 0);
        CHECK_THROWS_AS(p.validate(), Error);
        p = ModelParams{};
        p.alphaBar = 0.6;
        CHECK_THROWS_AS(p.validate(), Error);
        p = ModelParams{};
        p.epsilon = 0.7;
        CHECK_THROWS_AS(p.validate(), Error);
    }

    TEST_CASE("grid CSV schema") {
        ModelParams p;
        p.sigma = 0.5;
        std::ostringstream os;
        write_grid_csv(os, build_grid(p, {1, 1, 1}));
        CHECK(os.str().rfind("index,kx,ky,kz,abs_k,w,shell\n", 0) == 0);
    }
}
