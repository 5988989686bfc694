#include <doctest.h>

#include "helpers.hpp"

using namespace nelson;

TEST_SUITE("dressing") {
    TEST_CASE("zero coupling is the free electron") {
        const auto p = testing::desk_params(0.0, 0.25);
        const auto s = dressed_ground_state(p, testing::grid_for(p));
        CHECK(std::abs(s.E - 0.5 * p.P.squaredNorm()) <= 1e-13);
        CHECK(std::abs(s.EW - s.E) <= 1e-13);
        CHECK(std::abs(s.psi[0] - 1) <= 1e-13);
        CHECK(std::abs(s.phi[0] - 1) <= 1e-13);
        CHECK((s.gradE - p.P).norm() <= 1e-13);
        CHECK(s.h.cwiseAbs().maxCoeff() == 0.0);
        CHECK(s.orthogonalityDefect.norm() <= 1e-13);
        CHECK(s.topLevelWeight <= 1e-30);
    }

    TEST_CASE("gradient is the momentum expectation and obeys the bound") {
        for (double lambda : {0.05, 0.1, 0.2}) {
            const auto p = testing::desk_params(lambda, 0.25);
            const auto s = dressed_ground_state(p, testing::grid_for(p));
            const Vec3 ref = momentum_expectation(p.P, *s.grid, *s.basis, s.psi);
            CHECK((s.gradE - ref).norm() <= 1e-12);
            const auto b = check_gradient_bound(s);
            CHECK(b.margin > 0);
            CHECK(b.norm < 1.0 / 3.0);
            CHECK(s.gap > 0);
            CHECK(s.gapW > 0);
            CHECK(s.E < 0.5 * p.P.squaredNorm());
        }
    }

    TEST_CASE("centered Gamma has zero expectation in phi") {
        const auto p = testing::desk_params(0.1, 0.25);
        const auto s = dressed_ground_state(p, testing::grid_for(p));
        for (int i = 0; i < 3; ++i) CHECK(std::abs(s.phi.dot(s.gamma_matrix(i) * s.phi)) <= 1e-12);
    }

    TEST_CASE("fixed-dressing model reproduces the dressed Hamiltonian at P") {
        const auto p = testing::desk_params(0.1, 0.25);
        const auto s = dressed_ground_state(p, testing::grid_for(p));
        CHECK(coefficient_mismatch(dressed_at(s, p.P), s.HW) <= 1e-14);
    }

    TEST_CASE("dispersion probe against the free oracle") {
        const auto p = testing::desk_params(0.0, 0.25);
        const auto s = dressed_ground_state(p, testing::grid_for(p));
        const std::vector<Vec3> ks{Vec3(0.1, 0, 0), Vec3(0, -0.2, 0.05), Vec3(0.03, 0.02, 0.01)};
        double ref = 1e300;
        for (const auto& k : ks) ref = std::min(ref, (0.5 * k.squaredNorm() - p.P.dot(k)) / k.norm());
        CHECK(dispersion_bound_probe(s, ks) == doctest::Approx(ref).epsilon(1e-12));
        CHECK_THROWS_AS(dispersion_bound_probe(s, {}), Error);
    }

    TEST_CASE("dispersion probe stays above -1 at small coupling") {
        const auto p = testing::desk_params(0.1, 0.25);
        const auto s = dressed_ground_state(p, testing::grid_for(p));
        CHECK(dispersion_bound_probe(s, {Vec3(0.05, 0.02, 0), Vec3(0.1, 0.1, 0.1)}) > -1.0);
    }
}
