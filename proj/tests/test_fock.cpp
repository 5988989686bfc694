#include <doctest.h>

#include <random>

#include "helpers.hpp"

using namespace nelson;

TEST_SUITE("fock") {
    TEST_CASE("dimension is the stars-and-bars count") {
        for (int M : {1, 2, 5, 9})
            for (int Q : {0, 1, 2, 3, 4}) {
                const auto b = build_basis(M, Q);
                CHECK(b.dimension() == static_cast<Eigen::Index>(testing::binomial(M + Q, Q)));
                CHECK(fock_dimension(M, Q) == static_cast<std::uint64_t>(testing::binomial(M + Q, Q)));
            }
    }

    TEST_CASE("level prefixes and photon counts") {
        const auto b = build_basis(5, 3);
        CHECK(b.photon_count(0) == 0);
        for (int L = 0; L <= 3; ++L) {
            CHECK(b.level_end(L) == static_cast<Eigen::Index>(testing::binomial(5 + L, L)));
            for (Eigen::Index i = b.level_end(L - 1); i < b.level_end(L); ++i) CHECK(b.photon_count(i) == L);
        }
    }

    TEST_CASE("index_of inverts occupation_of") {
        const auto b = build_basis(4, 4);
        for (Eigen::Index i = 0; i < b.dimension(); ++i) CHECK(b.index_of(b.occupation_of(i)) == i);
        CHECK(b.index_of({5, 0, 0, 0}) == -1);
        CHECK(b.index_of({1, 0, 0}) == -1);
    }

    TEST_CASE("per-mode cap") {
        const auto b = build_basis(3, 3, 1);
        CHECK(b.dimension() == 1 + 3 + 3 + 1);
        for (Eigen::Index i = 0; i < b.dimension(); ++i)
            for (int n : b.occupation_of(i)) CHECK(n <= 1);
    }

    TEST_CASE("canonical commutation relations below the top level") {
        const auto b = build_basis(4, 3);
        std::mt19937_64 rng(11);
        std::normal_distribution<double> nd;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(b.dimension());
        for (Eigen::Index j = 0; j < b.level_end(2); ++j) v[j] = nd(rng);
        for (int m = 0; m < 4; ++m)
            for (int n = 0; n < 4; ++n) {
                const Eigen::VectorXd ab = apply_annihilate<double>(b, m, apply_create<double>(b, n, v).vector);
                const Eigen::VectorXd ba = apply_create<double>(b, n, apply_annihilate<double>(b, m, v)).vector;
                Eigen::VectorXd d = ab - ba;
                if (m == n) d -= v;
                CHECK(d.cwiseAbs().maxCoeff() <= 1e-12);
            }
    }

    TEST_CASE("lowering agrees with the dense occupation-number oracle") {
        const auto b = build_basis(3, 3);
        std::mt19937_64 rng(5);
        std::normal_distribution<double> nd;
        Eigen::VectorXd v(b.dimension());
        for (auto& x : v) x = nd(rng);
        for (int m = 0; m < 3; ++m) {
            const Eigen::MatrixXd B = testing::dense_lowering(b, m);
            CHECK((apply_annihilate<double>(b, m, v) - B * v).norm() < 1e-13);
            const auto c = apply_create<double>(b, m, v);
            CHECK((c.vector - B.transpose() * v).norm() < 1e-13);
        }
    }

    TEST_CASE("creation reports leakage above the truncation") {
        const auto b = build_basis(2, 2);
        Eigen::VectorXd v = Eigen::VectorXd::Zero(b.dimension());
        v[b.index_of({2, 0})] = 1.0;
        const auto r = apply_create<double>(b, 0, v);
        CHECK(r.vector.norm() == 0.0);
        CHECK(r.leakage == doctest::Approx(3.0));
        v.setZero();
        v[0] = 1.0;
        CHECK(apply_create<double>(b, 1, v).leakage == 0.0);
        CHECK_THROWS_AS(apply_create<double>(b, 2, v), Error);
    }

    TEST_CASE("embedding preserves amplitudes") {
        const auto parent = build_basis(3, 2);
        const auto child = build_basis(5, 3);
        Eigen::VectorXd v(parent.dimension());
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 1.0 + static_cast<double>(i);
        const Eigen::VectorXd e = embed<double>(v, parent, child);
        CHECK(e.norm() == doctest::Approx(v.norm()));
        for (Eigen::Index i = 0; i < parent.dimension(); ++i) {
            auto occ = parent.occupation_of(i);
            occ.resize(5, 0);
            CHECK(e[child.index_of(occ)] == v[i]);
        }
        CHECK_THROWS_AS(embed<double>(e, child, parent), Error);
    }

    TEST_CASE("dimension cap is enforced") {
        CHECK_THROWS_AS(build_basis(100, 4, -1, 1000), Error);
        CHECK_NOTHROW(build_basis(10, 2, -1, 1000));
    }
}
