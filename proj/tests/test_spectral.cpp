#include <doctest.h>

#include <complex>
#include <random>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "nelson/spectral.hpp"

using namespace nelson;

namespace {

// Sparse symmetric matrix with a clear gap at the bottom.
SparseMatrix random_sparse(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    std::vector<Eigen::Triplet<double>> t;
    for (Eigen::Index i = 0; i < n; ++i) t.emplace_back(i, i, 2.0 + 0.01 * static_cast<double>(i) + 0.1 * nd(rng));
    t.emplace_back(0, 0, -1.0);
    for (Eigen::Index e = 0; e < 4 * n; ++e) {
        const Eigen::Index i = pick(rng), j = pick(rng);
        if (i == j) continue;
        const double x = 0.05 * nd(rng);
        t.emplace_back(i, j, x);
        t.emplace_back(j, i, x);
    }
    SparseMatrix H(n, n);
    H.setFromTriplets(t.begin(), t.end());
    return H;
}

}  // namespace

TEST_SUITE("spectral") {
    TEST_CASE("iterative ground state agrees with the dense eigensolver") {
        for (Eigen::Index n : {150, 700}) {
            const SparseMatrix H = random_sparse(n, 17 + static_cast<std::uint64_t>(n));
            const Eigen::MatrixXd Hd(H);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hd);
            const auto gs = ground_state(H);
            CHECK(std::abs(gs.E - es.eigenvalues()[0]) <= 1e-9);
            CHECK(std::abs(gs.gap - (es.eigenvalues()[1] - es.eigenvalues()[0])) <= 1e-7);
            CHECK(std::abs(std::abs(gs.psi.dot(es.eigenvectors().col(0))) - 1) <= 1e-9);
            CHECK(gs.psi[0] >= 0);
            CHECK((H * gs.psi - gs.E * gs.psi).norm() <= 1e-8);
        }
    }

    TEST_CASE("reduced resolvent against the dense pseudo-inverse") {
        const SparseMatrix H = random_sparse(500, 9);
        const Eigen::MatrixXd Hd(H);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hd);
        const Eigen::MatrixXd U = es.eigenvectors();
        Eigen::VectorXd inv = (es.eigenvalues().array() - es.eigenvalues()[0]).inverse();
        inv[0] = 0;
        const Eigen::MatrixXd R = U * inv.asDiagonal() * U.transpose();
        const Eigen::VectorXd rhs = Eigen::VectorXd::LinSpaced(500, -1, 1);
        const auto gs = ground_state(H);
        const Eigen::VectorXd x = solve_reduced_resolvent(H, gs.E, gs.psi, rhs);
        CHECK((x - R * rhs).norm() <= 1e-7 * (R * rhs).norm());
        CHECK(std::abs(x.dot(gs.psi)) <= 1e-9);

        const SpectralProblem sp(H);
        CHECK((sp.reduced_resolvent(rhs) - R * rhs).norm() <= 1e-7 * (R * rhs).norm());
    }

    TEST_CASE("shifted solves, real and complex") {
        const SparseMatrix H = random_sparse(450, 31);
        const Eigen::MatrixXd Hd(H);
        const Eigen::VectorXd rhs = Eigen::VectorXd::Ones(450);
        const double zr = -2.0;
        const Eigen::VectorXd xr = solve_shifted(H, zr, rhs);
        const Eigen::VectorXd refr = (Hd - zr * Eigen::MatrixXd::Identity(450, 450)).ldlt().solve(rhs);
        CHECK((xr - refr).norm() <= 1e-8 * refr.norm());

        const std::complex<double> z(1.5, 0.3);
        const Eigen::VectorXcd rc = rhs.cast<std::complex<double>>();
        const Eigen::VectorXcd xc = solve_shifted(H, z, rc);
        const Eigen::MatrixXcd Hz = Hd.cast<std::complex<double>>() - z * Eigen::MatrixXcd::Identity(450, 450);
        const Eigen::VectorXcd refc = Hz.partialPivLu().solve(rc);
        CHECK((xc - refc).norm() <= 1e-8 * refc.norm());
    }

    TEST_CASE("contour sup norm and multi-shift Krylov norms against dense") {
        const Eigen::Index n = 420;
        const SparseMatrix H = random_sparse(n, 77);
        const Eigen::MatrixXd Hd(H);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Hd);
        const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(n, 0.5, 1.5).normalized();
        const double center = es.eigenvalues()[0], radius = 0.5 * (es.eigenvalues()[1] - es.eigenvalues()[0]);
        const int samples = 12;
        const Eigen::VectorXd c = es.eigenvectors().transpose() * v;
        double ref = 0;
        std::vector<std::complex<double>> shifts;
        for (int j = 0; j < samples; ++j) {
            const std::complex<double> z = center + radius * std::polar(1.0, 2 * M_PI * j / samples);
            shifts.push_back(z);
            double s = 0;
            for (Eigen::Index i = 0; i < n; ++i) s += c[i] * c[i] / std::norm(es.eigenvalues()[i] - z);
            ref = std::max(ref, std::sqrt(s));
        }
        CHECK(contour_sup_norm(H, center, v, radius, samples) == doctest::Approx(ref).epsilon(1e-7));
        const SpectralProblem sp(H);
        CHECK(sp.contour_sup_norm(center, v, radius, samples) == doctest::Approx(ref).epsilon(1e-7));
        const auto norms = krylov_shifted_norms(H, v, shifts, nullptr);
        REQUIRE(norms.size() == shifts.size());
        double kmax = 0;
        for (double x : norms) kmax = std::max(kmax, x);
        CHECK(kmax == doctest::Approx(ref).epsilon(1e-7));
    }

    TEST_CASE("resolvent with the pole split off") {
        const Eigen::Index n = 300;
        const SparseMatrix H = random_sparse(n, 5);
        const SpectralProblem sp(H);
        const std::complex<double> z(sp.ground().E + 0.01, 0.02);
        const Eigen::VectorXcd rhs = Eigen::VectorXd::LinSpaced(n, 1, 2).cast<std::complex<double>>();
        const Eigen::MatrixXcd Hz = Eigen::MatrixXd(H).cast<std::complex<double>>() - z * Eigen::MatrixXcd::Identity(n, n);
        const Eigen::VectorXcd ref = Hz.partialPivLu().solve(rhs);
        CHECK((sp.resolvent(z, rhs) - ref).norm() <= 1e-8 * ref.norm());
    }

    TEST_CASE("phase convention") {
        Eigen::VectorXd v(3);
        v << -0.5, 0.2, 0.1;
        fix_phase(v);
        CHECK(v[0] > 0);
        v << 0.0, -0.3, 0.1;
        fix_phase(v);
        CHECK(v[1] > 0);
    }
}
