#ifndef NELSON_SPECTRAL_HPP
#define NELSON_SPECTRAL_HPP

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "nelson/fiber_operator.hpp"

namespace nelson {

struct SpectralOptions {
    double eigTol = 1e-10;          ///< eigen-residual tolerance, relative to max(1,|E|)
    double solveTol = 1e-10;        ///< relative residual for linear solves
    int maxIterations = 20000;      ///< matrix-vector product budget
    int krylovDim = 48;
    std::uint64_t seed = 20240917;
    Eigen::Index denseThreshold = 400;   ///< dense eigensolver at or below this dimension
    double minGap = 1e-9;
};

struct GroundStateRecord {
    double E = 0;
    double E1 = 0;   ///< second Ritz value (inf for a one-dimensional space)
    Eigen::VectorXd psi;
    double gap = 0;
    double residual = 0;
    double residual1 = 0;
    int iterations = 0;
    double tolerance = 0;
};

/// Lowest eigenpair and gap; the phase is fixed by <Omega, psi> >= 0.
GroundStateRecord ground_state(const SparseMatrix& H, const SpectralOptions& opt = {});

/// x orthogonal to psi with (H - E) x = rhs - psi <psi, rhs>.
Eigen::VectorXd solve_reduced_resolvent(const SparseMatrix& H, double E, const Eigen::VectorXd& psi,
                                        const Eigen::VectorXd& rhs, const SpectralOptions& opt = {});

/// (H - z) x = rhs for z off the spectrum.
Eigen::VectorXcd solve_shifted(const SparseMatrix& H, std::complex<double> z, const Eigen::VectorXcd& rhs,
                               const SpectralOptions& opt = {});
/// Real z below the spectrum (H - z positive definite).
Eigen::VectorXd solve_shifted(const SparseMatrix& H, double z, const Eigen::VectorXd& rhs,
                              const SpectralOptions& opt = {});

/// max_j ||(H - z_j)^{-1} v|| over z_j = center + radius exp(2 pi i j / nSamples).
double contour_sup_norm(const SparseMatrix& H, double center, const Eigen::VectorXd& v, double radius, int nSamples,
                        const SpectralOptions& opt = {});

/// ||(H - z)^{-1} v|| for many shifts from one Krylov space (full reorthogonalization).
/// With `deflate` set, the Krylov space is kept orthogonal to that unit vector.
std::vector<double> krylov_shifted_norms(const SparseMatrix& H, const Eigen::VectorXd& v,
                                         const std::vector<std::complex<double>>& shifts,
                                         const Eigen::VectorXd* deflate, const SpectralOptions& opt = {});

/// A Hamiltonian together with its ground state; repeated resolvent work reuses
/// a dense eigendecomposition on small spaces.
class SpectralProblem {
public:
    SpectralProblem(SparseMatrix H, const SpectralOptions& opt = {});

    const SparseMatrix& matrix() const { return H_; }
    Eigen::Index dimension() const { return H_.rows(); }
    const GroundStateRecord& ground() const { return gs_; }
    const SpectralOptions& options() const { return opt_; }

    /// Q (H - E)^{-1} Q rhs.
    Eigen::VectorXd reduced_resolvent(const Eigen::VectorXd& rhs) const;
    /// (H - z)^{-1} rhs with the ground-state pole split off analytically.
    Eigen::VectorXcd resolvent(std::complex<double> z, const Eigen::VectorXcd& rhs) const;
    double contour_sup_norm(double center, const Eigen::VectorXd& v, double radius, int nSamples) const;
    double expectation(const SparseMatrix& A) const;

private:
    SparseMatrix H_;
    SpectralOptions opt_;
    GroundStateRecord gs_;
    bool dense_ = false;
    Eigen::MatrixXd U_;
    Eigen::VectorXd lambda_;
};

/// Fix the sign so that v[0] > 0 (or the first non-negligible entry).
void fix_phase(Eigen::VectorXd& v);

}  // namespace nelson

#endif
