#ifndef NELSON_WAVEFUNCTIONS_HPP
#define NELSON_WAVEFUNCTIONS_HPP

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nelson/derivatives.hpp"
#include "nelson/dressing.hpp"

namespace nelson {

/// f^q at grid modes read off the eigenvector:
/// amplitude * sqrt(prod n_m!) / (sqrt(q!) prod_j sqrt(w_{m_j})).
double extract_fq(const FockBasis& basis, const MomentumGrid& grid, const Eigen::VectorXd& psi,
                  const std::vector<int>& modeTuple);

/// |sum over permutations of prod_j 1/|k|_{pi,j} - prod_j 1/|k_j|| relative to the right side.
double combinatorial_identity_check(const std::vector<double>& moduli);

/// Pull-through evaluation of photon wavefunctions of the undressed ground state at
/// arbitrary (off-grid) photon momenta. Only the diagonal (P - P_f)^2 part of H moves
/// with the momentum shift, so one assembled H_P serves every k.
class FroehlichEvaluator {
public:
    FroehlichEvaluator(const DressedScaleState& state);
    FroehlichEvaluator(const DressedScaleState& state, BareFiberState bare);

    const BareFiberState& bare() const { return bare_; }
    double E() const { return bare_.E(); }

    /// (-1)^q / sqrt(q!) sum_pi <Omega, prod_j v R(P - k_{pi,j}, |k|_{pi,j}) psi>.
    double fq(const std::vector<Vec3>& kList) const;
    double f1(const Vec3& k) const { return fq({k}); }

    double f1_dP(const Vec3& k, int i) const;
    double f1_dPdP(const Vec3& k, int i, int j) const;
    double f1_dk(const Vec3& k, int i) const;
    double f1_dkdk(const Vec3& k, int i, int j) const;
    double f1_dPdk(const Vec3& k, int iP, int ik) const;

private:
    struct Shifted;
    Shifted shifted(int level, const Vec3& Pshift, double c) const;
    Eigen::VectorXd level_psi(int level, const Eigen::VectorXd& v) const;
    Eigen::VectorXd deficit(int level, const Vec3& Pshift, int i) const;
    const Eigen::Matrix3d& hessian() const;

    const DressedScaleState* state_;
    BareFiberState bare_;
    std::vector<SparseMatrix> blocks_;   ///< top-left level-L blocks of H_P
    std::vector<Vec3> photonMomentum_;   ///< total photon momentum of each basis state
    mutable std::shared_ptr<Eigen::Matrix3d> hess_;
    mutable std::array<std::shared_ptr<Eigen::VectorXd>, 3> dpsi_;
    const Eigen::VectorXd& dpsi(int i) const;
};

/// max |f^1(k)| |k| / v(k) over the samples with v(k) > 0 (0 if there are none).
double bound_check_f1(const FroehlichEvaluator& ev, const ModelParams& params, const std::vector<Vec3>& kList);

/// The three individually singular pieces of d_i d_j f^1 at small |k| and their sum.
struct CancellationTerms {
    double k = 0;
    double t1 = 0, t2 = 0, t3 = 0, sum = 0;
    double largest = 0, ratio = 0;
    double full = 0;    ///< analytic d_i d_j f^1
};
CancellationTerms cancellation_demo_q1(const DressedScaleState& state, const FroehlichEvaluator& ev, const Vec3& k,
                                       int i, int j);

struct WaveFunctionSample {
    int q = 1;
    std::vector<Vec3> k;
    double value = 0;
    std::string route;        ///< extracted | froehlich
    std::string derivative;   ///< none | dP<i> | dk<i> | ...
};
void write_samples_csv(std::ostream& os, const std::vector<WaveFunctionSample>& samples);

}  // namespace nelson

#endif
