#ifndef NELSON_FIBER_OPERATOR_HPP
#define NELSON_FIBER_OPERATOR_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <json.hpp>

#include "nelson/fock.hpp"
#include "nelson/grid.hpp"

namespace nelson {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using MatrixX3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Affine vector field operator A = w + sum_m K_m N_m + sum_m C_m (b_m + b*_m).
struct VectorFiberOperator {
    Vec3 w = Vec3::Zero();
    MatrixX3 K;
    MatrixX3 C;

    Eigen::Index mode_count() const { return K.rows(); }
    VectorFiberOperator operator-() const { return {-w, -K, -C}; }
};

/// H = 1/2 |A|^2 + sum_m d_m N_m + sum_m g_m (b_m + b*_m) + e.
///
/// The family is closed under b_m -> b_m + h_m for real h, so Weyl
/// conjugations are carried out exactly on the coefficients.
struct FiberOperator {
    VectorFiberOperator A;
    Eigen::VectorXd d;
    Eigen::VectorXd g;
    double e = 0;

    Eigen::Index mode_count() const { return d.size(); }
};

/// 1/2 (P - P_f)^2 + H_f + sum_m g_m (b_m + b*_m) on the grid.
FiberOperator nelson_hamiltonian(const ModelParams& params, const MomentumGrid& grid);

/// P - P_f as a vector operator.
VectorFiberOperator momentum_deficit(const Vec3& P, const MomentumGrid& grid);

/// Conjugation by W = exp(sum h_m (b_m - b*_m)): every b_m is replaced by b_m + h_m.
FiberOperator displace(const FiberOperator& op, const Eigen::VectorXd& h);
VectorFiberOperator displace(const VectorFiberOperator& op, const Eigen::VectorXd& h);

/// Sign-invariant expanded coefficients used to compare two representations of
/// the same operator: 1/2|B|^2 + sum dEff N + sum gEff X + eEff with B = K N + C X.
struct CanonicalForm {
    MatrixX3 K, C;
    Eigen::VectorXd dEff, gEff;
    double eEff = 0;
};
CanonicalForm canonical_form(const FiberOperator& op);

/// Max absolute coefficient difference between two canonical forms.
double coefficient_mismatch(const FiberOperator& a, const FiberOperator& b);

/// Exact matrix elements of op restricted to the basis (normal-ordering constants included).
SparseMatrix assemble(const FiberOperator& op, const FockBasis& basis);

/// Component i of a vector operator restricted to the basis.
SparseMatrix assemble_component(const VectorFiberOperator& op, int i, const FockBasis& basis);

/// h_m = -g_m / (|k_m| alpha_m), alpha_m = 1 - khat_m . gradE.
Eigen::VectorXd weyl_coefficients(const ModelParams& params, const MomentumGrid& grid, const Vec3& gradE);

/// W H W* computed by displacing the Nelson Hamiltonian.
FiberOperator transformed_by_displacement(const ModelParams& params, const MomentumGrid& grid, const Vec3& gradE);

/// Gamma^2/2 + sum alpha|k| N + c_P built directly; `couplings` defaults to the grid couplings.
FiberOperator transformed_closed_form(const ModelParams& params, const MomentumGrid& grid, const Vec3& gradE,
                                      const Eigen::VectorXd* couplings = nullptr);

/// Dual-route transformed Hamiltonian; throws if the two routes disagree beyond `tolerance`.
FiberOperator transformed_hamiltonian(const ModelParams& params, const MomentumGrid& grid, const Vec3& gradE,
                                      double tolerance = 1e-12);

/// Gamma = W (P_f - P) W* + gradE.
VectorFiberOperator gamma_operator(const ModelParams& params, const MomentumGrid& grid, const Vec3& gradE);

/// The same operator with its constant shifted so that <phi, Gamma phi> = 0 exactly.
VectorFiberOperator centered(const VectorFiberOperator& op, const Vec3& expectation);

nlohmann::json to_json(const FiberOperator& op);
nlohmann::json to_json(const VectorFiberOperator& op);
FiberOperator fiber_operator_from_json(const nlohmann::json& j);

}  // namespace nelson

#endif
