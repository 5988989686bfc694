#ifndef NELSON_DERIVATIVES_HPP
#define NELSON_DERIVATIVES_HPP

#include <array>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "nelson/dressing.hpp"

namespace nelson {

// ---- dressed picture: R0 = Q (H^W - E^W)^{-1} Q, Gamma centered at phi ----

/// Hellmann-Feynman gradient <psi, (P - P_f) psi> of the undressed ground state.
Vec3 grad_E(const DressedScaleState& state);

/// delta_ij - <Gamma_i phi, R0 Gamma_j phi> - <Gamma_j phi, R0 Gamma_i phi>.
Eigen::Matrix3d hessian_E(const DressedScaleState& state);

/// d^3/dt^3 E(P + t u) = -6 <R0 Gamma_u phi, Gamma_u R0 Gamma_u phi>.
double third_deriv_E(const DressedScaleState& state, const Vec3& u);
/// Along P/|P| (along e_x when P = 0).
double third_deriv_E_radial(const DressedScaleState& state);

/// R0 Gamma_i phi.
Eigen::VectorXd psi_first_derivative(const DressedScaleState& state, int i);
/// R0 Gamma_j R0 Gamma_i phi + R0 Gamma_i R0 Gamma_j phi - phi <Gamma_j phi, R0^2 Gamma_i phi>.
Eigen::VectorXd psi_second_derivative(const DressedScaleState& state, int i, int j);

struct ScalingNorms {
    double n0 = 0;   ///< max_i ||R0 Gamma_i phi||
    double n1 = 0;   ///< max_{i,j} ||R0 Gamma_i R0 Gamma_j phi||
    double n2 = 0;   ///< max_i ||R0^2 Gamma_i phi||
};
ScalingNorms scaling_norms(const DressedScaleState& state);

// ---- undressed picture at an arbitrary momentum on the same grid and basis ----

struct BareFiberState {
    Vec3 P = Vec3::Zero();
    std::shared_ptr<const SpectralProblem> problem;
    Vec3 gradE = Vec3::Zero();
    std::array<SparseMatrix, 3> V;   ///< (P - P_f - gradE)_i

    double E() const { return problem->ground().E; }
    const Eigen::VectorXd& psi() const { return problem->ground().psi; }
};

BareFiberState bare_fiber_state(const DressedScaleState& state, const Vec3& P);

/// -R V_i psi with R the reduced resolvent of H_P.
Eigen::VectorXd bare_psi_first_derivative(const BareFiberState& s, int i);
Eigen::VectorXd bare_psi_second_derivative(const BareFiberState& s, int i, int j);
Eigen::Matrix3d bare_hessian(const BareFiberState& s);

// ---- finite-difference oracles ----

struct FdComparison {
    std::string quantity;
    double analytic = 0;                ///< value (or norm, for vectors) of the analytic result
    std::vector<double> steps;          ///< h, h/2, h/4, ...
    std::vector<double> fdValues;       ///< FD value (or norm)
    std::vector<double> errors;         ///< |FD - analytic| (vector norm for states)
    double observedOrder = 0;           ///< log2 of the last error ratio
    double minOrder = 0;                ///< smallest order over consecutive step pairs
};

void finish_comparison(FdComparison& c);

struct FdOptions {
    double h = 0.05;
    int levels = 3;
};

struct DerivativeReport {
    Vec3 gradE = Vec3::Zero();
    Vec3 gradEDressed = Vec3::Zero();
    Eigen::Matrix3d hessE = Eigen::Matrix3d::Identity();
    double radialHessian = 1;
    double d3E_radial = 0;
    std::array<Eigen::VectorXd, 3> psiDeriv;
    std::vector<Eigen::VectorXd> psiDeriv2;   ///< (0,0) (0,1) (0,2) (1,1) (1,2) (2,2)
    std::vector<FdComparison> fd;
};

/// Ground energy and phase-aligned ground state of the fixed-dressing model at P.
GroundStateRecord dressed_ground_at(const DressedScaleState& state, const Vec3& P);

FdComparison fd_check_gradient(const DressedScaleState& state, const FdOptions& fd);
FdComparison fd_check_hessian(const DressedScaleState& state, const FdOptions& fd);
FdComparison fd_check_third(const DressedScaleState& state, const FdOptions& fd);
FdComparison fd_check_psi_first(const DressedScaleState& state, int i, const FdOptions& fd);
FdComparison fd_check_psi_second(const DressedScaleState& state, int i, int j, const FdOptions& fd);

DerivativeReport derivative_report(const DressedScaleState& state, bool withFd, const FdOptions& fd = {});

nlohmann::json to_json(const FdComparison& c);
void write_fd_csv(std::ostream& os, const std::vector<FdComparison>& rows);

}  // namespace nelson

#endif
