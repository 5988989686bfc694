#include "nelson/derivatives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "nelson/io.hpp"

namespace nelson {

namespace {

Eigen::VectorXd R0(const DressedScaleState& s, const Eigen::VectorXd& v) { return s.dressed->reduced_resolvent(v); }

Eigen::VectorXd gphi(const DressedScaleState& s, int i) { return s.gamma_matrix(i) * s.phi; }

Vec3 unit(int i) { return Vec3::Unit(i); }

Vec3 radial_direction(const Vec3& P) { return P.norm() > 0 ? Vec3(P / P.norm()) : Vec3::UnitX(); }

SparseMatrix directional(const DressedScaleState& s, const Vec3& u) {
    return u.x() * s.gamma_matrix(0) + u.y() * s.gamma_matrix(1) + u.z() * s.gamma_matrix(2);
}

}  // namespace

Vec3 grad_E(const DressedScaleState& state) { return state.gradE; }

Eigen::Matrix3d hessian_E(const DressedScaleState& state) {
    std::array<Eigen::VectorXd, 3> g, rg;
    for (int i = 0; i < 3; ++i) {
        g[i] = gphi(state, i);
        rg[i] = R0(state, g[i]);
    }
    Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) H(i, j) -= g[i].dot(rg[j]) + g[j].dot(rg[i]);
    return 0.5 * (H + H.transpose());
}

double third_deriv_E(const DressedScaleState& state, const Vec3& u) {
    const SparseMatrix G = directional(state, u);
    const Eigen::VectorXd x = R0(state, G * state.phi);
    return -6.0 * x.dot(G * x);
}

double third_deriv_E_radial(const DressedScaleState& state) {
    return third_deriv_E(state, radial_direction(state.params.P));
}

Eigen::VectorXd psi_first_derivative(const DressedScaleState& state, int i) { return R0(state, gphi(state, i)); }

Eigen::VectorXd psi_second_derivative(const DressedScaleState& state, int i, int j) {
    const Eigen::VectorXd xi = R0(state, gphi(state, i));
    const Eigen::VectorXd xj = R0(state, gphi(state, j));
    Eigen::VectorXd out = R0(state, state.gamma_matrix(j) * xi) + R0(state, state.gamma_matrix(i) * xj);
    out -= state.phi * xj.dot(xi);
    return out;
}

ScalingNorms scaling_norms(const DressedScaleState& state) {
    ScalingNorms n;
    std::array<Eigen::VectorXd, 3> x;
    for (int i = 0; i < 3; ++i) {
        x[i] = R0(state, gphi(state, i));
        n.n0 = std::max(n.n0, x[i].norm());
        n.n2 = std::max(n.n2, R0(state, x[i]).norm());
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) n.n1 = std::max(n.n1, R0(state, state.gamma_matrix(i) * x[j]).norm());
    return n;
}

BareFiberState bare_fiber_state(const DressedScaleState& state, const Vec3& P) {
    BareFiberState s;
    s.P = P;
    ModelParams p = state.params;
    p.P = P;
    s.problem = std::make_shared<const SpectralProblem>(assemble(nelson_hamiltonian(p, *state.grid), *state.basis),
                                                        state.bare->options());
    s.gradE = momentum_expectation(P, *state.grid, *state.basis, s.psi());
    const auto V = centered(momentum_deficit(P, *state.grid), s.gradE);
    for (int i = 0; i < 3; ++i) s.V[static_cast<std::size_t>(i)] = assemble_component(V, i, *state.basis);
    return s;
}

Eigen::VectorXd bare_psi_first_derivative(const BareFiberState& s, int i) {
    return -s.problem->reduced_resolvent(s.V[static_cast<std::size_t>(i)] * s.psi());
}

Eigen::VectorXd bare_psi_second_derivative(const BareFiberState& s, int i, int j) {
    const auto& R = *s.problem;
    const Eigen::VectorXd xi = R.reduced_resolvent(s.V[static_cast<std::size_t>(i)] * s.psi());
    const Eigen::VectorXd xj = R.reduced_resolvent(s.V[static_cast<std::size_t>(j)] * s.psi());
    Eigen::VectorXd out = R.reduced_resolvent(s.V[static_cast<std::size_t>(j)] * xi) +
                          R.reduced_resolvent(s.V[static_cast<std::size_t>(i)] * xj);
    out -= s.psi() * xj.dot(xi);
    return out;
}

Eigen::Matrix3d bare_hessian(const BareFiberState& s) {
    std::array<Eigen::VectorXd, 3> g, rg;
    for (int i = 0; i < 3; ++i) {
        g[i] = s.V[static_cast<std::size_t>(i)] * s.psi();
        rg[i] = s.problem->reduced_resolvent(g[i]);
    }
    Eigen::Matrix3d H = Eigen::Matrix3d::Identity();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) H(i, j) -= g[i].dot(rg[j]) + g[j].dot(rg[i]);
    return 0.5 * (H + H.transpose());
}

GroundStateRecord dressed_ground_at(const DressedScaleState& state, const Vec3& P) {
    GroundStateRecord r = ground_state(assemble(dressed_at(state, P), *state.basis), state.dressed->options());
    if (r.psi.dot(state.phi) < 0) r.psi = -r.psi;
    return r;
}

void finish_comparison(FdComparison& c) {
    const auto n = c.errors.size();
    c.minOrder = std::numeric_limits<double>::infinity();
    for (std::size_t l = 1; l < n; ++l) {
        const double p = std::log2(c.errors[l - 1] / c.errors[l]);
        c.minOrder = std::min(c.minOrder, p);
        c.observedOrder = p;
    }
    if (n < 2) c.minOrder = c.observedOrder = 0;
}

namespace {

template <typename F>
FdComparison scalar_comparison(const std::string& name, double analytic, const FdOptions& fd, F fdAt) {
    FdComparison c;
    c.quantity = name;
    c.analytic = analytic;
    double h = fd.h;
    for (int l = 0; l < fd.levels; ++l, h /= 2) {
        const double v = fdAt(h);
        c.steps.push_back(h);
        c.fdValues.push_back(v);
        c.errors.push_back(std::abs(v - analytic));
    }
    finish_comparison(c);
    return c;
}

template <typename F>
FdComparison vector_comparison(const std::string& name, const Eigen::VectorXd& analytic, const FdOptions& fd, F fdAt) {
    FdComparison c;
    c.quantity = name;
    c.analytic = analytic.norm();
    double h = fd.h;
    for (int l = 0; l < fd.levels; ++l, h /= 2) {
        const Eigen::VectorXd v = fdAt(h);
        c.steps.push_back(h);
        c.fdValues.push_back(v.norm());
        c.errors.push_back((v - analytic).norm());
    }
    finish_comparison(c);
    return c;
}

}  // namespace

FdComparison fd_check_gradient(const DressedScaleState& state, const FdOptions& fd) {
    const Vec3 P = state.params.P;
    const Vec3 g = grad_E(state);
    FdComparison c;
    c.quantity = "grad_E";
    c.analytic = g.norm();
    double h = fd.h;
    for (int l = 0; l < fd.levels; ++l, h /= 2) {
        Vec3 v;
        for (int i = 0; i < 3; ++i)
            v[i] = (bare_energy_at(state, P + h * unit(i)) - bare_energy_at(state, P - h * unit(i))) / (2 * h);
        c.steps.push_back(h);
        c.fdValues.push_back(v.norm());
        c.errors.push_back((v - g).norm());
    }
    finish_comparison(c);
    return c;
}

FdComparison fd_check_hessian(const DressedScaleState& state, const FdOptions& fd) {
    const Vec3 P = state.params.P;
    const Eigen::Matrix3d H = hessian_E(state);
    auto E = [&](const Vec3& Q) { return dressed_ground_at(state, Q).E; };
    FdComparison c;
    c.quantity = "hessian_E";
    c.analytic = H.norm();
    double h = fd.h;
    const double e0 = state.EW;
    for (int l = 0; l < fd.levels; ++l, h /= 2) {
        Eigen::Matrix3d F;
        for (int i = 0; i < 3; ++i) {
            F(i, i) = (E(P + h * unit(i)) - 2 * e0 + E(P - h * unit(i))) / (h * h);
            for (int j = i + 1; j < 3; ++j) {
                const Vec3 a = h * unit(i), b = h * unit(j);
                F(i, j) = F(j, i) = (E(P + a + b) - E(P + a - b) - E(P - a + b) + E(P - a - b)) / (4 * h * h);
            }
        }
        c.steps.push_back(h);
        c.fdValues.push_back(F.norm());
        c.errors.push_back((F - H).norm());
    }
    finish_comparison(c);
    return c;
}

FdComparison fd_check_third(const DressedScaleState& state, const FdOptions& fd) {
    const Vec3 P = state.params.P;
    const Vec3 u = radial_direction(P);
    auto E = [&](double t) { return dressed_ground_at(state, P + t * u).E; };
    return scalar_comparison("d3E_radial", third_deriv_E_radial(state), fd, [&](double h) {
        return (E(2 * h) - 2 * E(h) + 2 * E(-h) - E(-2 * h)) / (2 * h * h * h);
    });
}

FdComparison fd_check_psi_first(const DressedScaleState& state, int i, const FdOptions& fd) {
    const Vec3 P = state.params.P;
    return vector_comparison("psi_d" + std::to_string(i), psi_first_derivative(state, i), fd, [&](double h) {
        const Eigen::VectorXd a = dressed_ground_at(state, P + h * unit(i)).psi;
        const Eigen::VectorXd b = dressed_ground_at(state, P - h * unit(i)).psi;
        return Eigen::VectorXd((a - b) / (2 * h));
    });
}

FdComparison fd_check_psi_second(const DressedScaleState& state, int i, int j, const FdOptions& fd) {
    const Vec3 P = state.params.P;
    auto phi = [&](const Vec3& Q) { return dressed_ground_at(state, Q).psi; };
    return vector_comparison("psi_d" + std::to_string(i) + std::to_string(j), psi_second_derivative(state, i, j), fd,
                             [&](double h) {
                                 if (i == j)
                                     return Eigen::VectorXd(
                                         (phi(P + h * unit(i)) - 2 * state.phi + phi(P - h * unit(i))) / (h * h));
                                 const Vec3 a = h * unit(i), b = h * unit(j);
                                 return Eigen::VectorXd(
                                     (phi(P + a + b) - phi(P + a - b) - phi(P - a + b) + phi(P - a - b)) /
                                     (4 * h * h));
                             });
}

DerivativeReport derivative_report(const DressedScaleState& state, bool withFd, const FdOptions& fd) {
    DerivativeReport r;
    r.gradE = grad_E(state);
    r.gradEDressed = state.gammaConst;
    r.hessE = hessian_E(state);
    const Vec3 u = radial_direction(state.params.P);
    r.radialHessian = u.dot(r.hessE * u);
    r.d3E_radial = third_deriv_E_radial(state);
    for (int i = 0; i < 3; ++i) r.psiDeriv[static_cast<std::size_t>(i)] = psi_first_derivative(state, i);
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) r.psiDeriv2.push_back(psi_second_derivative(state, i, j));
    if (withFd) {
        r.fd.push_back(fd_check_gradient(state, fd));
        r.fd.push_back(fd_check_hessian(state, fd));
        r.fd.push_back(fd_check_third(state, fd));
        const int i = u.cwiseAbs().maxCoeff() == std::abs(u.x()) ? 0 : (std::abs(u.y()) >= std::abs(u.z()) ? 1 : 2);
        r.fd.push_back(fd_check_psi_first(state, i, fd));
        r.fd.push_back(fd_check_psi_second(state, i, i, fd));
        r.fd.push_back(fd_check_psi_second(state, i, (i + 1) % 3, fd));
    }
    return r;
}

nlohmann::json to_json(const FdComparison& c) {
    return {{"quantity", c.quantity}, {"analytic", c.analytic},     {"steps", c.steps},
            {"fd", c.fdValues},       {"errors", c.errors},         {"observed_order", c.observedOrder},
            {"min_order", c.minOrder}};
}

void write_fd_csv(std::ostream& os, const std::vector<FdComparison>& rows) {
    os << "quantity,analytic,h,finite_difference,error,observed_order\n";
    for (const auto& c : rows)
        for (std::size_t l = 0; l < c.steps.size(); ++l)
            os << c.quantity << ',' << fmt_double(c.analytic) << ',' << fmt_double(c.steps[l]) << ','
               << fmt_double(c.fdValues[l]) << ',' << fmt_double(c.errors[l]) << ','
               << (l == 0 ? std::string("") : fmt_double(std::log2(c.errors[l - 1] / c.errors[l]))) << '\n';
}

}  // namespace nelson
