#include "nelson/wavefunctions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <Eigen/Cholesky>

#include "nelson/io.hpp"

namespace nelson {

double extract_fq(const FockBasis& basis, const MomentumGrid& grid, const Eigen::VectorXd& psi,
                  const std::vector<int>& modeTuple) {
    std::vector<std::uint32_t> modes;
    double weights = 1;
    for (int m : modeTuple) {
        if (m < 0 || m >= basis.mode_count()) throw Error("extract_fq: mode index out of range");
        modes.push_back(static_cast<std::uint32_t>(m));
        weights *= grid.modes[static_cast<std::size_t>(m)].w;
    }
    std::sort(modes.begin(), modes.end());
    const auto idx = basis.index_of_modes(modes);
    if (idx < 0) throw Error("extract_fq: mode tuple outside the truncation");
    double factorials = 1;
    for (std::size_t j = 0; j < modes.size();) {
        std::size_t e = j;
        while (e < modes.size() && modes[e] == modes[j]) ++e;
        for (std::size_t c = 2; c <= e - j; ++c) factorials *= static_cast<double>(c);
        j = e;
    }
    double qfact = 1;
    for (std::size_t c = 2; c <= modes.size(); ++c) qfact *= static_cast<double>(c);
    return psi[idx] * std::sqrt(factorials) / (std::sqrt(qfact) * std::sqrt(weights));
}

double combinatorial_identity_check(const std::vector<double>& moduli) {
    const auto q = moduli.size();
    if (q == 0 || q > 8) throw Error("combinatorial_identity_check: need 1 <= q <= 8");
    std::vector<std::size_t> pi(q);
    std::iota(pi.begin(), pi.end(), 0);
    double lhs = 0;
    do {
        double prod = 1, tail = 0;
        for (std::size_t j = q; j-- > 0;) {
            tail += moduli[pi[j]];
            prod /= tail;
        }
        lhs += prod;
    } while (std::next_permutation(pi.begin(), pi.end()));
    double rhs = 1;
    for (double m : moduli) rhs /= m;
    return std::abs(lhs - rhs) / std::abs(rhs);
}

struct FroehlichEvaluator::Shifted {
    SparseMatrix M;
    std::shared_ptr<Eigen::LDLT<Eigen::MatrixXd>> ldlt;
    SpectralOptions opt;

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        if (ldlt) return ldlt->solve(rhs);
        return solve_shifted(M, 0.0, rhs, opt);
    }
};

FroehlichEvaluator::FroehlichEvaluator(const DressedScaleState& state)
    : FroehlichEvaluator(state, [&] {
          BareFiberState b;
          b.P = state.params.P;
          b.problem = state.bare;
          b.gradE = state.gradE;
          const auto V = centered(momentum_deficit(b.P, *state.grid), b.gradE);
          for (int i = 0; i < 3; ++i) b.V[static_cast<std::size_t>(i)] = assemble_component(V, i, *state.basis);
          return b;
      }()) {}

FroehlichEvaluator::FroehlichEvaluator(const DressedScaleState& state, BareFiberState bare)
    : state_(&state), bare_(std::move(bare)) {
    const auto& basis = *state.basis;
    const auto& H = bare_.problem->matrix();
    for (int L = 0; L < basis.max_photons(); ++L) {
        const auto n = basis.level_end(L);
        blocks_.emplace_back(H.topLeftCorner(n, n));
    }
    photonMomentum_.resize(static_cast<std::size_t>(basis.dimension()));
    for (Eigen::Index j = 0; j < basis.dimension(); ++j) {
        Vec3 s = Vec3::Zero();
        for (auto m : basis.modes_of(j)) s += state.grid->modes[m].k;
        photonMomentum_[static_cast<std::size_t>(j)] = s;
    }
}

// (H^{(L)}_{P - Pshift} - E + c)
FroehlichEvaluator::Shifted FroehlichEvaluator::shifted(int level, const Vec3& Pshift, double c) const {
    Shifted s;
    s.opt = bare_.problem->options();
    s.M = blocks_.at(static_cast<std::size_t>(level));
    const Vec3 P = bare_.P;
    const Vec3 Pn = P - Pshift;
    for (Eigen::Index j = 0; j < s.M.rows(); ++j) {
        const Vec3& K = photonMomentum_[static_cast<std::size_t>(j)];
        s.M.coeffRef(j, j) += 0.5 * (Pn - K).squaredNorm() - 0.5 * (P - K).squaredNorm() + c - E();
    }
    if (s.M.rows() <= s.opt.denseThreshold) {
        s.ldlt = std::make_shared<Eigen::LDLT<Eigen::MatrixXd>>(Eigen::MatrixXd(s.M));
        if (s.ldlt->info() != Eigen::Success || !s.ldlt->isPositive() ||
            !(s.ldlt->vectorD().minCoeff() > s.opt.minGap))
            throw Error("froehlich: shifted resolvent is near-singular");
    }
    return s;
}

Eigen::VectorXd FroehlichEvaluator::level_psi(int level, const Eigen::VectorXd& v) const {
    return v.head(state_->basis->level_end(level));
}

// (P - Pshift - P_f - gradE)_i restricted to level L, as a diagonal
Eigen::VectorXd FroehlichEvaluator::deficit(int level, const Vec3& Pshift, int i) const {
    const auto n = state_->basis->level_end(level);
    Eigen::VectorXd d(n);
    for (Eigen::Index j = 0; j < n; ++j)
        d[j] = bare_.P[i] - Pshift[i] - photonMomentum_[static_cast<std::size_t>(j)][i] - bare_.gradE[i];
    return d;
}

const Eigen::Matrix3d& FroehlichEvaluator::hessian() const {
    if (!hess_) hess_ = std::make_shared<Eigen::Matrix3d>(bare_hessian(bare_));
    return *hess_;
}

const Eigen::VectorXd& FroehlichEvaluator::dpsi(int i) const {
    auto& slot = dpsi_[static_cast<std::size_t>(i)];
    if (!slot) slot = std::make_shared<Eigen::VectorXd>(bare_psi_first_derivative(bare_, i));
    return *slot;
}

double FroehlichEvaluator::fq(const std::vector<Vec3>& kList) const {
    const int q = static_cast<int>(kList.size());
    const int Q = state_->basis->max_photons();
    if (q == 0) return bare_.psi()[0];
    if (q > 3) throw Error("froehlich_fq: q > 3 not supported");
    if (q > Q) return 0.0;
    for (const auto& k : kList)
        if (!(k.norm() > 0)) throw Error("froehlich_fq: photon momenta must be nonzero");
    std::vector<int> pi(static_cast<std::size_t>(q));
    std::iota(pi.begin(), pi.end(), 0);
    double total = 0;
    do {
        Eigen::VectorXd u = bare_.psi();
        Vec3 kSum = Vec3::Zero();
        double wSum = 0;
        for (int j = q - 1; j >= 0; --j) {
            const auto& k = kList[static_cast<std::size_t>(pi[static_cast<std::size_t>(j)])];
            kSum += k;
            wSum += k.norm();
            const int level = Q - (q - j);
            const double v = form_factor(k, state_->params);
            if (v == 0) {
                u.setZero(state_->basis->level_end(level));
                break;
            }
            u = -v * shifted(level, kSum, wSum).solve(level_psi(level, u));
        }
        total += u[0];
    } while (std::next_permutation(pi.begin(), pi.end()));
    double qfact = 1;
    for (int c = 2; c <= q; ++c) qfact *= c;
    return total / std::sqrt(qfact);
}

// f = -v <y, Pi psi> with y = R Omega, x = R Pi psi; derivatives of R insert diagonal operators.
double FroehlichEvaluator::f1_dP(const Vec3& k, int i) const {
    const int L = state_->basis->max_photons() - 1;
    const double v = form_factor(k, state_->params);
    if (v == 0 || L < 0) return 0.0;
    const auto R = shifted(L, k, k.norm());
    const Eigen::VectorXd omega = Eigen::VectorXd::Unit(state_->basis->level_end(L), 0);
    const Eigen::VectorXd y = R.solve(omega), x = R.solve(level_psi(L, bare_.psi()));
    const Eigen::VectorXd B = deficit(L, k, i);
    return v * y.dot(B.cwiseProduct(x)) - v * y.dot(level_psi(L, dpsi(i)));
}

double FroehlichEvaluator::f1_dPdP(const Vec3& k, int i, int j) const {
    const int L = state_->basis->max_photons() - 1;
    const double v = form_factor(k, state_->params);
    if (v == 0 || L < 0) return 0.0;
    const auto R = shifted(L, k, k.norm());
    const Eigen::VectorXd omega = Eigen::VectorXd::Unit(state_->basis->level_end(L), 0);
    const Eigen::VectorXd y = R.solve(omega), x = R.solve(level_psi(L, bare_.psi()));
    const Eigen::VectorXd Bi = deficit(L, k, i), Bj = deficit(L, k, j);
    const Eigen::VectorXd d2psi = bare_psi_second_derivative(bare_, i, j);
    const double dij = (i == j ? 1.0 : 0.0) - hessian()(i, j);
    // d_i d_j <Omega, R Pi psi>
    const double F2 = y.dot(Bj.cwiseProduct(R.solve(Bi.cwiseProduct(x)))) +
                      y.dot(Bi.cwiseProduct(R.solve(Bj.cwiseProduct(x)))) - dij * y.dot(x) -
                      y.dot(Bi.cwiseProduct(R.solve(level_psi(L, dpsi(j))))) -
                      y.dot(Bj.cwiseProduct(R.solve(level_psi(L, dpsi(i))))) + y.dot(level_psi(L, d2psi));
    return -v * F2;
}

double FroehlichEvaluator::f1_dk(const Vec3& k, int i) const {
    const int L = state_->basis->max_photons() - 1;
    const auto u = form_factor_radial(k.norm(), state_->params);
    if ((u.value == 0 && u.d1 == 0) || L < 0) return 0.0;
    const double r = k.norm();
    const Vec3 kh = k / r;
    const auto R = shifted(L, k, r);
    const Eigen::VectorXd omega = Eigen::VectorXd::Unit(state_->basis->level_end(L), 0);
    const Eigen::VectorXd y = R.solve(omega), x = R.solve(level_psi(L, bare_.psi()));
    // B^k_i = khat_i - (P - k - P_f)_i
    const Eigen::VectorXd Bk = kh[i] - (deficit(L, k, i).array() + bare_.gradE[i]);
    const double F = y.dot(level_psi(L, bare_.psi()));
    const double dF = -y.dot(Bk.cwiseProduct(x));
    return -(u.d1 * kh[i]) * F - u.value * dF;
}

double FroehlichEvaluator::f1_dkdk(const Vec3& k, int i, int j) const {
    const int L = state_->basis->max_photons() - 1;
    const auto u = form_factor_radial(k.norm(), state_->params);
    if ((u.value == 0 && u.d1 == 0 && u.d2 == 0) || L < 0) return 0.0;
    const double r = k.norm();
    const Vec3 kh = k / r;
    const double dij = i == j ? 1.0 : 0.0;
    const auto R = shifted(L, k, r);
    const Eigen::VectorXd omega = Eigen::VectorXd::Unit(state_->basis->level_end(L), 0);
    const Eigen::VectorXd y = R.solve(omega), x = R.solve(level_psi(L, bare_.psi()));
    const Eigen::VectorXd Bi = kh[i] - (deficit(L, k, i).array() + bare_.gradE[i]);
    const Eigen::VectorXd Bj = kh[j] - (deficit(L, k, j).array() + bare_.gradE[j]);
    const double dBij = dij + (dij - kh[i] * kh[j]) / r;
    const double F = y.dot(level_psi(L, bare_.psi()));
    const double dFi = -y.dot(Bi.cwiseProduct(x)), dFj = -y.dot(Bj.cwiseProduct(x));
    const double d2F = y.dot(Bj.cwiseProduct(R.solve(Bi.cwiseProduct(x)))) +
                       y.dot(Bi.cwiseProduct(R.solve(Bj.cwiseProduct(x)))) - dBij * y.dot(x);
    const double dvi = u.d1 * kh[i], dvj = u.d1 * kh[j];
    const double d2v = u.d2 * kh[i] * kh[j] + u.d1 * (dij - kh[i] * kh[j]) / r;
    return -d2v * F - dvi * dFj - dvj * dFi - u.value * d2F;
}

double FroehlichEvaluator::f1_dPdk(const Vec3& k, int iP, int ik) const {
    const int L = state_->basis->max_photons() - 1;
    const auto u = form_factor_radial(k.norm(), state_->params);
    if ((u.value == 0 && u.d1 == 0) || L < 0) return 0.0;
    const double r = k.norm();
    const Vec3 kh = k / r;
    const auto R = shifted(L, k, r);
    const Eigen::VectorXd omega = Eigen::VectorXd::Unit(state_->basis->level_end(L), 0);
    const Eigen::VectorXd y = R.solve(omega), x = R.solve(level_psi(L, bare_.psi()));
    const Eigen::VectorXd BP = deficit(L, k, iP);
    const Eigen::VectorXd Bk = kh[ik] - (deficit(L, k, ik).array() + bare_.gradE[ik]);
    const Eigen::VectorXd dpsiL = level_psi(L, dpsi(iP));
    // d_P F and d_P d_k F, with d_P B^k = -delta
    const double dPF = -y.dot(BP.cwiseProduct(x)) + y.dot(dpsiL);
    const double dPdkF = y.dot(BP.cwiseProduct(R.solve(Bk.cwiseProduct(x)))) +
                         y.dot(Bk.cwiseProduct(R.solve(BP.cwiseProduct(x)))) +
                         (iP == ik ? 1.0 : 0.0) * y.dot(x) - y.dot(Bk.cwiseProduct(R.solve(dpsiL)));
    return -(u.d1 * kh[ik]) * dPF - u.value * dPdkF;
}

double bound_check_f1(const FroehlichEvaluator& ev, const ModelParams& params, const std::vector<Vec3>& kList) {
    double c = 0;
    for (const auto& k : kList) {
        const double v = form_factor(k, params);
        if (v == 0) continue;
        c = std::max(c, std::abs(ev.f1(k)) * k.norm() / v);
    }
    return c;
}

CancellationTerms cancellation_demo_q1(const DressedScaleState& state, const FroehlichEvaluator& ev, const Vec3& k,
                                       int i, int j) {
    CancellationTerms t;
    t.k = k.norm();
    const double v = form_factor(k, state.params);
    if (v == 0) return t;
    const BareFiberState shifted = bare_fiber_state(state, state.params.P - k);
    const double D = 1.0 / (shifted.E() - ev.E() + t.k);
    const double overlap = shifted.psi()[0];
    const double dij = i == j ? 1.0 : 0.0;
    const double hP = bare_hessian(ev.bare())(i, j);
    const double hPk = bare_hessian(shifted)(i, j);
    t.t1 = (dij - hP) * overlap * D * D * v;
    t.t2 = 0.5 * (hPk - dij) * overlap * D * D * v;
    t.t3 = t.t2;
    t.sum = t.t1 + t.t2 + t.t3;
    t.largest = std::max({std::abs(t.t1), std::abs(t.t2), std::abs(t.t3)});
    t.ratio = t.largest > 0 ? std::abs(t.sum) / t.largest : 0.0;
    t.full = ev.f1_dPdP(k, i, j);
    return t;
}

void write_samples_csv(std::ostream& os, const std::vector<WaveFunctionSample>& samples) {
    os << "q,k1x,k1y,k1z,k2x,k2y,k2z,value,route,derivative\n";
    for (const auto& s : samples) {
        os << s.q;
        for (std::size_t j = 0; j < 2; ++j)
            for (int c = 0; c < 3; ++c) os << ',' << (j < s.k.size() ? fmt_double(s.k[j][c]) : std::string());
        os << ',' << fmt_double(s.value) << ',' << s.route << ',' << s.derivative << '\n';
    }
}

}  // namespace nelson
