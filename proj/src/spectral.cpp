#include "nelson/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "nelson/io.hpp"

namespace nelson {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_square(const SparseMatrix& H) {
    if (H.rows() != H.cols() || H.rows() == 0) throw Error("spectral: matrix must be square and nonempty");
}

GroundStateRecord from_dense(const Eigen::MatrixXd& U, const Eigen::VectorXd& lambda, const SparseMatrix& H,
                             double tol) {
    GroundStateRecord r;
    r.E = lambda[0];
    r.E1 = lambda.size() > 1 ? lambda[1] : kInf;
    r.gap = r.E1 - r.E;
    r.psi = U.col(0);
    fix_phase(r.psi);
    r.residual = (H * r.psi - r.E * r.psi).norm();
    r.residual1 = lambda.size() > 1 ? (H * U.col(1) - r.E1 * U.col(1)).norm() : 0.0;
    r.iterations = 0;
    r.tolerance = tol;
    return r;
}

// Rayleigh-Ritz on a restarted Krylov basis; the retained Ritz vectors make this a thick restart.
GroundStateRecord lanczos(const SparseMatrix& H, const SpectralOptions& opt) {
    const Eigen::Index n = H.rows();
    const Eigen::Index m = std::min<Eigen::Index>(n, std::max(opt.krylovDim, 8));
    const Eigen::Index keep = std::min<Eigen::Index>(4, m - 2);

    Eigen::MatrixXd V(n, m), W(n, m);
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd p(n);
    for (Eigen::Index i = 0; i < n; ++i) p[i] = 1e-3 * normal(rng);
    p[0] += 1;

    Eigen::Index k = 0;
    int matvecs = 0;
    double best = kInf;
    while (true) {
        bool invariant = false;
        while (k < m) {
            for (int pass = 0; pass < 2; ++pass) p -= V.leftCols(k) * (V.leftCols(k).transpose() * p);
            const double pn = p.norm();
            if (!(pn > 1e-13)) {
                invariant = true;
                break;
            }
            V.col(k) = p / pn;
            W.col(k) = H * V.col(k);
            ++matvecs;
            p = W.col(k);
            ++k;
        }
        Eigen::MatrixXd T = V.leftCols(k).transpose() * W.leftCols(k);
        T = 0.5 * (T + T.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        const auto& theta = es.eigenvalues();
        const Eigen::MatrixXd Y = es.eigenvectors();

        Eigen::VectorXd x0 = V.leftCols(k) * Y.col(0);
        Eigen::VectorXd r0 = W.leftCols(k) * Y.col(0) - theta[0] * x0;
        const double res0 = r0.norm();
        double res1 = 0;
        Eigen::VectorXd r1;
        if (k > 1) {
            r1 = W.leftCols(k) * Y.col(1) - theta[1] * (V.leftCols(k) * Y.col(1));
            res1 = r1.norm();
        }
        best = std::min(best, std::max(res0, res1));
        const bool converged = res0 <= opt.eigTol * std::max(1.0, std::abs(theta[0])) &&
                               (k < 2 || res1 <= opt.eigTol * std::max(1.0, std::abs(theta[1])));
        if (converged || (invariant && k == n)) {
            GroundStateRecord r;
            r.E = theta[0];
            r.E1 = k > 1 ? theta[1] : kInf;
            r.gap = r.E1 - r.E;
            r.psi = x0 / x0.norm();
            fix_phase(r.psi);
            r.residual = res0;
            r.residual1 = res1;
            r.iterations = matvecs;
            r.tolerance = opt.eigTol;
            return r;
        }
        if (matvecs >= opt.maxIterations)
            throw Error("ground_state: Lanczos did not converge in " + std::to_string(matvecs) +
                        " products (best residual " + fmt_double(best) + ")");

        const Eigen::Index kk = std::min(keep, k);
        Eigen::MatrixXd Vn = V.leftCols(k) * Y.leftCols(kk);
        Eigen::MatrixXd Wn = W.leftCols(k) * Y.leftCols(kk);
        V.leftCols(kk) = Vn;
        W.leftCols(kk) = Wn;
        // continue from the larger residual so both tracked pairs keep improving
        p = (k > 1 && res1 > res0) ? r1 : r0;
        if (invariant) {
            for (Eigen::Index i = 0; i < n; ++i) p[i] += 1e-6 * normal(rng);
        }
        k = kk;
    }
}

Eigen::VectorXd jacobi(const SparseMatrix& H, double shift, double floor) {
    Eigen::VectorXd d = H.diagonal().array() - shift;
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = 1.0 / std::max(d[i], floor);
    return d;
}

}  // namespace

void fix_phase(Eigen::VectorXd& v) {
    if (v.size() == 0) return;
    const double scale = v.cwiseAbs().maxCoeff();
    Eigen::Index i = 0;
    if (!(std::abs(v[0]) > 1e-12 * scale))
        while (i < v.size() && !(std::abs(v[i]) > 1e-8 * scale)) ++i;
    if (i < v.size() && v[i] < 0) v = -v;
}

GroundStateRecord ground_state(const SparseMatrix& H, const SpectralOptions& opt) {
    require_square(H);
    if (H.rows() <= opt.denseThreshold) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(H)};
        return from_dense(es.eigenvectors(), es.eigenvalues(), H, opt.eigTol);
    }
    return lanczos(H, opt);
}

Eigen::VectorXd solve_reduced_resolvent(const SparseMatrix& H, double E, const Eigen::VectorXd& psi,
                                        const Eigen::VectorXd& rhs, const SpectralOptions& opt) {
    require_square(H);
    auto Q = [&](Eigen::VectorXd& v) { v -= psi * psi.dot(v); };
    Eigen::VectorXd b = rhs;
    Q(b);
    const double bn = b.norm();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(H.rows());
    if (bn == 0) return x;
    const Eigen::VectorXd Minv = jacobi(H, E, 1e-3);

    Eigen::VectorXd r = b, z = Minv.cwiseProduct(r);
    Q(z);
    Eigen::VectorXd p = z, Ap;
    double rz = r.dot(z);
    for (int it = 0; it < opt.maxIterations; ++it) {
        Ap = H * p - E * p;
        Q(Ap);
        const double pAp = p.dot(Ap);
        if (!(pAp > opt.minGap * p.squaredNorm()))
            throw Error("solve_reduced_resolvent: operator not positive on the complement (gap below threshold)");
        const double a = rz / pAp;
        x += a * p;
        r -= a * Ap;
        if (r.norm() <= opt.solveTol * bn) {
            Q(x);
            return x;
        }
        z = Minv.cwiseProduct(r);
        Q(z);
        const double rzNew = r.dot(z);
        p = z + (rzNew / rz) * p;
        rz = rzNew;
    }
    throw Error("solve_reduced_resolvent: CG did not converge (residual " + fmt_double(r.norm() / bn) + ")");
}

Eigen::VectorXd solve_shifted(const SparseMatrix& H, double z, const Eigen::VectorXd& rhs, const SpectralOptions& opt) {
    require_square(H);
    const double bn = rhs.norm();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(H.rows());
    if (bn == 0) return x;
    if (H.rows() <= opt.denseThreshold) {
        Eigen::MatrixXd A = Eigen::MatrixXd(H);
        A.diagonal().array() -= z;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
        x = ldlt.solve(rhs);
        if (!((A * x - rhs).norm() <= 1e3 * opt.solveTol * bn))
            throw Error("solve_shifted: shift within threshold of the spectrum");
        return x;
    }
    const Eigen::VectorXd Minv = jacobi(H, z, 1e-3);
    Eigen::VectorXd r = rhs, zv = Minv.cwiseProduct(r), p = zv, Ap;
    double rz = r.dot(zv);
    for (int it = 0; it < opt.maxIterations; ++it) {
        Ap = H * p - z * p;
        const double pAp = p.dot(Ap);
        if (!(pAp > opt.minGap * p.squaredNorm()))
            throw Error("solve_shifted: shift is not below the spectrum");
        const double a = rz / pAp;
        x += a * p;
        r -= a * Ap;
        if (r.norm() <= opt.solveTol * bn) return x;
        zv = Minv.cwiseProduct(r);
        const double rzNew = r.dot(zv);
        p = zv + (rzNew / rz) * p;
        rz = rzNew;
    }
    throw Error("solve_shifted: CG did not converge");
}

namespace {

// Conjugate orthogonal CG for complex-symmetric systems; `project` keeps iterates in a subspace.
template <typename Project>
Eigen::VectorXcd cocg(const SparseMatrix& H, std::complex<double> z, const Eigen::VectorXcd& b,
                      const SpectralOptions& opt, Project project) {
    using C = std::complex<double>;
    const double bn = b.norm();
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(H.rows());
    if (bn == 0) return x;
    Eigen::VectorXcd Minv(H.rows());
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
        const C d = H.coeff(i, i) - z;
        Minv[i] = std::abs(d) > 1e-3 ? 1.0 / d : C(1e3);
    }
    Eigen::VectorXcd r = b, w = Minv.cwiseProduct(r);
    project(w);
    Eigen::VectorXcd p = w, Ap;
    C rho = (r.array() * w.array()).sum();
    for (int it = 0; it < opt.maxIterations; ++it) {
        Ap = H * p - z * p;
        project(Ap);
        const C mu = (p.array() * Ap.array()).sum();
        if (std::abs(mu) < 1e-300) throw Error("solve_shifted: COCG breakdown");
        const C a = rho / mu;
        x += a * p;
        r -= a * Ap;
        if (r.norm() <= opt.solveTol * bn) return x;
        w = Minv.cwiseProduct(r);
        project(w);
        const C rhoNew = (r.array() * w.array()).sum();
        p = w + (rhoNew / rho) * p;
        rho = rhoNew;
    }
    throw Error("solve_shifted: COCG did not converge (residual " + fmt_double(r.norm() / bn) + ")");
}

}  // namespace

Eigen::VectorXcd solve_shifted(const SparseMatrix& H, std::complex<double> z, const Eigen::VectorXcd& rhs,
                               const SpectralOptions& opt) {
    require_square(H);
    if (H.rows() <= opt.denseThreshold) {
        Eigen::MatrixXcd A = Eigen::MatrixXd(H).cast<std::complex<double>>();
        A.diagonal().array() -= z;
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(A);
        Eigen::VectorXcd x = lu.solve(rhs);
        if (!((A * x - rhs).norm() <= 1e3 * opt.solveTol * std::max(rhs.norm(), 1e-300)))
            throw Error("solve_shifted: shift within threshold of the spectrum");
        return x;
    }
    return cocg(H, z, rhs, opt, [](Eigen::VectorXcd&) {});
}

double contour_sup_norm(const SparseMatrix& H, double center, const Eigen::VectorXd& v, double radius, int nSamples,
                        const SpectralOptions& opt) {
    if (nSamples < 8) throw Error("contour_sup_norm: need at least 8 samples");
    if (!(radius > 0)) throw Error("contour_sup_norm: radius must be positive");
    const Eigen::VectorXcd b = v.cast<std::complex<double>>();
    double sup = 0;
    for (int j = 0; j < nSamples; ++j) {
        const double t = 2 * M_PI * j / nSamples;
        const std::complex<double> z = center + radius * std::complex<double>(std::cos(t), std::sin(t));
        sup = std::max(sup, solve_shifted(H, z, b, opt).norm());
    }
    return sup;
}

namespace {

// (T - z) y = r for symmetric tridiagonal T; returns false on a vanishing pivot.
bool tridiagonal_solve(const std::vector<double>& a, const std::vector<double>& b, std::complex<double> z,
                       Eigen::VectorXcd& y) {
    using C = std::complex<double>;
    const auto m = a.size();
    std::vector<C> c(m), d(m);
    C piv = a[0] - z;
    if (std::abs(piv) < 1e-300) return false;
    c[0] = m > 1 ? b[0] / piv : 0.0;
    d[0] = y[0] / piv;
    for (std::size_t i = 1; i < m; ++i) {
        piv = (a[i] - z) - b[i - 1] * c[i - 1];
        if (std::abs(piv) < 1e-300) return false;
        c[i] = i + 1 < m ? b[i] / piv : 0.0;
        d[i] = (y[static_cast<Eigen::Index>(i)] - b[i - 1] * d[i - 1]) / piv;
    }
    y[static_cast<Eigen::Index>(m - 1)] = d[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) y[static_cast<Eigen::Index>(i)] = d[i] - c[i] * y[static_cast<Eigen::Index>(i + 1)];
    return true;
}

}  // namespace

std::vector<double> krylov_shifted_norms(const SparseMatrix& H, const Eigen::VectorXd& v,
                                         const std::vector<std::complex<double>>& shifts,
                                         const Eigen::VectorXd* deflate, const SpectralOptions& opt) {
    require_square(H);
    const Eigen::Index n = H.rows();
    std::vector<double> norms(shifts.size(), 0.0);
    Eigen::VectorXd w = v;
    if (deflate) w -= *deflate * deflate->dot(w);
    const double beta0 = w.norm();
    if (beta0 == 0) return norms;

    const Eigen::Index cap = std::min<Eigen::Index>(n, std::min(opt.maxIterations, 3000));
    Eigen::MatrixXd V(n, std::min<Eigen::Index>(cap, 64));
    std::vector<double> alpha, beta;
    V.col(0) = w / beta0;
    std::vector<double> residuals(shifts.size());
    for (Eigen::Index j = 0;; ++j) {
        w = H * V.col(j);
        alpha.push_back(V.col(j).dot(w));
        for (int pass = 0; pass < 2; ++pass) {
            w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
            if (deflate) w -= *deflate * deflate->dot(w);
        }
        const double b = w.norm();
        const bool exhausted = !(b > 1e-12 * std::abs(alpha.back()) + 1e-300) || j + 1 >= cap;
        if (exhausted || (j + 1) % 10 == 0) {
            bool done = true;
            for (std::size_t s = 0; s < shifts.size(); ++s) {
                Eigen::VectorXcd y = Eigen::VectorXcd::Zero(j + 1);
                y[0] = beta0;
                if (!tridiagonal_solve(alpha, beta, shifts[s], y)) {
                    done = false;
                    residuals[s] = kInf;
                    continue;
                }
                residuals[s] = b * std::abs(y[j]);
                norms[s] = y.norm();
                done = done && residuals[s] <= opt.solveTol * beta0;
            }
            if (done) return norms;
            if (exhausted) {
                if (j + 1 >= cap && b > 1e-12 * std::abs(alpha.back()))
                    throw Error("krylov_shifted_norms: no convergence within " + std::to_string(cap) + " steps");
                return norms;
            }
        }
        beta.push_back(b);
        if (j + 1 >= V.cols()) V.conservativeResize(Eigen::NoChange, std::min<Eigen::Index>(cap, 2 * V.cols()));
        V.col(j + 1) = w / b;
    }
}

SpectralProblem::SpectralProblem(SparseMatrix H, const SpectralOptions& opt) : H_(std::move(H)), opt_(opt) {
    require_square(H_);
    if (H_.rows() <= opt_.denseThreshold) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(H_)};
        U_ = es.eigenvectors();
        lambda_ = es.eigenvalues();
        dense_ = true;
        gs_ = from_dense(U_, lambda_, H_, opt_.eigTol);
        U_.col(0) = gs_.psi;
    } else {
        gs_ = lanczos(H_, opt_);
    }
}

Eigen::VectorXd SpectralProblem::reduced_resolvent(const Eigen::VectorXd& rhs) const {
    if (!(gs_.gap > opt_.minGap)) throw Error("reduced resolvent: gap below solver threshold");
    if (dense_) {
        Eigen::VectorXd c = U_.transpose() * rhs;
        c[0] = 0;
        for (Eigen::Index k = 1; k < c.size(); ++k) c[k] /= lambda_[k] - gs_.E;
        Eigen::VectorXd x = U_ * c;
        x -= gs_.psi * gs_.psi.dot(x);
        return x;
    }
    return solve_reduced_resolvent(H_, gs_.E, gs_.psi, rhs, opt_);
}

Eigen::VectorXcd SpectralProblem::resolvent(std::complex<double> z, const Eigen::VectorXcd& rhs) const {
    using C = std::complex<double>;
    const Eigen::VectorXcd psi = gs_.psi.cast<C>();
    const C a = psi.dot(rhs);   // psi is real, so conjugation is harmless
    if (std::abs(gs_.E - z) < 1e-300) throw Error("resolvent: z on the ground-state pole");
    if (dense_) {
        Eigen::VectorXcd c = U_.transpose().cast<C>() * rhs;
        for (Eigen::Index k = 0; k < c.size(); ++k) c[k] /= lambda_[k] - z;
        return U_.cast<C>() * c;
    }
    Eigen::VectorXcd b = rhs - psi * a;
    auto project = [&](Eigen::VectorXcd& v) { v -= psi * psi.dot(v); };
    Eigen::VectorXcd x = cocg(H_, z, b, opt_, project);
    return x + psi * (a / (gs_.E - z));
}

double SpectralProblem::contour_sup_norm(double center, const Eigen::VectorXd& v, double radius, int nSamples) const {
    if (nSamples < 8) throw Error("contour_sup_norm: need at least 8 samples");
    if (!(radius > 0)) throw Error("contour_sup_norm: radius must be positive");
    std::vector<std::complex<double>> zs;
    for (int j = 0; j < nSamples; ++j) {
        const double t = 2 * M_PI * j / nSamples;
        zs.push_back(center + radius * std::complex<double>(std::cos(t), std::sin(t)));
    }
    double sup = 0;
    if (dense_) {
        const Eigen::VectorXcd b = v.cast<std::complex<double>>();
        for (const auto& z : zs) sup = std::max(sup, resolvent(z, b).norm());
        return sup;
    }
    // pole part analytically, the rest from one deflated Krylov space
    const double a = gs_.psi.dot(v);
    const auto rest = krylov_shifted_norms(H_, v, zs, &gs_.psi, opt_);
    for (std::size_t j = 0; j < zs.size(); ++j) {
        const double pole = std::abs(a) / std::abs(gs_.E - zs[j]);
        sup = std::max(sup, std::sqrt(pole * pole + rest[j] * rest[j]));
    }
    return sup;
}

double SpectralProblem::expectation(const SparseMatrix& A) const { return gs_.psi.dot(A * gs_.psi); }

}  // namespace nelson
