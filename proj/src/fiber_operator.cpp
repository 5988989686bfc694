#include "nelson/fiber_operator.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "nelson/io.hpp"

namespace nelson {

namespace {

void check_modes(const FiberOperator& op) {
    const auto M = op.mode_count();
    if (op.g.size() != M || op.A.K.rows() != M || op.A.C.rows() != M)
        throw Error("FiberOperator: inconsistent coefficient sizes");
}

MatrixX3 grid_momenta(const MomentumGrid& grid) {
    MatrixX3 k(static_cast<Eigen::Index>(grid.size()), 3);
    for (std::size_t m = 0; m < grid.size(); ++m) k.row(static_cast<Eigen::Index>(m)) = grid.modes[m].k.transpose();
    return k;
}

Eigen::VectorXd grid_radii(const MomentumGrid& grid) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t m = 0; m < grid.size(); ++m) r[static_cast<Eigen::Index>(m)] = grid.modes[m].radius();
    return r;
}

double dot3(const MatrixX3& X, Eigen::Index a, const MatrixX3& Y, Eigen::Index b) {
    return X(a, 0) * Y(b, 0) + X(a, 1) * Y(b, 1) + X(a, 2) * Y(b, 2);
}

using Row = std::vector<std::pair<Eigen::Index, double>>;

// Sorts a row and merges duplicate columns in order of appearance.
void flush_row(SparseMatrix& H, Eigen::Index row, Row& entries) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    H.startVec(row);
    for (std::size_t i = 0; i < entries.size();) {
        double v = entries[i].second;
        std::size_t j = i + 1;
        for (; j < entries.size() && entries[j].first == entries[i].first; ++j) v += entries[j].second;
        H.insertBack(row, entries[i].first) = v;
        i = j;
    }
    entries.clear();
}

void check_basis(Eigen::Index modes, const FockBasis& basis) {
    if (modes != basis.mode_count())
        throw Error("assemble: operator has " + std::to_string(modes) + " modes, basis has " +
                    std::to_string(basis.mode_count()));
}

}  // namespace

FiberOperator nelson_hamiltonian(const ModelParams& params, const MomentumGrid& grid) {
    FiberOperator H;
    H.A = momentum_deficit(params.P, grid);
    H.d = grid_radii(grid);
    H.g = mode_couplings(grid, params);
    H.e = 0;
    return H;
}

VectorFiberOperator momentum_deficit(const Vec3& P, const MomentumGrid& grid) {
    const auto M = static_cast<Eigen::Index>(grid.size());
    return {P, -grid_momenta(grid), MatrixX3::Zero(M, 3)};
}

VectorFiberOperator displace(const VectorFiberOperator& op, const Eigen::VectorXd& h) {
    if (h.size() != op.mode_count()) throw Error("displace: shift vector size mismatch");
    VectorFiberOperator out = op;
    for (Eigen::Index m = 0; m < h.size(); ++m) {
        out.w += (op.K.row(m) * (h[m] * h[m]) + op.C.row(m) * (2 * h[m])).transpose();
        out.C.row(m) += op.K.row(m) * h[m];
    }
    return out;
}

FiberOperator displace(const FiberOperator& op, const Eigen::VectorXd& h) {
    check_modes(op);
    FiberOperator out = op;
    out.A = displace(op.A, h);
    for (Eigen::Index m = 0; m < h.size(); ++m) {
        out.g[m] += op.d[m] * h[m];
        out.e += op.d[m] * h[m] * h[m] + 2 * op.g[m] * h[m];
    }
    return out;
}

CanonicalForm canonical_form(const FiberOperator& op) {
    check_modes(op);
    CanonicalForm c;
    const auto& A = op.A;
    double sign = 1;
    bool found = false;
    for (Eigen::Index m = 0; m < A.K.rows() && !found; ++m)
        for (int i = 0; i < 3 && !found; ++i)
            if (A.K(m, i) != 0) sign = A.K(m, i) < 0 ? 1.0 : -1.0, found = true;
    for (Eigen::Index m = 0; m < A.C.rows() && !found; ++m)
        for (int i = 0; i < 3 && !found; ++i)
            if (A.C(m, i) != 0) sign = A.C(m, i) < 0 ? 1.0 : -1.0, found = true;
    c.K = sign * A.K;
    c.C = sign * A.C;
    c.dEff = op.d + A.K * A.w;
    c.gEff = op.g + A.C * A.w;
    c.eEff = op.e + 0.5 * A.w.squaredNorm();
    return c;
}

double coefficient_mismatch(const FiberOperator& a, const FiberOperator& b) {
    if (a.mode_count() != b.mode_count()) throw Error("coefficient_mismatch: mode counts differ");
    const auto ca = canonical_form(a), cb = canonical_form(b);
    if (a.mode_count() == 0) return std::abs(ca.eEff - cb.eEff);
    return std::max({(ca.K - cb.K).cwiseAbs().maxCoeff(), (ca.C - cb.C).cwiseAbs().maxCoeff(),
                     (ca.dEff - cb.dEff).cwiseAbs().maxCoeff(), (ca.gEff - cb.gEff).cwiseAbs().maxCoeff(),
                     std::abs(ca.eEff - cb.eEff)});
}

SparseMatrix assemble(const FiberOperator& op, const FockBasis& basis) {
    check_modes(op);
    check_basis(op.mode_count(), basis);
    const auto N = basis.dimension();
    const auto M = op.mode_count();
    const auto& A = op.A;

    std::vector<Vec3> D(static_cast<std::size_t>(N));
    for (Eigen::Index j = 0; j < N; ++j) {
        Vec3 v = A.w;
        for (auto m : basis.modes_of(j)) v += A.K.row(m).transpose();
        D[static_cast<std::size_t>(j)] = v;
    }

    const bool quadratic = M > 0 && A.C.cwiseAbs().maxCoeff() > 0;
    Eigen::MatrixXd G;
    double normalOrdering = 0;
    if (quadratic) {
        G.resize(M, M);
        for (Eigen::Index a = 0; a < M; ++a)
            for (Eigen::Index b = a; b < M; ++b) G(a, b) = G(b, a) = dot3(A.C, a, A.C, b);
        for (Eigen::Index m = 0; m < M; ++m) normalOrdering += 0.5 * G(m, m);
    }
    // single-photon element between upper state u and lower state l via mode m
    auto single = [&](Eigen::Index u, Eigen::Index l, std::uint32_t m, double amp) {
        const Vec3 s = D[static_cast<std::size_t>(u)] + D[static_cast<std::size_t>(l)];
        return (0.5 * (s.x() * A.C(m, 0) + s.y() * A.C(m, 1) + s.z() * A.C(m, 2)) + op.g[m]) * amp;
    };

    SparseMatrix H(N, N);
    H.reserve(N * (2 * M + 2));
    Row row;
    for (Eigen::Index j = 0; j < N; ++j) {
        const auto& Dj = D[static_cast<std::size_t>(j)];
        double diag = 0.5 * Dj.squaredNorm() + normalOrdering + op.e;
        for (auto m : basis.modes_of(j)) diag += op.d[m] + (quadratic ? G(m, m) : 0.0);
        row.emplace_back(j, diag);

        for (const auto& l : basis.lowerings(j)) row.emplace_back(l.target, single(j, l.target, l.mode, l.amplitude));
        for (const auto& r : basis.raisings(j)) row.emplace_back(r.target, single(r.target, j, r.mode, r.amplitude));

        if (quadratic) {
            for (const auto& l1 : basis.lowerings(j)) {
                for (const auto& l2 : basis.lowerings(l1.target))
                    row.emplace_back(l2.target, 0.5 * G(l1.mode, l2.mode) * (l1.amplitude * l2.amplitude));
                for (const auto& r : basis.raisings(l1.target))
                    if (r.mode != l1.mode) row.emplace_back(r.target, G(r.mode, l1.mode) * (l1.amplitude * r.amplitude));
            }
            for (const auto& r1 : basis.raisings(j))
                for (const auto& r2 : basis.raisings(r1.target))
                    row.emplace_back(r2.target, 0.5 * G(r1.mode, r2.mode) * (r1.amplitude * r2.amplitude));
        }
        flush_row(H, j, row);
    }
    H.finalize();
    return H;
}

SparseMatrix assemble_component(const VectorFiberOperator& op, int i, const FockBasis& basis) {
    if (i < 0 || i > 2) throw Error("assemble_component: component index out of range");
    check_basis(op.mode_count(), basis);
    const auto N = basis.dimension();
    SparseMatrix H(N, N);
    H.reserve(N * (op.mode_count() + 2));
    Row row;
    for (Eigen::Index j = 0; j < N; ++j) {
        double diag = op.w[i];
        for (auto m : basis.modes_of(j)) diag += op.K(m, i);
        row.emplace_back(j, diag);
        for (const auto& l : basis.lowerings(j)) row.emplace_back(l.target, op.C(l.mode, i) * l.amplitude);
        for (const auto& r : basis.raisings(j)) row.emplace_back(r.target, op.C(r.mode, i) * r.amplitude);
        flush_row(H, j, row);
    }
    H.finalize();
    H.prune(0.0);
    return H;
}

Eigen::VectorXd weyl_coefficients(const ModelParams& params, const MomentumGrid& grid, const Vec3& gradE) {
    const Eigen::VectorXd g = mode_couplings(grid, params);
    Eigen::VectorXd h(g.size());
    for (Eigen::Index m = 0; m < g.size(); ++m) {
        const auto& k = grid.modes[static_cast<std::size_t>(m)].k;
        const double r = k.norm();
        const double alpha = 1 - k.dot(gradE) / r;
        if (!(alpha > 0)) throw Error("weyl_coefficients: alpha <= 0 at mode " + std::to_string(m));
        h[m] = -g[m] / (r * alpha);
    }
    return h;
}

FiberOperator transformed_by_displacement(const ModelParams& params, const MomentumGrid& grid, const Vec3& gradE) {
    return displace(nelson_hamiltonian(params, grid), weyl_coefficients(params, grid, gradE));
}

FiberOperator transformed_closed_form(const ModelParams& params, const MomentumGrid& grid, const Vec3& gradE,
                                      const Eigen::VectorXd* couplings) {
    const Eigen::VectorXd g = couplings ? *couplings : mode_couplings(grid, params);
    if (g.size() != static_cast<Eigen::Index>(grid.size())) throw Error("transformed_closed_form: coupling size mismatch");
    const auto M = g.size();
    const MatrixX3 k = grid_momenta(grid);
    FiberOperator H;
    H.A.w = gradE - params.P;
    H.A.K = k;
    H.A.C.resize(M, 3);
    H.d.resize(M);
    H.g = Eigen::VectorXd::Zero(M);
    double self = 0;
    for (Eigen::Index m = 0; m < M; ++m) {
        const double r = k.row(m).norm();
        const double alpha = 1 - k.row(m).dot(gradE) / r;
        if (!(alpha > 0)) throw Error("transformed_closed_form: alpha <= 0 at mode " + std::to_string(m));
        const double h = -g[m] / (r * alpha);
        H.A.w += k.row(m).transpose() * (h * h);
        H.A.C.row(m) = k.row(m) * h;
        H.d[m] = alpha * r;
        self += g[m] * g[m] / (r * alpha);
    }
    H.e = 0.5 * params.P.squaredNorm() - 0.5 * (params.P - gradE).squaredNorm() - self;
    return H;
}

FiberOperator transformed_hamiltonian(const ModelParams& params, const MomentumGrid& grid, const Vec3& gradE,
                                      double tolerance) {
    const FiberOperator a = transformed_by_displacement(params, grid, gradE);
    FiberOperator b = transformed_closed_form(params, grid, gradE);
    const double mismatch = coefficient_mismatch(a, b);
    if (!(mismatch <= tolerance))
        throw Error("transformed_hamiltonian: displacement route and closed-form route disagree (mismatch " +
                    fmt_double(mismatch) + ")");
    return b;
}

VectorFiberOperator gamma_operator(const ModelParams& params, const MomentumGrid& grid, const Vec3& gradE) {
    VectorFiberOperator G = displace(-momentum_deficit(params.P, grid), weyl_coefficients(params, grid, gradE));
    G.w += gradE;
    return G;
}

VectorFiberOperator centered(const VectorFiberOperator& op, const Vec3& expectation) {
    VectorFiberOperator out = op;
    out.w -= expectation;
    return out;
}

namespace {

nlohmann::json rows_json(const MatrixX3& X) {
    auto j = nlohmann::json::array();
    for (Eigen::Index m = 0; m < X.rows(); ++m) j.push_back({X(m, 0), X(m, 1), X(m, 2)});
    return j;
}

MatrixX3 rows_from_json(const nlohmann::json& j) {
    MatrixX3 X(static_cast<Eigen::Index>(j.size()), 3);
    for (std::size_t m = 0; m < j.size(); ++m) X.row(static_cast<Eigen::Index>(m)) = vec3_from_json(j[m]).transpose();
    return X;
}

}  // namespace

nlohmann::json to_json(const VectorFiberOperator& op) {
    return {{"w", to_json(Eigen::Vector3d(op.w))}, {"K", rows_json(op.K)}, {"C", rows_json(op.C)}};
}

nlohmann::json to_json(const FiberOperator& op) {
    auto j = to_json(op.A);
    j["d"] = to_json(Eigen::VectorXd(op.d));
    j["g"] = to_json(Eigen::VectorXd(op.g));
    j["e"] = op.e;
    return j;
}

FiberOperator fiber_operator_from_json(const nlohmann::json& j) {
    FiberOperator op;
    op.A.w = vec3_from_json(j.at("w"));
    op.A.K = rows_from_json(j.at("K"));
    op.A.C = rows_from_json(j.at("C"));
    op.d = vectorxd_from_json(j.at("d"));
    op.g = vectorxd_from_json(j.at("g"));
    op.e = j.at("e").get<double>();
    check_modes(op);
    return op;
}

}  // namespace nelson
