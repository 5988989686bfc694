#include "nelson/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>

#include "nelson/io.hpp"

namespace nelson {

ExponentFit fit_exponent(const std::vector<double>& sigma, const std::vector<double>& y) {
    if (sigma.size() != y.size()) throw Error("fit_exponent: series length mismatch");
    ExponentFit f;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!(y[i] > 0) || !(sigma[i] > 0) || !std::isfinite(y[i])) {
            f.excluded.push_back(static_cast<int>(i));
            continue;
        }
        xs.push_back(-std::log(sigma[i]));
        ys.push_back(std::log(y[i]));
    }
    f.points = static_cast<int>(xs.size());
    if (f.points < 4) return f;
    const double n = f.points;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i] / n, my += ys[i] / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (!(sxx > 0)) return f;
    f.deltaHat = sxy / sxx;
    double ss = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (my + f.deltaHat * (xs[i] - mx));
        ss += r * r;
    }
    f.stderr_ = std::sqrt(ss / (n - 2) / sxx);
    f.ok = true;
    return f;
}

WeylApplication apply_weyl_difference(const FockBasis& basis, const Eigen::VectorXd& v, const Eigen::VectorXd& hOld,
                                      const Eigen::VectorXd& hNew, double maxLeakage) {
    if (hOld.size() != basis.mode_count() || hNew.size() != basis.mode_count())
        throw Error("apply_weyl_difference: shift vector size mismatch");
    WeylApplication out;
    const Eigen::VectorXd delta = hNew - hOld;
    out.step = delta.norm();
    // generator sum_m delta_m (b_m - b*_m): antisymmetric on the truncated space
    std::vector<Eigen::Triplet<double>> trip;
    for (Eigen::Index j = 0; j < basis.dimension(); ++j)
        for (const auto& l : basis.lowerings(j)) {
            const double c = delta[l.mode] * l.amplitude;
            trip.emplace_back(static_cast<int>(l.target), static_cast<int>(j), c);
            trip.emplace_back(static_cast<int>(j), static_cast<int>(l.target), -c);
        }
    SparseMatrix G(basis.dimension(), basis.dimension());
    G.setFromTriplets(trip.begin(), trip.end());
    double gnorm = 0;   // max absolute row sum bounds the 2-norm of an antisymmetric matrix
    for (Eigen::Index r = 0; r < G.outerSize(); ++r) {
        double s = 0;
        for (SparseMatrix::InnerIterator it(G, r); it; ++it) s += std::abs(it.value());
        gnorm = std::max(gnorm, s);
    }
    int squarings = 0;
    while (gnorm / std::ldexp(1.0, squarings) > 0.5) ++squarings;
    const double scale = std::ldexp(1.0, -squarings);
    Eigen::VectorXd x = v;
    for (int s = 0; s < (1 << squarings); ++s) {
        Eigen::VectorXd term = x, sum = x;
        for (int k = 1; k < 40; ++k) {
            term = (scale / k) * (G * term);
            sum += term;
            if (term.norm() <= 1e-17 * sum.norm()) break;
        }
        x = sum;
    }
    out.vector = x;
    const double vn = v.norm();
    out.leakage = vn > 0 ? std::abs(1 - x.norm() / vn) : 0.0;
    if (out.leakage > maxLeakage) throw Error("apply_weyl_difference: leakage " + fmt_double(out.leakage));
    return out;
}

Projection project_previous(const Eigen::VectorXd& chi, const Eigen::VectorXd& phiPrevEmbedded) {
    if (chi.size() != phiPrevEmbedded.size()) throw Error("project_previous: vector size mismatch");
    Projection p;
    p.overlap = chi.dot(phiPrevEmbedded);
    p.phiHat = chi * p.overlap;
    p.difference = (p.phiHat - phiPrevEmbedded).norm();
    return p;
}

double contour_quantity(const DressedScaleState& state, double center, double radius, int samples) {
    double sup = 0;
    for (int i = 0; i < 3; ++i)
        sup = std::max(sup, state.dressed->contour_sup_norm(center, state.gamma_matrix(i) * state.phi, radius, samples));
    return sup;
}

namespace {

struct ScaleContext {
    ModelParams params;
    std::shared_ptr<const MomentumGrid> grid;
    std::shared_ptr<DressedScaleState> state;
};

ModelParams params_at(const ModelParams& base, int n) {
    ModelParams p = base;
    p.sigma = base.kappa * std::pow(base.epsilon, n);
    return p;
}

}  // namespace

ScaleSweepLedger run_sweep(const ModelParams& params, const SweepOptions& opt, const std::vector<LedgerRow>& resumeRows,
                           const std::function<void(const LedgerRow&)>& onRow) {
    params.validate();
    if (params.nScales < 0) throw Error("run_sweep: nScales must be >= 0");
    ScaleSweepLedger ledger;
    ledger.params = params;
    const int N = params.nScales;
    const double lam2 = params.lambda * params.lambda;

    // grids for every scale are cheap and deterministic
    std::vector<std::shared_ptr<const MomentumGrid>> grids;
    grids.push_back(std::make_shared<const MomentumGrid>(empty_grid(params.kappa)));
    for (int n = 1; n <= N; ++n) {
        const auto p = params_at(params, n);
        grids.push_back(std::make_shared<const MomentumGrid>(
            n == 1 ? build_grid(p, opt.grid) : refine_annulus(*grids.back(), p.sigma, opt.grid)));
    }

    const int resumed = static_cast<int>(std::min<std::size_t>(resumeRows.size(), static_cast<std::size_t>(N + 1)));
    for (int n = 0; n < resumed; ++n) ledger.rows.push_back(resumeRows[static_cast<std::size_t>(n)]);

    auto solve_scale = [&](int n) {
        auto p = params_at(params, n);
        return std::make_shared<DressedScaleState>(dressed_ground_state(p, grids[static_cast<std::size_t>(n)], opt.trunc,
                                                                        opt.spectral));
    };

    std::shared_ptr<DressedScaleState> prev;
    LedgerRow pending;
    bool havePending = false;
    double chain = 1;
    if (resumed > 0) {
        // the last trusted row still needs its forward-looking entries
        const int last = resumed - 1;
        prev = solve_scale(last);
        pending = ledger.rows.back();
        ledger.rows.pop_back();
        havePending = true;
        chain = last > 0 ? ledger.rows.back().overlapChain : 1.0;
        if (!std::isfinite(chain)) chain = 1.0;
    }

    auto finalize = [&](LedgerRow& row) {
        ledger.rows.push_back(row);
        if (onRow) onRow(row);
    };

    const int limit = opt.stopAfter >= 0 ? std::min(N, opt.stopAfter) : N;
    for (int n = resumed; n <= N; ++n) {
        if (opt.stopAfter >= 0 && static_cast<int>(ledger.rows.size()) >= opt.stopAfter) break;
        LedgerRow row;
        row.n = n;
        std::shared_ptr<DressedScaleState> cur;
        try {
            cur = solve_scale(n);
        } catch (const Error& e) {
            row.status = std::string("failed: ") + e.what();
            row.sigma = params_at(params, n).sigma;
            if (havePending) finalize(pending);
            finalize(row);
            ledger.flags.push_back("scale " + std::to_string(n) + " failed");
            return ledger;
        }
        const auto& s = *cur;
        row.sigma = s.sigma;
        row.modes = static_cast<int>(s.grid->size());
        row.dimension = static_cast<long long>(s.basis->dimension());
        row.E = s.E;
        row.EW = s.EW;
        row.gap = s.gap;
        row.gapW = s.gapW;
        row.gapMargin = s.gap - s.sigma / 3;
        row.gradE = s.gradE;
        row.gradNorm = s.gradE.norm();
        row.orthDefect = s.orthogonalityDefect.norm();
        row.spectrumMismatch = s.spectrumMismatch;
        row.topLevelWeight = s.topLevelWeight;
        if (opt.derivatives && s.basis->dimension() > 1 && params.lambda != 0) {
            const auto sn = scaling_norms(s);
            row.n0 = sn.n0;
            row.n1 = sn.n1;
            row.n2 = sn.n2;
            row.d3E = third_deriv_E_radial(s);
        }

        if (prev) {
            const auto& p = *prev;
            row.deltaE = p.E - s.E;
            row.cDeltaE = lam2 > 0 ? row.deltaE / (lam2 * p.sigma) : 0.0;
            row.gradDiff = (p.gradE - s.gradE).norm();
            Eigen::VectorXd psiPrev = embed<double>(p.psi, *p.basis, *s.basis);
            if (psiPrev.dot(s.psi) < 0) psiPrev = -psiPrev;
            row.psiCauchy = (s.psi - psiPrev).norm();

            // forward-looking entries of the previous row
            const double radius = s.sigma / 3;
            pending.contourNorm = contour_quantity(p, s.E, radius, opt.contourSamples);
            pending.contourCenter = "next";
            const auto pp = params_at(params, n);
            const FiberOperator intermediate = transformed_hamiltonian(pp, *s.grid, p.gradE);
            const SpectralProblem inter(assemble(intermediate, *s.basis), opt.spectral);
            if (!(inter.ground().gap > radius))
                throw Error("run_sweep: contour radius exceeds the intermediate gap at scale " + std::to_string(n));
            const Eigen::VectorXd phiPrev = embed<double>(p.phi, *p.basis, *s.basis);
            const auto proj = project_previous(inter.ground().psi, phiPrev);
            pending.phiHatDiff = proj.difference;
            pending.overlap = proj.overlap;
            chain *= std::abs(proj.overlap);
            pending.overlapChain = chain;
            const Eigen::VectorXd hOld = weyl_coefficients(pp, *s.grid, p.gradE);
            const auto w = apply_weyl_difference(*s.basis, proj.phiHat / proj.phiHat.norm(), hOld, s.h);
            pending.weylStep = w.step;
            pending.weylLeakage = w.leakage;
            pending.weylMismatch = 1 - std::abs(w.vector.dot(s.phi));
            finalize(pending);
        }
        pending = row;
        havePending = true;
        prev = cur;
        if (n >= limit && opt.stopAfter >= 0) break;
    }
    if (havePending && (opt.stopAfter < 0 || static_cast<int>(ledger.rows.size()) < opt.stopAfter) &&
        pending.n == N) {
        // last row: no next scale, the circle is centered on its own energy
        const auto& s = *prev;
        if (s.basis->dimension() > 1) pending.contourNorm = contour_quantity(s, s.E, s.sigma * params.epsilon / 3, opt.contourSamples);
        pending.contourCenter = "self";
        finalize(pending);
        ledger.complete = true;
    }
    for (const auto& r : ledger.rows) {
        if (r.gapMargin < 0) ledger.flags.push_back("gap below sigma/3 at n=" + std::to_string(r.n));
        if (r.n > 0 && r.deltaE < -2 * opt.spectral.eigTol)
            ledger.flags.push_back("energy increased at n=" + std::to_string(r.n));
    }
    return ledger;
}

EnergyShiftSummary energy_shift_ledger(const ScaleSweepLedger& ledger) {
    EnergyShiftSummary s;
    bool any = false;
    for (const auto& r : ledger.rows) {
        if (r.n == 0) continue;
        s.worstIncrease = std::max(s.worstIncrease, -r.deltaE);
        if (!(r.cDeltaE > 0)) continue;
        s.cMax = any ? std::max(s.cMax, r.cDeltaE) : r.cDeltaE;
        s.cMin = any ? std::min(s.cMin, r.cDeltaE) : r.cDeltaE;
        any = true;
    }
    s.variation = any ? s.cMax / s.cMin : 1.0;
    return s;
}

GapSummary gap_ledger(const ScaleSweepLedger& ledger) {
    GapSummary g;
    std::vector<double> sig, m;
    for (const auto& r : ledger.rows) {
        g.margins.push_back(r.gapMargin);
        if (r.gapMargin < 0) g.allPositive = false;
        if (std::isfinite(r.gapMargin)) {
            sig.push_back(r.sigma);
            m.push_back(r.gapMargin);
        }
    }
    g.slope = fit_exponent(sig, m);
    return g;
}

SweepFits sweep_fits(const ScaleSweepLedger& ledger) {
    std::vector<double> s, n0, n1, n2, c, d3, sPrev, cauchy;
    for (const auto& r : ledger.rows) {
        if (r.n == 0) continue;
        s.push_back(r.sigma);
        n0.push_back(r.n0);
        n1.push_back(r.n1);
        n2.push_back(r.n2);
        c.push_back(r.contourNorm);
        d3.push_back(std::abs(r.d3E));
        sPrev.push_back(r.sigma / ledger.params.epsilon);
        cauchy.push_back(r.psiCauchy);
    }
    return {fit_exponent(s, n0), fit_exponent(s, n1), fit_exponent(s, n2),
            fit_exponent(s, c),  fit_exponent(s, d3), fit_exponent(sPrev, cauchy)};
}

void write_ledger_csv(std::ostream& os, const ScaleSweepLedger& ledger) {
    os << "n,sigma,modes,dimension,E,EW,gap,gapW,gap_margin,gradE_x,gradE_y,gradE_z,grad_norm,delta_E,c_delta_E,"
          "grad_diff,psi_cauchy,contour_norm,contour_center,phi_hat_diff,overlap,overlap_chain,weyl_step,"
          "weyl_leakage,weyl_mismatch,n0,n1,n2,d3E,orth_defect,spectrum_mismatch,top_level_weight,status\n";
    for (const auto& r : ledger.rows) {
        const double vals[] = {r.sigma, static_cast<double>(r.modes), static_cast<double>(r.dimension), r.E, r.EW,
                               r.gap, r.gapW, r.gapMargin, r.gradE.x(), r.gradE.y(), r.gradE.z(), r.gradNorm,
                               r.deltaE, r.cDeltaE, r.gradDiff, r.psiCauchy, r.contourNorm};
        os << r.n;
        for (double v : vals) os << ',' << fmt_double(v);
        os << ',' << r.contourCenter;
        const double rest[] = {r.phiHatDiff, r.overlap, r.overlapChain, r.weylStep, r.weylLeakage, r.weylMismatch,
                               r.n0, r.n1, r.n2, r.d3E, r.orthDefect, r.spectrumMismatch, r.topLevelWeight};
        for (double v : rest) os << ',' << fmt_double(v);
        os << ',' << r.status << '\n';
    }
}

namespace {

nlohmann::json num(double v) {
    if (std::isfinite(v)) return v;
    return fmt_double(v);   // nan / inf survive a round trip as strings
}

double num_from(const nlohmann::json& j) {
    if (j.is_string()) return std::stod(j.get<std::string>());
    return j.get<double>();
}

}  // namespace

nlohmann::json to_json(const LedgerRow& r) {
    return {{"n", r.n},
            {"sigma", num(r.sigma)},
            {"modes", r.modes},
            {"dimension", r.dimension},
            {"E", num(r.E)},
            {"EW", num(r.EW)},
            {"gap", num(r.gap)},
            {"gapW", num(r.gapW)},
            {"gap_margin", num(r.gapMargin)},
            {"gradE", {num(r.gradE.x()), num(r.gradE.y()), num(r.gradE.z())}},
            {"grad_norm", num(r.gradNorm)},
            {"delta_E", num(r.deltaE)},
            {"c_delta_E", num(r.cDeltaE)},
            {"grad_diff", num(r.gradDiff)},
            {"psi_cauchy", num(r.psiCauchy)},
            {"contour_norm", num(r.contourNorm)},
            {"contour_center", r.contourCenter},
            {"phi_hat_diff", num(r.phiHatDiff)},
            {"overlap", num(r.overlap)},
            {"overlap_chain", num(r.overlapChain)},
            {"weyl_step", num(r.weylStep)},
            {"weyl_leakage", num(r.weylLeakage)},
            {"weyl_mismatch", num(r.weylMismatch)},
            {"n0", num(r.n0)},
            {"n1", num(r.n1)},
            {"n2", num(r.n2)},
            {"d3E", num(r.d3E)},
            {"orth_defect", num(r.orthDefect)},
            {"spectrum_mismatch", num(r.spectrumMismatch)},
            {"top_level_weight", num(r.topLevelWeight)},
            {"status", r.status}};
}

LedgerRow ledger_row_from_json(const nlohmann::json& j) {
    LedgerRow r;
    r.n = j.at("n").get<int>();
    r.sigma = num_from(j.at("sigma"));
    r.modes = j.at("modes").get<int>();
    r.dimension = j.at("dimension").get<long long>();
    r.E = num_from(j.at("E"));
    r.EW = num_from(j.at("EW"));
    r.gap = num_from(j.at("gap"));
    r.gapW = num_from(j.at("gapW"));
    r.gapMargin = num_from(j.at("gap_margin"));
    for (int i = 0; i < 3; ++i) r.gradE[i] = num_from(j.at("gradE")[static_cast<std::size_t>(i)]);
    r.gradNorm = num_from(j.at("grad_norm"));
    r.deltaE = num_from(j.at("delta_E"));
    r.cDeltaE = num_from(j.at("c_delta_E"));
    r.gradDiff = num_from(j.at("grad_diff"));
    r.psiCauchy = num_from(j.at("psi_cauchy"));
    r.contourNorm = num_from(j.at("contour_norm"));
    r.contourCenter = j.at("contour_center").get<std::string>();
    r.phiHatDiff = num_from(j.at("phi_hat_diff"));
    r.overlap = num_from(j.at("overlap"));
    r.overlapChain = num_from(j.at("overlap_chain"));
    r.weylStep = num_from(j.at("weyl_step"));
    r.weylLeakage = num_from(j.at("weyl_leakage"));
    r.weylMismatch = num_from(j.at("weyl_mismatch"));
    r.n0 = num_from(j.at("n0"));
    r.n1 = num_from(j.at("n1"));
    r.n2 = num_from(j.at("n2"));
    r.d3E = num_from(j.at("d3E"));
    r.orthDefect = num_from(j.at("orth_defect"));
    r.spectrumMismatch = num_from(j.at("spectrum_mismatch"));
    r.topLevelWeight = num_from(j.at("top_level_weight"));
    r.status = j.at("status").get<std::string>();
    return r;
}

nlohmann::json to_json(const ExponentFit& f) {
    return {{"delta_hat", num(f.deltaHat)}, {"stderr", num(f.stderr_)}, {"points", f.points},
            {"excluded", f.excluded},       {"ok", f.ok}};
}

}  // namespace nelson
