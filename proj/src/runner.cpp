#include "nelson/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "nelson/io.hpp"
#include "nelson/multiscale.hpp"
#include "nelson/verify.hpp"
#include "nelson/wavefunctions.hpp"

#ifndef NELSON_LAB_VERSION
#define NELSON_LAB_VERSION "dev"
#endif

namespace nelson {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"ground-state", "derivatives", "wavefunctions", "sweep", "verify", "report"};
    return names;
}

std::string config_fingerprint(const RunConfig& cfg) {
    RunConfig c = cfg;
    c.outDir = "-";
    c.jobs = 1;
    c.stopAfter = -1;
    const std::string ini = config_to_ini(c);
    Fnv1a h;
    h.add_bytes(ini.data(), ini.size());
    return hex64(h.value());
}

json read_manifest(const fs::path& commandDir) {
    const fs::path p = commandDir / "manifest.json";
    if (!fs::exists(p)) return json::object();
    try {
        return json::parse(read_text_file(p));
    } catch (const json::exception&) {
        return json::object();
    }
}

namespace {

/// Collects outputs of one command and writes manifest.json last.
class Manifest {
public:
    Manifest(fs::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {}

    const fs::path& dir() const { return dir_; }

    void write(const std::string& name, const std::string& text) {
        write_text_file(dir_, name, text);
        Fnv1a h;
        h.add_bytes(text.data(), text.size());
        files_.erase(std::remove_if(files_.begin(), files_.end(), [&](const json& f) { return f["path"] == name; }),
                     files_.end());
        files_.push_back({{"path", name}, {"bytes", text.size()}, {"fnv1a", hex64(h.value())}});
    }

    template <typename F>
    auto timed(const std::string& op, F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        struct Stop {
            Manifest* m;
            std::string op;
            std::chrono::steady_clock::time_point t0;
            ~Stop() {
                m->timings_[op] = m->timings_.value(op, 0.0) +
                                  std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            }
        } stop{this, op, t0};
        return f();
    }

    void warn(const std::string& w) { warnings_.push_back(w); }
    json& results() { return results_; }
    json& hashes() { return hashes_; }

    void finish(const RunConfig& cfg, const std::string& status) {
        std::sort(files_.begin(), files_.end(), [](const json& a, const json& b) { return a["path"] < b["path"]; });
        const json m{{"tool", "nelson_lab"},
                     {"version", NELSON_LAB_VERSION},
                     {"command", command_},
                     {"status", status},
                     {"config", to_json(cfg)},
                     {"config_ini", config_to_ini(cfg)},
                     {"config_fingerprint", config_fingerprint(cfg)},
                     {"seed", cfg.solver.seed},
                     {"conventions",
                      {{"kappa", cfg.model.kappa},
                       {"eps0", cfg.model.eps0},
                       {"uv_bridge", "quintic smoothstep 1 - (10t^3 - 15t^4 + 6t^5) on [(1 - eps0) kappa, kappa]"},
                       {"radial_rule", "log-spaced shells, exact shell volumes, midpoint radius"},
                       {"angular_rule", "Gauss-Legendre in cos(theta), uniform azimuth"}}},
                     {"hashes", hashes_},
                     {"timings_seconds", timings_},
                     {"warnings", warnings_},
                     {"results", results_},
                     {"files", files_}};
        write_text_file(dir_, "manifest.json", m.dump(2) + "\n");
    }

private:
    fs::path dir_;
    std::string command_;
    std::vector<json> files_;
    json timings_ = json::object();
    std::vector<std::string> warnings_;
    json results_ = json::object();
    json hashes_ = json::object();
};

template <typename F>
std::string to_text(F&& f) {
    std::ostringstream os;
    f(os);
    return os.str();
}

std::string vec_csv(const std::vector<std::pair<std::string, const Eigen::VectorXd*>>& cols) {
    std::ostringstream os;
    os << "index";
    for (const auto& c : cols) os << ',' << c.first;
    os << '\n';
    const Eigen::Index n = cols.empty() ? 0 : cols.front().second->size();
    for (Eigen::Index i = 0; i < n; ++i) {
        os << i;
        for (const auto& c : cols) os << ',' << fmt_double((*c.second)[i]);
        os << '\n';
    }
    return os.str();
}

json matrix_json(const Eigen::Matrix3d& m) {
    json rows = json::array();
    for (int i = 0; i < 3; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
    return rows;
}

json finite(double v) {
    if (std::isfinite(v)) return v;
    return fmt_double(v);
}

struct Prepared {
    std::shared_ptr<const MomentumGrid> grid;
    DressedScaleState state;
};

Prepared prepare(const RunConfig& cfg, Manifest& man) {
    for (const auto& w : cfg.model.validate()) man.warn(w);
    Prepared p;
    p.grid = man.timed("build_grid", [&] { return std::make_shared<const MomentumGrid>(build_grid(cfg.model, cfg.grid)); });
    p.state = man.timed("dressed_ground_state", [&] { return dressed_ground_state(cfg.model, p.grid, cfg.basis, cfg.solver); });
    man.hashes()["grid"] = hex64(p.grid->hash());
    man.hashes()["basis"] = hex64(p.state.basis->hash());
    man.results()["modes"] = p.grid->size();
    man.results()["dimension"] = p.state.basis->dimension();
    man.results()["E"] = p.state.E;
    if (p.state.topLevelWeight > 1e-4)
        man.warn("ground state carries weight " + fmt_double(p.state.topLevelWeight) + " in the top photon level");
    return p;
}

int cmd_ground_state(const RunConfig& cfg, Manifest& man, std::ostream& log) {
    const auto p = prepare(cfg, man);
    const auto& s = p.state;
    const auto& g = s.bare->ground();
    json out{{"E", s.E},
             {"E1", finite(g.E1)},
             {"gap", finite(s.gap)},
             {"residual", g.residual},
             {"residual1", g.residual1},
             {"iterations", g.iterations},
             {"tolerance", g.tolerance},
             {"vacuum_overlap", s.psi[0]},
             {"gradE", to_json(s.gradE)},
             {"sigma", s.sigma},
             {"modes", p.grid->size()},
             {"dimension", s.basis->dimension()},
             {"dressed",
              {{"EW", s.EW},
               {"gapW", finite(s.gapW)},
               {"gamma_const", to_json(s.gammaConst)},
               {"orthogonality_defect", to_json(s.orthogonalityDefect)},
               {"spectrum_mismatch", s.spectrumMismatch},
               {"top_level_weight", s.topLevelWeight},
               {"weyl_shifts", to_json(s.h)},
               {"HW", to_json(s.HW)},
               {"gamma", to_json(s.gamma)}}}};
    man.write("ground_state.json", out.dump(2) + "\n");
    man.write("grid.csv", to_text([&](std::ostream& os) { write_grid_csv(os, *p.grid); }));
    man.write("psi.csv", to_text([&](std::ostream& os) { write_state_csv(os, s.psi); }));
    man.write("phi.csv", to_text([&](std::ostream& os) { write_state_csv(os, s.phi); }));
    man.results()["gap"] = finite(s.gap);
    man.results()["EW"] = s.EW;
    log << "E = " << fmt_double(s.E) << "  gap = " << fmt_double(s.gap) << "  dim = " << s.basis->dimension() << "\n";
    return 0;
}

int cmd_derivatives(const RunConfig& cfg, Manifest& man, std::ostream& log) {
    const auto p = prepare(cfg, man);
    const auto rep = man.timed("derivative_report", [&] { return derivative_report(p.state, true, cfg.fd); });
    const auto sn = man.timed("scaling_norms", [&] { return scaling_norms(p.state); });
    json fd = json::array();
    for (const auto& c : rep.fd) fd.push_back(to_json(c));
    json out{{"gradE", to_json(rep.gradE)},
             {"gradE_dressed", to_json(rep.gradEDressed)},
             {"hessian", matrix_json(rep.hessE)},
             {"radial_hessian", rep.radialHessian},
             {"d3E_radial", rep.d3E_radial},
             {"scaling_norms", {{"n0", sn.n0}, {"n1", sn.n1}, {"n2", sn.n2}}},
             {"fd_checks", fd}};
    man.write("derivatives.json", out.dump(2) + "\n");
    man.write("fd_checks.csv", to_text([&](std::ostream& os) { write_fd_csv(os, rep.fd); }));
    man.write("psi_derivatives.csv", vec_csv({{"d0", &rep.psiDeriv[0]}, {"d1", &rep.psiDeriv[1]}, {"d2", &rep.psiDeriv[2]}}));
    man.results()["radial_hessian"] = rep.radialHessian;
    for (const auto& c : rep.fd) {
        man.results()["fd_min_order"][c.quantity] = c.minOrder;
        log << c.quantity << ": observed order " << fmt_double(c.minOrder) << "\n";
    }
    return 0;
}

int cmd_wavefunctions(const RunConfig& cfg, Manifest& man, std::ostream& log) {
    const auto p = prepare(cfg, man);
    const auto& s = p.state;
    const FroehlichEvaluator ev(s);
    const int M = static_cast<int>(p.grid->size());
    std::vector<WaveFunctionSample> samples;
    man.timed("samples", [&] {
        for (int m = 0; m < M; ++m) {
            const Vec3 k = p.grid->modes[static_cast<std::size_t>(m)].k;
            samples.push_back({1, {k}, extract_fq(*s.basis, *p.grid, s.psi, {m}), "extracted", "none"});
            samples.push_back({1, {k}, ev.f1(k), "froehlich", "none"});
        }
        if (s.basis->max_photons() >= 2 && M > 0)
            for (int t = 0; t < 12; ++t) {
                const int a = (5 * t) % M, b = (3 * t + 1) % M;
                const std::vector<Vec3> ks{p.grid->modes[static_cast<std::size_t>(a)].k,
                                           p.grid->modes[static_cast<std::size_t>(b)].k};
                samples.push_back({2, ks, extract_fq(*s.basis, *p.grid, s.psi, {a, b}), "extracted", "none"});
                samples.push_back({2, ks, ev.fq(ks), "froehlich", "none"});
            }
        const Vec3 k = 0.5 * (cfg.model.sigma + 0.8 * cfg.model.kappa) * Vec3(1, 2, 2).normalized();
        for (int i = 0; i < 3; ++i) {
            samples.push_back({1, {k}, ev.f1_dP(k, i), "froehlich", "dP" + std::to_string(i)});
            samples.push_back({1, {k}, ev.f1_dk(k, i), "froehlich", "dk" + std::to_string(i)});
            for (int j = i; j < 3; ++j) {
                const std::string ij = std::to_string(i) + std::to_string(j);
                samples.push_back({1, {k}, ev.f1_dPdP(k, i, j), "froehlich", "dPdP" + ij});
                samples.push_back({1, {k}, ev.f1_dkdk(k, i, j), "froehlich", "dkdk" + ij});
            }
            for (int j = 0; j < 3; ++j)
                samples.push_back({1, {k}, ev.f1_dPdk(k, i, j), "froehlich",
                                   "dP" + std::to_string(i) + "dk" + std::to_string(j)});
        }
        return 0;
    });
    man.write("wavefunctions.csv", to_text([&](std::ostream& os) { write_samples_csv(os, samples); }));

    std::vector<Vec3> ks;
    for (const auto& m : p.grid->modes) ks.push_back(m.k);
    const double c = man.timed("bound_check", [&] { return bound_check_f1(ev, cfg.model, ks); });
    man.results()["f1_bound_constant"] = c;

    std::ostringstream canc;
    canc << "k,t1,t2,t3,sum,largest,ratio,full\n";
    man.timed("cancellation", [&] {
        const Vec3 dir = Vec3(1, 2, 2).normalized();
        for (double r = 0.4 * cfg.model.kappa; r > 1.5 * cfg.model.sigma; r /= std::sqrt(2.0)) {
            const auto t = cancellation_demo_q1(s, ev, r * dir, 0, 0);
            canc << fmt_double(t.k) << ',' << fmt_double(t.t1) << ',' << fmt_double(t.t2) << ',' << fmt_double(t.t3)
                 << ',' << fmt_double(t.sum) << ',' << fmt_double(t.largest) << ',' << fmt_double(t.ratio) << ','
                 << fmt_double(t.full) << '\n';
        }
        return 0;
    });
    man.write("cancellation.csv", canc.str());
    man.write("bound.json", json{{"f1_bound_constant", c}, {"samples", ks.size()}}.dump(2) + "\n");
    log << "f1 bound constant " << fmt_double(c) << " over " << ks.size() << " grid modes\n";
    return 0;
}

std::string lambda_tag(double l) { return "lambda_" + fmt_double(l); }

json sweep_summary(const ScaleSweepLedger& L) {
    const auto fits = sweep_fits(L);
    const auto es = energy_shift_ledger(L);
    const auto gap = gap_ledger(L);
    json margins = json::array();
    for (double m : gap.margins) margins.push_back(finite(m));
    return {{"lambda", L.params.lambda},
            {"complete", L.complete},
            {"rows", L.rows.size()},
            {"flags", L.flags},
            {"fits",
             {{"n0", to_json(fits.n0)},
              {"n1", to_json(fits.n1)},
              {"n2", to_json(fits.n2)},
              {"contour", to_json(fits.contour)},
              {"d3E", to_json(fits.d3E)},
              {"psi_cauchy", to_json(fits.psiCauchy)}}},
            {"psi_cauchy_decay_exponent", finite(-fits.psiCauchy.deltaHat)},
            {"energy_shift",
             {{"c_max", es.cMax}, {"c_min", es.cMin}, {"variation", es.variation}, {"worst_increase", es.worstIncrease}}},
            {"gap", {{"all_positive", gap.allPositive}, {"margins", margins}, {"slope", to_json(gap.slope)}}}};
}

std::string sweep_plot(const ScaleSweepLedger& L) {
    const auto fits = sweep_fits(L);
    auto series = [&](const std::string& label, auto get, const ExponentFit& f) {
        PlotSeries s;
        s.label = label;
        for (const auto& r : L.rows) {
            if (r.n == 0) continue;
            s.x.push_back(r.sigma);
            s.y.push_back(get(r));
        }
        s.hasFit = f.ok;
        s.fittedSlope = -f.deltaHat;
        return s;
    };
    return loglog_svg("lambda = " + fmt_double(L.params.lambda), "sigma_n", "norm",
                      {series("|R0 Gamma phi|", [](const LedgerRow& r) { return r.n0; }, fits.n0),
                       series("|R0 Gamma R0 Gamma phi|", [](const LedgerRow& r) { return r.n1; }, fits.n1),
                       series("|R0^2 Gamma phi|", [](const LedgerRow& r) { return r.n2; }, fits.n2),
                       series("contour sup", [](const LedgerRow& r) { return r.contourNorm; }, fits.contour),
                       series("|psi_n - psi_n-1|", [](const LedgerRow& r) { return r.psiCauchy; }, fits.psiCauchy)});
}

int cmd_sweep(const RunConfig& cfg, Manifest& man, std::ostream& log, const json& previous) {
    const bool resume = previous.value("status", "") == "interrupted" &&
                        previous.value("config_fingerprint", "") == config_fingerprint(cfg);
    std::vector<std::string> previousFiles;
    if (resume)
        for (const auto& f : previous["files"]) previousFiles.push_back(f["path"].get<std::string>());

    SweepOptions opt;
    opt.grid = cfg.grid;
    opt.trunc = cfg.basis;
    opt.spectral = cfg.solver;
    opt.contourSamples = cfg.contourSamples;
    opt.stopAfter = cfg.stopAfter;

    bool interrupted = false;
    json summaries = json::array();
    json deltaHat = json::object();
    std::vector<double> deltaSeq;
    for (double lambda : cfg.lambdas) {
        ModelParams params = cfg.model;
        params.lambda = lambda;
        const std::string tag = lambda_tag(lambda);
        std::vector<LedgerRow> resumeRows;
        if (resume && std::find(previousFiles.begin(), previousFiles.end(), "ledger_" + tag + ".json") != previousFiles.end()) {
            const json j = json::parse(read_text_file(man.dir() / ("ledger_" + tag + ".json")));
            for (const auto& r : j["rows"]) resumeRows.push_back(ledger_row_from_json(r));
            log << tag << ": resuming after " << resumeRows.size() << " completed rows\n";
        }
        const auto L = man.timed("sweep_" + tag, [&] {
            return run_sweep(params, opt, resumeRows, [&](const LedgerRow& r) {
                log << tag << ": scale " << r.n << " sigma " << fmt_double(r.sigma) << " dim " << r.dimension << " "
                    << r.status << "\n";
            });
        });
        json rows = json::array();
        for (const auto& r : L.rows) rows.push_back(to_json(r));
        man.write("ledger_" + tag + ".json", json{{"lambda", lambda}, {"complete", L.complete}, {"rows", rows}}.dump(2) + "\n");
        man.write("ledger_" + tag + ".csv", to_text([&](std::ostream& os) { write_ledger_csv(os, L); }));
        if (!L.complete) {
            interrupted = true;
            break;
        }
        man.write("plot_" + tag + ".svg", sweep_plot(L));
        const json sum = sweep_summary(L);
        summaries.push_back(sum);
        deltaHat[tag] = sum["fits"]["n0"]["delta_hat"];
        deltaSeq.push_back(sweep_fits(L).n0.deltaHat);
        for (const auto& f : L.flags) man.warn(tag + ": " + f);
    }
    if (interrupted) {
        man.results()["interrupted"] = true;
        log << "sweep interrupted; rerun with the same configuration to resume\n";
        return 3;
    }
    bool monotone = true;
    for (std::size_t i = 1; i < deltaSeq.size(); ++i)
        if (!(deltaSeq[i] >= deltaSeq[i - 1])) monotone = false;
    const json summary{{"per_lambda", summaries}, {"delta_hat_n0", deltaHat}, {"delta_hat_nondecreasing_in_lambda", monotone}};
    man.write("summary.json", summary.dump(2) + "\n");
    man.results()["delta_hat_n0"] = deltaHat;
    return 0;
}

int cmd_verify(const RunConfig& cfg, Manifest& man, std::ostream& log) {
    const auto checks = man.timed("verify_suite", [&] { return run_verify_suite(cfg); });
    man.write("verify.csv", to_text([&](std::ostream& os) { write_verify_csv(os, checks); }));
    std::size_t width = 0;
    for (const auto& c : checks) width = std::max(width, c.name.size());
    std::vector<std::string> failed;
    for (const auto& c : checks) {
        log << (c.pass ? "PASS  " : "FAIL  ") << c.name << std::string(width + 2 - c.name.size(), ' ')
            << fmt_double(c.value) << (c.lowerBound ? " >= " : " <= ") << fmt_double(c.threshold) << "   " << c.detail
            << "\n";
        man.results()["checks"][c.name] = c.pass;
        if (!c.pass) failed.push_back(c.name);
    }
    if (!failed.empty()) {
        log << "verify: " << failed.size() << " check(s) failed:";
        for (const auto& f : failed) log << ' ' << f;
        log << "\n";
        return 1;
    }
    log << "verify: all " << checks.size() << " checks passed\n";
    return 0;
}

int cmd_report(const RunConfig& cfg, Manifest& man, std::ostream& log) {
    std::ostringstream md;
    md << "# nelson_lab report\n\n";
    md << "| command | status | key results |\n|---|---|---|\n";
    std::vector<PlotSeries> n0Series;
    for (const auto& name : command_names()) {
        if (name == "report") continue;
        const json m = read_manifest(fs::path(cfg.outDir) / name);
        if (m.empty()) {
            md << "| " << name << " | not run | |\n";
            continue;
        }
        md << "| " << name << " | " << m.value("status", "?") << " | `" << m.value("results", json::object()).dump()
           << "` |\n";
        if (name == "sweep")
            for (const auto& f : m["files"]) {
                const std::string path = f["path"];
                if (path.rfind("ledger_", 0) != 0 || path.size() < 5 || path.substr(path.size() - 5) != ".json") continue;
                const json j = json::parse(read_text_file(fs::path(cfg.outDir) / name / path));
                PlotSeries s;
                s.label = "lambda = " + fmt_double(j["lambda"].get<double>());
                for (const auto& r : j["rows"]) {
                    const LedgerRow row = ledger_row_from_json(r);
                    if (row.n == 0) continue;
                    s.x.push_back(row.sigma);
                    s.y.push_back(row.n0);
                }
                n0Series.push_back(s);
            }
    }
    if (!n0Series.empty()) {
        man.write("scaling_n0.svg", loglog_svg("|R0 Gamma phi| across couplings", "sigma_n", "n0", n0Series));
        md << "\n![n0 scaling](scaling_n0.svg)\n";
    }
    man.write("report.md", md.str());
    log << "report written to " << (man.dir() / "report.md").string() << "\n";
    return 0;
}

}  // namespace

int run_command(const std::string& command, const RunConfig& cfg, std::ostream& log) {
    if (std::find(command_names().begin(), command_names().end(), command) == command_names().end())
        throw Error("unknown command '" + command + "'");
    cfg.validate();
    const fs::path dir = fs::path(cfg.outDir) / command;
    const json previous = read_manifest(dir);
    const bool keep = command == "sweep" && previous.value("status", "") == "interrupted" &&
                      previous.value("config_fingerprint", "") == config_fingerprint(cfg);
    if (!keep && fs::exists(dir)) fs::remove_all(dir);
    fs::create_directories(dir);
    Manifest man(dir, command);
    int status = 2;
    try {
        if (command == "ground-state") status = cmd_ground_state(cfg, man, log);
        else if (command == "derivatives") status = cmd_derivatives(cfg, man, log);
        else if (command == "wavefunctions") status = cmd_wavefunctions(cfg, man, log);
        else if (command == "sweep") status = cmd_sweep(cfg, man, log, previous);
        else if (command == "verify") status = cmd_verify(cfg, man, log);
        else status = cmd_report(cfg, man, log);
    } catch (const Error& e) {
        man.warn(std::string("error: ") + e.what());
        man.finish(cfg, "error");
        throw;
    }
    man.finish(cfg, status == 0 ? "complete" : status == 1 ? "checks_failed" : status == 3 ? "interrupted" : "error");
    return status;
}

}  // namespace nelson
