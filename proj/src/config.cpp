#include "nelson/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "nelson/io.hpp"

namespace nelson {

namespace pt = boost::property_tree;

RunConfig::RunConfig() {
    model.lambda = 0.05;
    model.sigma = 0.1;
    model.P = Vec3(0.1, 0.05, 0.0);
    model.nScales = 5;
}

void RunConfig::validate() const {
    try {
        model.validate();
    } catch (const Error& e) {
        throw Error(std::string("config [model]: ") + e.what());
    }
    auto need = [](bool ok, const char* key, const char* what) {
        if (!ok) throw Error(std::string("config key '") + key + "': " + what);
    };
    need(grid.nRadialPerDecade >= 1, "grid.radial_per_decade", "must be >= 1");
    need(grid.nPolar >= 1, "grid.polar", "must be >= 1");
    need(grid.nAzimuthal >= 1, "grid.azimuthal", "must be >= 1");
    need(basis.maxPhotons >= 1, "basis.max_photons", "must be >= 1");
    need(basis.perModeCap == -1 || basis.perModeCap >= 1, "basis.per_mode_cap", "must be -1 or >= 1");
    need(basis.dimensionCap >= 1, "basis.dimension_cap", "must be >= 1");
    need(solver.eigTol > 0, "solver.eig_tol", "must be > 0");
    need(solver.solveTol > 0, "solver.solve_tol", "must be > 0");
    need(solver.maxIterations >= 10, "solver.max_iterations", "must be >= 10");
    need(solver.krylovDim >= 8, "solver.krylov_dim", "must be >= 8");
    need(solver.denseThreshold >= 1, "solver.dense_threshold", "must be >= 1");
    need(fd.h > 0 && fd.h < 1.0 / 6.0, "derivatives.fd_step", "must lie in (0, 1/6)");
    need(fd.levels >= 2, "derivatives.fd_levels", "must be >= 2");
    need(!lambdas.empty(), "sweep.lambdas", "needs at least one value");
    for (double l : lambdas) need(l >= 0, "sweep.lambdas", "values must be >= 0");
    need(contourSamples >= 4, "sweep.contour_samples", "must be >= 4");
    need(!outDir.empty(), "output.dir", "must not be empty");
    need(jobs >= 1, "run.jobs", "must be >= 1");
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "model.lambda",         "model.kappa",         "model.sigma",          "model.alpha_bar",
        "model.eps0",           "model.P",             "grid.radial_per_decade", "grid.polar",
        "grid.azimuthal",       "basis.max_photons",   "basis.per_mode_cap",   "basis.dimension_cap",
        "solver.eig_tol",       "solver.solve_tol",    "solver.max_iterations", "solver.krylov_dim",
        "solver.seed",          "solver.dense_threshold", "derivatives.fd_step", "derivatives.fd_levels",
        "sweep.epsilon",        "sweep.scales",        "sweep.lambdas",        "sweep.contour_samples",
        "sweep.stop_after",     "output.dir",          "run.jobs",             "verify.corrupt_weight"};
    return keys;
}

const std::vector<std::string>& required_config_keys() {
    static const std::vector<std::string> keys{"model.lambda", "model.sigma"};
    return keys;
}

namespace {

std::vector<double> parse_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (item.empty()) throw Error("config key '" + key + "': empty list entry");
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw Error("config key '" + key + "': cannot parse '" + item + "'");
        out.push_back(v);
    }
    return out;
}

template <typename T>
T parse_scalar(const std::string& key, const std::string& text) {
    std::istringstream is(text);
    T v{};
    is >> v;
    if (is.fail() || !(is >> std::ws).eof()) throw Error("config key '" + key + "': cannot parse '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw Error("config key '" + key + "': expected true/false, got '" + text + "'");
}

void apply(RunConfig& c, const std::string& key, const std::string& value) {
    if (value.empty()) throw Error("config key '" + key + "' is missing a value");
    auto d = [&] { return parse_scalar<double>(key, value); };
    auto i = [&] { return parse_scalar<int>(key, value); };
    if (key == "model.lambda") c.model.lambda = d();
    else if (key == "model.kappa") c.model.kappa = d();
    else if (key == "model.sigma") c.model.sigma = d();
    else if (key == "model.alpha_bar") c.model.alphaBar = d();
    else if (key == "model.eps0") c.model.eps0 = d();
    else if (key == "model.P") {
        const auto v = parse_list(key, value);
        if (v.size() != 3) throw Error("config key 'model.P': expected three components");
        c.model.P = Vec3(v[0], v[1], v[2]);
    } else if (key == "grid.radial_per_decade") c.grid.nRadialPerDecade = i();
    else if (key == "grid.polar") c.grid.nPolar = i();
    else if (key == "grid.azimuthal") c.grid.nAzimuthal = i();
    else if (key == "basis.max_photons") c.basis.maxPhotons = i();
    else if (key == "basis.per_mode_cap") c.basis.perModeCap = i();
    else if (key == "basis.dimension_cap") c.basis.dimensionCap = parse_scalar<std::size_t>(key, value);
    else if (key == "solver.eig_tol") c.solver.eigTol = d();
    else if (key == "solver.solve_tol") c.solver.solveTol = d();
    else if (key == "solver.max_iterations") c.solver.maxIterations = i();
    else if (key == "solver.krylov_dim") c.solver.krylovDim = i();
    else if (key == "solver.seed") c.solver.seed = parse_scalar<std::uint64_t>(key, value);
    else if (key == "solver.dense_threshold") c.solver.denseThreshold = parse_scalar<Eigen::Index>(key, value);
    else if (key == "derivatives.fd_step") c.fd.h = d();
    else if (key == "derivatives.fd_levels") c.fd.levels = i();
    else if (key == "sweep.epsilon") c.model.epsilon = d();
    else if (key == "sweep.scales") c.model.nScales = i();
    else if (key == "sweep.lambdas") c.lambdas = parse_list(key, value);
    else if (key == "sweep.contour_samples") c.contourSamples = i();
    else if (key == "sweep.stop_after") c.stopAfter = i();
    else if (key == "output.dir") c.outDir = value;
    else if (key == "run.jobs") c.jobs = i();
    else if (key == "verify.corrupt_weight") c.corruptWeight = parse_bool(key, value);
    else throw Error("unknown config key '" + key + "'");
}

void apply_overrides(RunConfig& c, const ConfigOverrides& o) {
    if (o.lambda) {
        c.model.lambda = *o.lambda;
        c.lambdas = {*o.lambda};
    }
    if (o.sigma) c.model.sigma = *o.sigma;
    if (o.epsilon) c.model.epsilon = *o.epsilon;
    if (o.scales) c.model.nScales = *o.scales;
    if (o.qMax) c.basis.maxPhotons = *o.qMax;
    if (o.jobs) c.jobs = *o.jobs;
    if (o.out) c.outDir = *o.out;
}

}  // namespace

RunConfig parse_config(std::istream& ini, const ConfigOverrides& overrides) {
    pt::ptree tree;
    try {
        pt::read_ini(ini, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    RunConfig c;
    std::vector<std::string> seen;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty())
            throw Error("config key '" + section + "' lies outside any section");
        for (const auto& [name, node] : body) {
            const std::string key = section + "." + name;
            apply(c, key, node.data());
            seen.push_back(key);
        }
    }
    for (const auto& key : required_config_keys())
        if (std::find(seen.begin(), seen.end(), key) == seen.end())
            throw Error("config is missing required key '" + key + "'");
    apply_overrides(c, overrides);
    c.validate();
    return c;
}

RunConfig load_config(const std::optional<std::string>& iniPath, const ConfigOverrides& overrides) {
    RunConfig c;
    if (iniPath) {
        std::ifstream in(*iniPath);
        if (!in) throw Error("cannot open config file '" + *iniPath + "'");
        c = parse_config(in, overrides);
    } else {
        apply_overrides(c, overrides);
    }
    if (const char* env = std::getenv("NELSON_LAB_OUT"); env && *env) c.outDir = env;
    c.validate();
    return c;
}

std::string config_to_ini(const RunConfig& c) {
    std::ostringstream os;
    auto list = [](const std::vector<double>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_double(v[i]);
        return s;
    };
    os << "[model]\n"
       << "lambda = " << fmt_double(c.model.lambda) << "\n"
       << "kappa = " << fmt_double(c.model.kappa) << "\n"
       << "sigma = " << fmt_double(c.model.sigma) << "\n"
       << "alpha_bar = " << fmt_double(c.model.alphaBar) << "\n"
       << "eps0 = " << fmt_double(c.model.eps0) << "\n"
       << "P = " << list({c.model.P.x(), c.model.P.y(), c.model.P.z()}) << "\n\n"
       << "[grid]\n"
       << "radial_per_decade = " << c.grid.nRadialPerDecade << "\n"
       << "polar = " << c.grid.nPolar << "\n"
       << "azimuthal = " << c.grid.nAzimuthal << "\n\n"
       << "[basis]\n"
       << "max_photons = " << c.basis.maxPhotons << "\n"
       << "per_mode_cap = " << c.basis.perModeCap << "\n"
       << "dimension_cap = " << c.basis.dimensionCap << "\n\n"
       << "[solver]\n"
       << "eig_tol = " << fmt_double(c.solver.eigTol) << "\n"
       << "solve_tol = " << fmt_double(c.solver.solveTol) << "\n"
       << "max_iterations = " << c.solver.maxIterations << "\n"
       << "krylov_dim = " << c.solver.krylovDim << "\n"
       << "seed = " << c.solver.seed << "\n"
       << "dense_threshold = " << c.solver.denseThreshold << "\n\n"
       << "[derivatives]\n"
       << "fd_step = " << fmt_double(c.fd.h) << "\n"
       << "fd_levels = " << c.fd.levels << "\n\n"
       << "[sweep]\n"
       << "epsilon = " << fmt_double(c.model.epsilon) << "\n"
       << "scales = " << c.model.nScales << "\n"
       << "lambdas = " << list(c.lambdas) << "\n"
       << "contour_samples = " << c.contourSamples << "\n"
       << "stop_after = " << c.stopAfter << "\n\n"
       << "[output]\n"
       << "dir = " << c.outDir << "\n\n"
       << "[run]\n"
       << "jobs = " << c.jobs << "\n\n"
       << "[verify]\n"
       << "corrupt_weight = " << (c.corruptWeight ? "true" : "false") << "\n";
    return os.str();
}

nlohmann::json to_json(const RunConfig& c) {
    return {{"model",
             {{"lambda", c.model.lambda},
              {"kappa", c.model.kappa},
              {"sigma", c.model.sigma},
              {"alpha_bar", c.model.alphaBar},
              {"eps0", c.model.eps0},
              {"P", to_json(c.model.P)}}},
            {"grid", {{"radial_per_decade", c.grid.nRadialPerDecade}, {"polar", c.grid.nPolar}, {"azimuthal", c.grid.nAzimuthal}}},
            {"basis",
             {{"max_photons", c.basis.maxPhotons},
              {"per_mode_cap", c.basis.perModeCap},
              {"dimension_cap", c.basis.dimensionCap}}},
            {"solver",
             {{"eig_tol", c.solver.eigTol},
              {"solve_tol", c.solver.solveTol},
              {"max_iterations", c.solver.maxIterations},
              {"krylov_dim", c.solver.krylovDim},
              {"seed", c.solver.seed},
              {"dense_threshold", c.solver.denseThreshold},
              {"min_gap", c.solver.minGap}}},
            {"derivatives", {{"fd_step", c.fd.h}, {"fd_levels", c.fd.levels}}},
            {"sweep",
             {{"epsilon", c.model.epsilon},
              {"scales", c.model.nScales},
              {"lambdas", c.lambdas},
              {"contour_samples", c.contourSamples},
              {"stop_after", c.stopAfter}}},
            {"output", {{"dir", c.outDir}}},
            {"run", {{"jobs", c.jobs}}},
            {"verify", {{"corrupt_weight", c.corruptWeight}}}};
}

}  // namespace nelson
