#include "nelson/grid.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <utility>
#include <ostream>

#include "nelson/io.hpp"

namespace nelson {

std::vector<std::string> ModelParams::validate() const {
    std::vector<std::string> warnings;
    if (!(lambda >= 0)) throw Error("lambda must be >= 0");
    if (!(kappa > 0)) throw Error("kappa must be > 0");
    if (!(sigma > 0 && sigma <= kappa)) throw Error("sigma must lie in (0, kappa]");
    if (!(alphaBar >= 0 && alphaBar <= 0.5)) throw Error("alphaBar must lie in [0, 1/2]");
    if (!(eps0 > 0 && eps0 < 1)) throw Error("eps0 must lie in (0, 1)");
    if (!(epsilon > 0 && epsilon <= 0.5)) throw Error("epsilon must lie in (0, 1/2]");
    if (nScales < 0) throw Error("nScales must be >= 0");
    if (!(P.norm() < 1.0 / 3.0)) throw Error("|P| must be < 1/3");
    if (P.norm() > 1.0 / 6.0)
        warnings.emplace_back("|P| > 1/6: outside the region where the wavefunction bounds are claimed");
    return warnings;
}

double MomentumGrid::weight_sum() const {
    double s = 0;
    for (const auto& m : modes) s += m.w;
    return s;
}

std::uint64_t MomentumGrid::hash() const {
    Fnv1a h;
    for (const auto& m : modes) {
        h.add(m.k.x());
        h.add(m.k.y());
        h.add(m.k.z());
        h.add(m.w);
        h.add(static_cast<std::int64_t>(m.shell));
    }
    h.add(sigmaLow);
    h.add(kappaHigh);
    return h.value();
}

namespace {

// 1 - (10t^3 - 15t^4 + 6t^5) and its t-derivatives.
struct Smoothstep {
    double s, ds, dds;
};

Smoothstep quintic_down(double t) {
    const double t2 = t * t, t3 = t2 * t;
    return {1.0 - (10 * t3 - 15 * t3 * t + 6 * t3 * t2),
            -(30 * t2 - 60 * t3 + 30 * t2 * t2),
            -(60 * t - 180 * t2 + 120 * t3)};
}

}  // namespace

double cutoff_chi(double r, double kappa, double eps0) {
    const double lo = (1.0 - eps0) * kappa;
    if (r <= lo) return 1.0;
    if (r >= kappa) return 0.0;
    return quintic_down((r - lo) / (eps0 * kappa)).s;
}

RadialValue form_factor_radial(double r, const ModelParams& p) {
    if (r < p.sigma || r <= 0 || r >= p.kappa || p.lambda == 0) return {};
    const double lo = (1.0 - p.eps0) * p.kappa;
    const double width = p.eps0 * p.kappa;
    Smoothstep chi{1.0, 0.0, 0.0};
    if (r > lo) {
        chi = quintic_down((r - lo) / width);
        chi.ds /= width;
        chi.dds /= width * width;
    }
    // power part: lambda/sqrt(2) r^(a - 1/2)
    const double a = p.alphaBar - 0.5;
    const double c = p.lambda / std::sqrt(2.0);
    const double pw = c * std::pow(r, a);
    const double dpw = a * pw / r;
    const double ddpw = a * (a - 1) * pw / (r * r);
    return {chi.s * pw, chi.ds * pw + chi.s * dpw, chi.dds * pw + 2 * chi.ds * dpw + chi.s * ddpw};
}

double form_factor(const Vec3& k, const ModelParams& params) {
    return form_factor_radial(k.norm(), params).value;
}

Eigen::VectorXd mode_couplings(const MomentumGrid& grid, const ModelParams& params) {
    Eigen::VectorXd g(static_cast<Eigen::Index>(grid.size()));
    for (std::size_t m = 0; m < grid.size(); ++m)
        g[static_cast<Eigen::Index>(m)] = form_factor(grid.modes[m].k, params) * std::sqrt(grid.modes[m].w);
    return g;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(static_cast<std::size_t>(n), 0.0);
    weights.assign(static_cast<std::size_t>(n), 0.0);
    // Legendre P_n(x) and P_n'(x) by the three-term recurrence
    auto legendre = [n](double x) {
        double p0 = 1, p1 = x;
        if (n == 0) return std::pair{1.0, 0.0};
        for (int j = 2; j <= n; ++j) {
            const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        return std::pair{p1, n * (x * p1 - p0) / (x * x - 1)};
    };
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            const auto [p, dp] = legendre(x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = legendre(x).second;
        const double w = 2.0 / ((1 - x * x) * dp * dp);
        nodes[static_cast<std::size_t>(i)] = -x;
        nodes[static_cast<std::size_t>(n - 1 - i)] = x;
        weights[static_cast<std::size_t>(i)] = w;
        weights[static_cast<std::size_t>(n - 1 - i)] = w;
    }
    if (n % 2 == 1) nodes[static_cast<std::size_t>(n / 2)] = 0.0;
}

namespace {

int shells_for(double lo, double hi, int perDecade) {
    const double decades = std::log10(hi / lo);
    return std::max(1, static_cast<int>(std::ceil(perDecade * decades - 1e-9)));
}

void append_annulus(MomentumGrid& grid, double lo, double hi, const GridSpec& spec) {
    if (spec.nRadialPerDecade < 1 || spec.nPolar < 1 || spec.nAzimuthal < 1)
        throw Error("grid spec counts must be >= 1");
    std::vector<double> ct, cw;
    gauss_legendre(spec.nPolar, ct, cw);
    const int nShell = shells_for(lo, hi, spec.nRadialPerDecade);
    const double ratio = std::pow(hi / lo, 1.0 / nShell);
    const double dphi = 2 * std::numbers::pi / spec.nAzimuthal;
    // outer shells first so that radius ordering is decreasing across refinements
    for (int s = nShell - 1; s >= 0; --s) {
        const double r0 = (s == 0) ? lo : lo * std::pow(ratio, s);
        const double r1 = (s == nShell - 1) ? hi : lo * std::pow(ratio, s + 1);
        const double rm = 0.5 * (r0 + r1);
        const double radial = (r1 * r1 * r1 - r0 * r0 * r0) / 3.0;
        const int shellIndex = grid.shellCount++;
        for (int t = 0; t < spec.nPolar; ++t) {
            const double c = ct[static_cast<std::size_t>(t)];
            const double st = std::sqrt(std::max(0.0, 1 - c * c));
            for (int a = 0; a < spec.nAzimuthal; ++a) {
                const double phi = dphi * (a + 0.5);
                Mode m;
                m.k = rm * Vec3(st * std::cos(phi), st * std::sin(phi), c);
                m.w = radial * cw[static_cast<std::size_t>(t)] * dphi;
                m.shell = shellIndex;
                grid.modes.push_back(m);
            }
        }
    }
}

}  // namespace

MomentumGrid build_grid(const ModelParams& params, const GridSpec& spec) {
    if (!(params.sigma > 0)) throw Error("sigma must be > 0");
    if (params.sigma >= params.kappa) throw Error("empty annulus: sigma >= kappa");
    MomentumGrid grid;
    grid.sigmaLow = params.sigma;
    grid.kappaHigh = params.kappa;
    append_annulus(grid, params.sigma, params.kappa, spec);
    return grid;
}

MomentumGrid refine_annulus(const MomentumGrid& grid, double sigmaNew, const GridSpec& spec) {
    if (sigmaNew == grid.sigmaLow) return grid;
    if (!(sigmaNew > 0) || sigmaNew > grid.sigmaLow)
        throw Error("refine_annulus: sigmaNew must lie in (0, sigmaLow]");
    MomentumGrid child = grid;
    child.parentModeCount = static_cast<int>(grid.size());
    child.sigmaLow = sigmaNew;
    append_annulus(child, sigmaNew, grid.sigmaLow, spec);
    return child;
}

MomentumGrid empty_grid(double kappa) {
    MomentumGrid g;
    g.sigmaLow = kappa;
    g.kappaHigh = kappa;
    return g;
}

void write_grid_csv(std::ostream& os, const MomentumGrid& grid) {
    os << "index,kx,ky,kz,abs_k,w,shell\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& m = grid.modes[i];
        os << i << ',' << fmt_double(m.k.x()) << ',' << fmt_double(m.k.y()) << ',' << fmt_double(m.k.z()) << ','
           << fmt_double(m.radius()) << ',' << fmt_double(m.w) << ',' << m.shell << '\n';
    }
}

}  // namespace nelson
