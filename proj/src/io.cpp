#include "nelson/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "nelson/grid.hpp"

namespace nelson {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fmt_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

nlohmann::json to_json(const Eigen::Vector3d& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw Error("expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json to_json(const Eigen::VectorXd& v) {
    return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vectorxd_from_json(const nlohmann::json& j) {
    const auto xs = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

void write_state_csv(std::ostream& os, const Eigen::VectorXcd& v) {
    os << "index,re,im\n";
    for (Eigen::Index i = 0; i < v.size(); ++i)
        os << i << ',' << fmt_double(v[i].real()) << ',' << fmt_double(v[i].imag()) << '\n';
}

void write_state_csv(std::ostream& os, const Eigen::VectorXd& v) {
    write_state_csv(os, Eigen::VectorXcd(v.cast<std::complex<double>>()));
}

Eigen::VectorXcd read_state_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "index,re,im") throw Error("state CSV: bad header");
    std::vector<std::complex<double>> values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string a, b, c;
        std::getline(ls, a, ',');
        std::getline(ls, b, ',');
        std::getline(ls, c, ',');
        const auto idx = std::stoull(a);
        if (idx != values.size()) throw Error("state CSV: non-contiguous index");
        values.emplace_back(std::stod(b), std::stod(c));
    }
    return Eigen::Map<Eigen::VectorXcd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string write_text_file(const std::filesystem::path& root, const std::string& relative, const std::string& text) {
    const auto path = root / relative;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path.string());
    os << text;
    return relative;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string loglog_svg(const std::string& title, const std::string& xLabel, const std::string& yLabel,
                       const std::vector<PlotSeries>& series) {
    const double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0) || !(s.y[i] > 0)) continue;
            xmin = std::min(xmin, std::log10(s.x[i]));
            xmax = std::max(xmax, std::log10(s.x[i]));
            ymin = std::min(ymin, std::log10(s.y[i]));
            ymax = std::max(ymax, std::log10(s.y[i]));
        }
    if (!std::isfinite(xmin)) xmin = -1, xmax = 0, ymin = -1, ymax = 0;  // all-zero data: flat frame
    if (xmax - xmin < 1e-12) xmin -= 0.5, xmax += 0.5;
    if (ymax - ymin < 1e-12) ymin -= 0.5, ymax += 0.5;
    auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">log10 " << xLabel
       << "  [" << fmt_double(xmin) << ", " << fmt_double(xmax) << "]</text>\n";
    os << "<text x=\"16\" y=\"" << H / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 " << H / 2
       << ")\" text-anchor=\"middle\">log10 " << yLabel << "  [" << fmt_double(ymin) << ", " << fmt_double(ymax)
       << "]</text>\n";
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* c = colors[si % 6];
        std::ostringstream pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!(s.x[i] > 0) || !(s.y[i] > 0)) continue;
            const double x = px(std::log10(s.x[i])), y = py(std::log10(s.y[i]));
            pts << x << ',' << y << ' ';
            os << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"" << c << "\"/>\n";
        }
        os << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"" << pts.str() << "\"/>\n";
        os << "<text x=\"" << L + 10 << "\" y=\"" << T + 16 * (si + 1) << "\" font-size=\"12\" fill=\"" << c << "\">"
           << s.label;
        if (s.hasFit) os << "  (fitted slope " << fmt_double(s.fittedSlope) << ")";
        os << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace nelson
