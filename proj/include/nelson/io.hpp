#ifndef NELSON_IO_HPP
#define NELSON_IO_HPP

#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace nelson {

/// 64-bit FNV-1a over raw value bytes; used for grid/basis fingerprints.
class Fnv1a {
public:
    void add_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 1099511628211ULL;
        }
    }
    void add(double x) { add_bytes(&x, sizeof x); }
    void add(std::int64_t x) { add_bytes(&x, sizeof x); }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 1469598103934665603ULL;
};

std::string hex64(std::uint64_t v);

/// Shortest round-trip decimal representation (deterministic across runs).
std::string fmt_double(double x);

nlohmann::json to_json(const Eigen::Vector3d& v);
Eigen::Vector3d vec3_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vectorxd_from_json(const nlohmann::json& j);

/// State vector CSV: index,re,im (one row per nonzero-or-not coefficient).
void write_state_csv(std::ostream& os, const Eigen::VectorXcd& v);
void write_state_csv(std::ostream& os, const Eigen::VectorXd& v);
Eigen::VectorXcd read_state_csv(std::istream& is);

/// Writes a file and returns its path relative to root, for manifests.
std::string write_text_file(const std::filesystem::path& root, const std::string& relative, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

struct PlotSeries {
    std::string label;
    std::vector<double> x, y;
    double fittedSlope = 0;   ///< slope annotated on the plot
    bool hasFit = false;
};

/// Minimal log-log SVG line plot.
std::string loglog_svg(const std::string& title, const std::string& xLabel, const std::string& yLabel,
                       const std::vector<PlotSeries>& series);

}  // namespace nelson

#endif
