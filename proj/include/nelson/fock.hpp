#ifndef NELSON_FOCK_HPP
#define NELSON_FOCK_HPP

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "nelson/grid.hpp"

namespace nelson {

/// Truncated symmetric Fock space over M modes with at most Q photons.
///
/// States are stored as non-decreasing mode lists; ordering is total photon
/// number first, then lexicographic in the mode list (equivalently descending
/// lexicographic in the occupation vector). Index 0 is the vacuum, and the
/// states with at most L photons form a prefix of length level_end(L).
class FockBasis {
public:
    /// One nonzero matrix element of b_m: state -> lowered, amplitude sqrt(n_m).
    struct Lowering {
        std::uint32_t mode;
        std::uint32_t target;
        double amplitude;
    };

    FockBasis() = default;
    FockBasis(int modeCount, int maxPhotons, int perModeCap, std::size_t dimensionCap);

    int mode_count() const { return modeCount_; }
    int max_photons() const { return maxPhotons_; }
    int per_mode_cap() const { return perModeCap_; }
    Eigen::Index dimension() const { return static_cast<Eigen::Index>(states_.size()); }

    /// Number of states with at most `level` photons.
    Eigen::Index level_end(int level) const;
    int photon_count(Eigen::Index i) const { return static_cast<int>(states_[static_cast<std::size_t>(i)].size()); }

    const std::vector<std::uint32_t>& modes_of(Eigen::Index i) const { return states_[static_cast<std::size_t>(i)]; }
    std::vector<int> occupation_of(Eigen::Index i) const;

    /// -1 when the occupation is outside the truncation.
    Eigen::Index index_of_modes(const std::vector<std::uint32_t>& sortedModes) const;
    Eigen::Index index_of(const std::vector<int>& occupation) const;

    const std::vector<Lowering>& lowerings(Eigen::Index i) const { return lower_[static_cast<std::size_t>(i)]; }
    /// Nonzero elements of b*_m leading to states inside the basis; `target` is the raised state.
    const std::vector<Lowering>& raisings(Eigen::Index i) const { return raise_[static_cast<std::size_t>(i)]; }

    std::uint64_t hash() const;

private:
    struct KeyHash {
        std::size_t operator()(const std::vector<std::uint32_t>& v) const noexcept;
    };

    int modeCount_ = 0;
    int maxPhotons_ = 0;
    int perModeCap_ = 0;
    std::vector<std::vector<std::uint32_t>> states_;
    std::vector<Eigen::Index> levelEnd_;
    std::unordered_map<std::vector<std::uint32_t>, Eigen::Index, KeyHash> index_;
    std::vector<std::vector<Lowering>> lower_;
    std::vector<std::vector<Lowering>> raise_;
};

/// Dimension guard for build_basis.
inline constexpr std::size_t kDefaultDimensionCap = 2'000'000;

/// perModeCap < 0 means "no per-mode cap" (= Q).
FockBasis build_basis(int modeCount, int maxPhotons, int perModeCap = -1,
                      std::size_t dimensionCap = kDefaultDimensionCap);

/// Stars-and-bars dimension without per-mode cap.
std::uint64_t fock_dimension(int modeCount, int maxPhotons);

template <typename Scalar>
using StateVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// b_m v.
template <typename Scalar>
StateVector<Scalar> apply_annihilate(const FockBasis& basis, int mode, const StateVector<Scalar>& v) {
    if (mode < 0 || mode >= basis.mode_count()) throw Error("apply_annihilate: mode out of range");
    StateVector<Scalar> out = StateVector<Scalar>::Zero(v.size());
    for (Eigen::Index i = 0; i < basis.dimension(); ++i)
        for (const auto& l : basis.lowerings(i))
            if (static_cast<int>(l.mode) == mode) out[l.target] += l.amplitude * v[i];
    return out;
}

template <typename Scalar>
struct CreateResult {
    StateVector<Scalar> vector;
    double leakage = 0;   ///< squared norm of the dropped above-cap amplitude
};

/// b*_m v; amplitude pushed above the truncation is reported, not hidden.
template <typename Scalar>
CreateResult<Scalar> apply_create(const FockBasis& basis, int mode, const StateVector<Scalar>& v) {
    if (mode < 0 || mode >= basis.mode_count()) throw Error("apply_create: mode out of range");
    CreateResult<Scalar> r{StateVector<Scalar>::Zero(v.size()), 0.0};
    std::vector<char> reached(static_cast<std::size_t>(v.size()), 0);
    for (Eigen::Index i = 0; i < basis.dimension(); ++i)
        for (const auto& l : basis.lowerings(i))
            if (static_cast<int>(l.mode) == mode) {
                r.vector[i] += l.amplitude * v[l.target];
                reached[static_cast<std::size_t>(l.target)] = 1;
            }
    for (Eigen::Index j = 0; j < basis.dimension(); ++j) {
        if (reached[static_cast<std::size_t>(j)]) continue;
        int n = 0;
        for (auto m : basis.modes_of(j)) n += (static_cast<int>(m) == mode);
        r.leakage += (n + 1) * std::norm(std::complex<double>(v[j]));
    }
    return r;
}

/// Zero-pads v (over `parent`) into `child`, whose modes extend the parent's.
template <typename Scalar>
StateVector<Scalar> embed(const StateVector<Scalar>& v, const FockBasis& parent, const FockBasis& child) {
    if (child.mode_count() < parent.mode_count() || child.max_photons() < parent.max_photons() ||
        (child.per_mode_cap() < parent.per_mode_cap()))
        throw Error("embed: child basis does not extend the parent basis");
    if (v.size() != parent.dimension()) throw Error("embed: vector/basis size mismatch");
    StateVector<Scalar> out = StateVector<Scalar>::Zero(child.dimension());
    for (Eigen::Index i = 0; i < parent.dimension(); ++i) {
        const Eigen::Index j = child.index_of_modes(parent.modes_of(i));
        if (j < 0) throw Error("embed: parent state missing from child basis");
        out[j] = v[i];
    }
    return out;
}

}  // namespace nelson

#endif
