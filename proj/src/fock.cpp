#include "nelson/fock.hpp"

#include <string>

#include "nelson/io.hpp"

namespace nelson {

std::size_t FockBasis::KeyHash::operator()(const std::vector<std::uint32_t>& v) const noexcept {
    std::size_t h = 1469598103934665603ULL;
    for (auto x : v) {
        h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h ^ v.size();
}

std::uint64_t fock_dimension(int modeCount, int maxPhotons) {
    // sum_q C(M+q-1, q) = C(M+Q, Q)
    std::uint64_t c = 1;
    for (int i = 1; i <= maxPhotons; ++i) c = c * static_cast<std::uint64_t>(modeCount + i) / static_cast<std::uint64_t>(i);
    return c;
}

FockBasis::FockBasis(int modeCount, int maxPhotons, int perModeCap, std::size_t dimensionCap)
    : modeCount_(modeCount), maxPhotons_(maxPhotons), perModeCap_(perModeCap < 0 ? maxPhotons : perModeCap) {
    if (modeCount < 0) throw Error("build_basis: mode count must be >= 0");
    if (maxPhotons < 0) throw Error("build_basis: Q must be >= 0");
    if (modeCount > 0 && perModeCap_ >= maxPhotons && fock_dimension(modeCount, maxPhotons) > dimensionCap)
        throw Error("build_basis: dimension " + std::to_string(fock_dimension(modeCount, maxPhotons)) +
                    " exceeds cap " + std::to_string(dimensionCap));

    states_.push_back({});
    levelEnd_.push_back(1);
    std::vector<std::uint32_t> seq;
    for (int q = 1; q <= maxPhotons && modeCount > 0; ++q) {
        // non-decreasing sequences of length q in lexicographic order
        seq.assign(static_cast<std::size_t>(q), 0);
        while (true) {
            bool ok = perModeCap_ >= 1;
            int run = 1;
            for (int j = 1; j < q && ok; ++j) {
                run = (seq[static_cast<std::size_t>(j)] == seq[static_cast<std::size_t>(j - 1)]) ? run + 1 : 1;
                ok = run <= perModeCap_;
            }
            if (ok) {
                states_.push_back(seq);
                if (states_.size() > dimensionCap)
                    throw Error("build_basis: dimension exceeds cap " + std::to_string(dimensionCap));
            }
            int j = q - 1;
            while (j >= 0 && seq[static_cast<std::size_t>(j)] == static_cast<std::uint32_t>(modeCount - 1)) --j;
            if (j < 0) break;
            const auto next = seq[static_cast<std::size_t>(j)] + 1;
            for (int t = j; t < q; ++t) seq[static_cast<std::size_t>(t)] = next;
        }
        levelEnd_.push_back(static_cast<Eigen::Index>(states_.size()));
    }
    while (static_cast<int>(levelEnd_.size()) <= maxPhotons) levelEnd_.push_back(static_cast<Eigen::Index>(states_.size()));

    index_.reserve(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i], static_cast<Eigen::Index>(i));

    lower_.resize(states_.size());
    std::vector<std::uint32_t> reduced;
    for (std::size_t i = 0; i < states_.size(); ++i) {
        const auto& s = states_[i];
        for (std::size_t j = 0; j < s.size();) {
            std::size_t e = j;
            while (e < s.size() && s[e] == s[j]) ++e;
            const auto n = static_cast<double>(e - j);
            reduced = s;
            reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(j));
            lower_[i].push_back({s[j], static_cast<std::uint32_t>(index_.at(reduced)), std::sqrt(n)});
            j = e;
        }
    }
    raise_.resize(states_.size());
    for (std::size_t i = 0; i < states_.size(); ++i)
        for (const auto& l : lower_[i]) raise_[l.target].push_back({l.mode, static_cast<std::uint32_t>(i), l.amplitude});
}

Eigen::Index FockBasis::level_end(int level) const {
    if (level < 0) return 0;
    if (level >= static_cast<int>(levelEnd_.size())) return dimension();
    return levelEnd_[static_cast<std::size_t>(level)];
}

std::vector<int> FockBasis::occupation_of(Eigen::Index i) const {
    std::vector<int> n(static_cast<std::size_t>(modeCount_), 0);
    for (auto m : modes_of(i)) ++n[m];
    return n;
}

Eigen::Index FockBasis::index_of_modes(const std::vector<std::uint32_t>& sortedModes) const {
    auto it = index_.find(sortedModes);
    return it == index_.end() ? -1 : it->second;
}

Eigen::Index FockBasis::index_of(const std::vector<int>& occupation) const {
    if (static_cast<int>(occupation.size()) != modeCount_) return -1;
    std::vector<std::uint32_t> modes;
    for (int m = 0; m < modeCount_; ++m) {
        if (occupation[static_cast<std::size_t>(m)] < 0) return -1;
        for (int c = 0; c < occupation[static_cast<std::size_t>(m)]; ++c) modes.push_back(static_cast<std::uint32_t>(m));
    }
    return index_of_modes(modes);
}

std::uint64_t FockBasis::hash() const {
    Fnv1a h;
    h.add(static_cast<std::int64_t>(modeCount_));
    h.add(static_cast<std::int64_t>(maxPhotons_));
    h.add(static_cast<std::int64_t>(perModeCap_));
    h.add(static_cast<std::int64_t>(states_.size()));
    return h.value();
}

FockBasis build_basis(int modeCount, int maxPhotons, int perModeCap, std::size_t dimensionCap) {
    return FockBasis(modeCount, maxPhotons, perModeCap, dimensionCap);
}

}  // namespace nelson
