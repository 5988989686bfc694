#ifndef NELSON_TEST_HELPERS_HPP
#define NELSON_TEST_HELPERS_HPP

#include <cmath>
#include <memory>

#include <Eigen/Dense>

#include "nelson/dressing.hpp"
#include "nelson/fock.hpp"

namespace testing {

using nelson::Vec3;

inline nelson::ModelParams desk_params(double lambda, double sigma) {
    nelson::ModelParams p;
    p.lambda = lambda;
    p.sigma = sigma;
    p.P = Vec3(0.1, 0.05, 0.0);
    return p;
}

inline std::shared_ptr<const nelson::MomentumGrid> grid_for(const nelson::ModelParams& p,
                                                            nelson::GridSpec spec = {}) {
    return std::make_shared<const nelson::MomentumGrid>(nelson::build_grid(p, spec));
}

/// Dense matrix of b_m on the basis, built from occupation vectors only.
inline Eigen::MatrixXd dense_lowering(const nelson::FockBasis& basis, int mode) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(basis.dimension(), basis.dimension());
    for (Eigen::Index j = 0; j < basis.dimension(); ++j) {
        auto occ = basis.occupation_of(j);
        if (occ[static_cast<std::size_t>(mode)] == 0) continue;
        const double amp = std::sqrt(static_cast<double>(occ[static_cast<std::size_t>(mode)]));
        occ[static_cast<std::size_t>(mode)] -= 1;
        B(basis.index_of(occ), j) = amp;
    }
    return B;
}

inline double binomial(int n, int k) {
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace testing

#endif
