#pragma once

// Hand-rolled random generators for property tests. All draws come from an
// explicit lbm::Rng so every property sweep is reproducible from its seed.

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "lbm/model.hpp"
#include "lbm/rng.hpp"
#include "lbm/simulate.hpp"
#include "lbm/varem.hpp"

namespace gen {

inline int uniform_int(lbm::Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double uniform(lbm::Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline lbm::Family family(lbm::Rng& rng) {
    switch (uniform_int(rng, 0, 2)) {
        case 0: return lbm::Family::bernoulli();
        case 1: return lbm::Family::poisson();
        default: return lbm::Family::gaussian(uniform(rng, 0.5, 2.0));
    }
}

inline Eigen::VectorXd simplex(lbm::Rng& rng, Eigen::Index k, double floor = 0.1) {
    Eigen::VectorXd v(k);
    for (Eigen::Index i = 0; i < k; ++i) v(i) = uniform(rng, floor, 1.0);
    return v / v.sum();
}

inline lbm::LbmParams params(lbm::Rng& rng, const lbm::Family& f, Eigen::Index g, Eigen::Index m,
                             double alpha_range = 2.0) {
    lbm::LbmParams p{f, simplex(rng, g), simplex(rng, m), Eigen::MatrixXd(g, m)};
    for (Eigen::Index i = 0; i < p.alpha.size(); ++i) p.alpha.data()[i] = uniform(rng, -alpha_range, alpha_range);
    return p;
}

inline std::vector<int> permutation(lbm::Rng& rng, Eigen::Index k) {
    std::vector<int> p(k);
    std::iota(p.begin(), p.end(), 0);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

inline lbm::PermPair perm_pair(lbm::Rng& rng, Eigen::Index g, Eigen::Index m) {
    return {permutation(rng, g), permutation(rng, m)};
}

inline std::vector<int> labels(lbm::Rng& rng, Eigen::Index n, Eigen::Index groups) {
    std::vector<int> z(n);
    for (auto& v : z) v = uniform_int(rng, 0, static_cast<int>(groups) - 1);
    return z;
}

inline lbm::Assignment assignment(lbm::Rng& rng, Eigen::Index n, Eigen::Index d, Eigen::Index g,
                                  Eigen::Index m) {
    return {labels(rng, n, g), labels(rng, d, m)};
}

inline Eigen::MatrixXd responsibilities(lbm::Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                        double sharpness = 2.0) {
    std::normal_distribution<double> normal(0.0, sharpness);
    Eigen::MatrixXd r(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index k = 0; k < cols; ++k) r(i, k) = std::exp(normal(rng));
        r.row(i) /= r.row(i).sum();
    }
    return r;
}

inline lbm::MeanFieldQ mean_field(lbm::Rng& rng, Eigen::Index n, Eigen::Index d, Eigen::Index g,
                                  Eigen::Index m, double sharpness = 2.0) {
    return {responsibilities(rng, n, g, sharpness), responsibilities(rng, d, m, sharpness)};
}

}  // namespace gen
