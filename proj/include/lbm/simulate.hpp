#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lbm/model.hpp"
#include "lbm/rng.hpp"

namespace lbm {

/// n x d observation matrix.
using DataMatrix = Eigen::MatrixXd;

/// Row labels z (length n, values in [0, g)) and column labels w (length d,
/// values in [0, m)). Labels are 0-based in memory and 1-based on disk.
struct Assignment {
    std::vector<int> z;
    std::vector<int> w;

    Eigen::Index n() const { return static_cast<Eigen::Index>(z.size()); }
    Eigen::Index d() const { return static_cast<Eigen::Index>(w.size()); }

    bool operator==(const Assignment&) const = default;
};

/// Throws InvalidArgument if any label is out of range or n, d < 1.
void validate_assignment(const Assignment& a, Eigen::Index g, Eigen::Index m);

/// Throws InvalidArgument for non-finite values or values outside the family support.
void validate_data(const Family& family, const DataMatrix& x);

/// Group sizes z_{+k}.
Eigen::VectorXd group_counts(const std::vector<int>& labels, Eigen::Index groups);

/// One-hot indicator matrix (rows: items, columns: groups).
Eigen::MatrixXd one_hot(const std::vector<int>& labels, Eigen::Index groups);

/// Draws z_i ~ M(pi) for all rows, then w_j ~ M(rho) for all columns.
Assignment sample_labels(const LbmParams& params, Eigen::Index n, Eigen::Index d, Rng& rng);

/// Draws z_i ~ M(pi), w_j ~ M(rho), then X_ij ~ phi(., alpha_{z_i w_j}) in
/// row-major order. Bit-identical for identical generator state.
std::pair<DataMatrix, Assignment> sample_lbm(const LbmParams& params, Eigen::Index n,
                                             Eigen::Index d, Rng& rng);

/// min_k z_{+k} >= c n and min_l w_{+l} >= c d, compared in real arithmetic.
bool is_c_regular(const Assignment& a, Eigen::Index g, Eigen::Index m, double c);

/// g exp(-n c^2 / 2) + m exp(-d c^2 / 2): bound on the probability that the
/// true labels are not c/2-regular when theta satisfies H1 at level c.
double regularity_failure_bound(Eigen::Index g, Eigen::Index m, double n, double d, double c);

}  // namespace lbm
