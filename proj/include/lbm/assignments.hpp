#pragma once

#include <vector>

#include <Eigen/Dense>

#include "lbm/model.hpp"
#include "lbm/simulate.hpp"

namespace lbm {

/// Confusion matrices between an assignment and the reference assignment:
/// rg(k, k') = #{i : z*_i = k, z_i = k'} / n, and likewise rm for columns.
struct ConfusionPair {
    Eigen::MatrixXd rg;
    Eigen::MatrixXd rm;
};

/// Relabeling that matches permute() on parameters: the new label of an item
/// is s^{-1}(old label), so that
///   complete_loglik(x, permute_assignment(a, p), permute(theta, p))
///     == complete_loglik(x, a, theta).
Assignment permute_assignment(const Assignment& a, const PermPair& p);

ConfusionPair confusion(const Assignment& a, const Assignment& a_star, Eigen::Index g,
                        Eigen::Index m);

/// Soft analogue of the row confusion: C(k, k') = sum_i [ref_i = k] resp(i, k') / n.
Eigen::MatrixXd soft_confusion(const Eigen::MatrixXd& resp, const std::vector<int>& ref,
                               Eigen::Index groups);

/// Permutation s maximizing sum_k score(k, s(k)). Exhaustive for size <= 6,
/// Hungarian algorithm beyond. Ties go to the lexicographically first s.
std::vector<int> max_trace_permutation(const Eigen::MatrixXd& score);

/// Distances in the one-hot Hamming norm (one relabeled row costs 2),
/// minimized over relabelings of `a`. permute_assignment(a, best) is the
/// representative closest to a_star.
struct EquivDistance {
    long dist_z = 0;
    long dist_w = 0;
    PermPair best;
};

EquivDistance distance_up_to_equiv(const Assignment& a, const Assignment& a_star,
                                   Eigen::Index g, Eigen::Index m);

/// Raw one-hot Hamming distance between two label vectors (no relabeling).
long hamming_one_hot(const std::vector<int>& a, const std::vector<int>& b);

/// (a, a_star) in S(z*, w*, r): dist_z <= r n and dist_w <= r d.
bool in_local_ball(const Assignment& a, const Assignment& a_star, Eigen::Index g,
                   Eigen::Index m, double r);

}  // namespace lbm
