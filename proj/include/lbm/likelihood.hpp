#pragma once

#include <cstddef>
#include <limits>

#include <Eigen/Dense>

#include "lbm/model.hpp"
#include "lbm/simulate.hpp"

namespace lbm {

/// Per-block sufficient statistics for a hard assignment.
struct BlockStats {
    Eigen::MatrixXd counts;  // z_{+k} w_{+l}
    Eigen::MatrixXd sums;    // sum of x_ij over block (k, l)
    Eigen::MatrixXd means;   // sums / counts; 0 where the block is empty
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> empty;
};

BlockStats block_stats(const DataMatrix& x, const Assignment& a, Eigen::Index g, Eigen::Index m);

/// sum_ij log b(x_ij); shared by every likelihood of the same data.
double sum_log_base(const Family& family, const DataMatrix& x);

/// Absolutely normalized complete log-likelihood log p(x, z, w; theta),
/// including the base-measure term. Cells are visited in row-major order so that
/// relabeling labels and parameters together gives a bit-identical result.
double complete_loglik(const DataMatrix& x, const Assignment& a, const LbmParams& params);

/// Closed-form maximizer of complete_loglik for fixed labels. Throws EmptyGroup
/// when a group has no members and MeanOnBoundary when a block mean falls
/// outside the open mean domain.
LbmParams complete_mle(const DataMatrix& x, const Assignment& a, Eigen::Index g, Eigen::Index m,
                       const Family& family);

inline constexpr double kBruteForceCap = 2e6;

/// g^n m^d, as a double so large sizes do not overflow.
double configuration_count(Eigen::Index n, Eigen::Index d, Eigen::Index g, Eigen::Index m);

/// log sum_{z, w} p(x, z, w; theta) by full enumeration: odometer over z, and
/// for each z an odometer over w, accumulated with a running-max log-sum-exp.
/// Throws TooLarge when g^n m^d exceeds cap.
double observed_loglik_bruteforce(const DataMatrix& x, const LbmParams& params,
                                  double cap = kBruteForceCap);

/// log sum over all (s, t) of p(x, permute_assignment(a_star, (s, t)); theta).
double equivalent_assignment_sum(const DataMatrix& x, const LbmParams& params,
                                 const Assignment& a_star,
                                 std::size_t cap = kPermutationCap);

/// Streaming max-shifted log-sum-exp. Accepts -inf terms.
class LogSumExp {
   public:
    void add(double v);
    double value() const;

   private:
    double max_ = -std::numeric_limits<double>::infinity();
    double sum_ = 0.0;
};

}  // namespace lbm
