#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "lbm/expfam.hpp"
#include "lbm/model.hpp"
#include "lbm/simulate.hpp"
#include "lbm/varem.hpp"

namespace lbm {

// ---------------------------------------------------------------------------
// Limiting covariances of the complete-data MLE.

struct AsymptoticCovariances {
    Eigen::MatrixXd sigma_pi;     // Diag(pi) - pi pi^T
    Eigen::MatrixXd sigma_rho;    // Diag(rho) - rho rho^T
    Eigen::MatrixXd sigma_alpha;  // 1 / (pi_k rho_l psi''(alpha_kl)), componentwise
};

AsymptoticCovariances theoretical_covariances(const LbmParams& params);

// ---------------------------------------------------------------------------
// Replication harness. Replicate r draws its data from make_rng(seed, stream, r),
// so every report depends on (params, sizes, seed) and not on `threads`.

/// Scaled gaps between the true-label MLE and an aligned fit:
/// sqrt(n)|d pi|_inf, sqrt(d)|d rho|_inf, sqrt(nd)|d alpha|_inf.
Eigen::Vector3d scaled_gaps(const LbmParams& reference, const LbmParams& other, Eigen::Index n,
                            Eigen::Index d);

struct Alignment {
    PermPair perm;                   // permute(fitted, perm) is compared with the reference
    Eigen::Vector3d gaps;            // scaled gaps after alignment
    Eigen::Vector3d identity_gaps;   // scaled gaps without relabeling
};

/// Relabeling of `fitted` minimizing the largest scaled gap to `reference`,
/// searched exhaustively (identity first, first minimum kept). Above the
/// permutation cap, falls back to max-trace matching of the soft confusion of
/// q against a_star.
Alignment align_to_reference(const LbmParams& fitted, const LbmParams& reference, Eigen::Index n,
                             Eigen::Index d, const MeanFieldQ* q = nullptr,
                             const Assignment* a_star = nullptr);

struct ReplicationReport {
    int attempted = 0;
    int replicate_count = 0;              // successful replicates (rows below)
    Eigen::MatrixXd scaled_pi_errors;     // R x g
    Eigen::MatrixXd scaled_rho_errors;    // R x m
    Eigen::MatrixXd scaled_alpha_errors;  // R x (g m), column k m + l
    std::vector<PermPair> alignment_perms;
    Eigen::MatrixXd var_vs_mle_gaps;      // R x 3
    Eigen::MatrixXd identity_gaps;        // R x 3, before alignment
    Eigen::VectorXd row_error_rate;       // misclassified fraction after relabeling
    Eigen::VectorXd col_error_rate;
    int failures = 0;                     // empty group or boundary mean with true labels
    int fit_failures = 0;                 // every restart degenerated
    std::size_t symmetry_count = 1;       // #S(theta*)
};

ReplicationReport run_complete_mle_replications(const LbmParams& params, Eigen::Index n,
                                                Eigen::Index d, int replicates,
                                                std::uint64_t seed, int threads = 1);

/// Fits the variational estimator with hidden labels on each draw and records
/// the true-label MLE errors alongside the aligned gaps between the two.
ReplicationReport run_estimator_comparison(const LbmParams& params, Eigen::Index n,
                                           Eigen::Index d, int replicates,
                                           const FitConfig& config, std::uint64_t seed,
                                           int threads = 1);

// ---------------------------------------------------------------------------
// Local asymptotic normality of the complete log-likelihood.

struct Perturbation {
    Eigen::VectorXd s;  // sum zero
    Eigen::VectorXd t;  // sum zero
    Eigen::MatrixXd u;
};

struct LanTerms {
    double exact = 0.0;            // L(theta_h) - L(theta*), computed blockwise
    double linear = 0.0;
    double quadratic = 0.0;
    double alpha_exact = 0.0;      // alpha part of `exact`
    double alpha_expansion = 0.0;  // alpha part of linear + quadratic
    double remainder() const { return exact - linear - quadratic; }
    double alpha_remainder() const { return alpha_exact - alpha_expansion; }
};

/// theta_h = (pi + s/sqrt(n), rho + t/sqrt(d), alpha + u/sqrt(nd)). Throws
/// PerturbationOutOfBox if a proportion leaves (0, 1) or alpha leaves the box.
LbmParams perturbed_params(const LbmParams& params, const Perturbation& p, Eigen::Index n,
                           Eigen::Index d, const AlphaBox& box);

/// Exact log-likelihood change and its second-order expansion at theta*, with
/// the exact observed gradient and Hessian of the data at hand.
LanTerms lan_terms(const DataMatrix& x, const Assignment& a, const LbmParams& params,
                   const Perturbation& p, const AlphaBox& box);

struct LanReport {
    Eigen::VectorXd remainder;
    Eigen::VectorXd alpha_remainder;
    double median_abs_remainder = 0.0;
    double median_abs_alpha_remainder = 0.0;
    double max_abs_alpha_remainder = 0.0;
};

/// s, t uniform on [-scale, scale]^g (resp. ^m) projected onto sum zero,
/// u uniform on [-scale, scale]^{g x m}.
LanReport lan_check(const LbmParams& params, Eigen::Index n, Eigen::Index d, int replicates,
                    double perturbation_scale, std::uint64_t seed, int threads = 1,
                    const AlphaBox& box = AlphaBox{-10.0, 10.0});

// ---------------------------------------------------------------------------
// Concentration, regularity and separability experiments.

struct ConcentrationConfig {
    std::vector<double> eps_grid{0.1, 0.2, 0.3};
    int assignments_per_replicate = 20;
    double m_cap = 1.0;  // M in Z = M sum |X_i|
    double kappa = 1.0;
};

struct ConcentrationReport {
    int replicates = 0;
    SubexpParams subexp;
    std::vector<double> eps;
    std::vector<double> block_freq;       // P(max block-mean deviation > eps)
    std::vector<double> block_log_bound;
    std::vector<double> block_bound;      // min(1, bound)
    std::vector<double> z_threshold;      // t = eps M N
    std::vector<double> z_freq;           // P(Z - M V0 sqrt(N) >= t)
    std::vector<double> z_bound;
    double z_mean = 0.0;
    double z_mean_bound = 0.0;
};

/// Binomial standard error sqrt(p (1 - p) / R).
double binomial_se(double p, int replicates);

ConcentrationReport concentration_audit(const LbmParams& params, const AlphaBox& box,
                                        Eigen::Index n, Eigen::Index d, double c, int replicates,
                                        const ConcentrationConfig& config, std::uint64_t seed,
                                        int threads = 1);

/// Random labels with every group of size >= level * n (rejection sampling).
Assignment sample_regular_assignment(Eigen::Index n, Eigen::Index d, Eigen::Index g,
                                     Eigen::Index m, double level, Rng& rng);

struct RegularityReport {
    int replicates = 0;
    int irregular = 0;
    double freq = 0.0;
    double bound = 0.0;
};

/// Frequency of true labels that are not c/2-regular.
RegularityReport regularity_experiment(const LbmParams& params, Eigen::Index n, Eigen::Index d,
                                       double c, int replicates, std::uint64_t seed,
                                       int threads = 1);

/// Relabels a uniformly sized random subset of at most radius*n/2 rows and
/// radius*d/2 columns, resampling until the result is `level`-regular.
Assignment sample_local_assignment(const Assignment& a_star, Eigen::Index g, Eigen::Index m,
                                   double radius, double level, Rng& rng);

struct SeparabilityReport {
    int contexts = 0;
    int samples = 0;
    int violations = 0;
    double min_margin = 0.0;  // min over samples of (bound - lambda_tilde)
    double delta = 0.0;
};

SeparabilityReport separability_experiment(const LbmParams& params, Eigen::Index n,
                                           Eigen::Index d, double c, double radius, int contexts,
                                           int samples_per_context, std::uint64_t seed,
                                           int threads = 1);

struct OracleReport {
    int instances = 0;
    int q_checks = 0;
    int q_violations = 0;       // elbo(Q, theta) > oracle
    double max_q_excess = 0.0;
    int fit_violations = 0;     // final ELBO > oracle(theta_hat) + 1e-8
    double max_fit_excess = 0.0;
    int single_column_instances = 0;
    double max_single_column_gap = 0.0;  // |max_Q elbo - oracle| with m = 1
};

OracleReport oracle_experiment(int instances, int q_per_instance, Eigen::Index n, Eigen::Index d,
                               Eigen::Index g, Eigen::Index m, std::uint64_t seed,
                               int threads = 1);

struct MonotonicityReport {
    int runs = 0;
    int checked_steps = 0;
    int violations = 0;
    double worst_drop = 0.0;
};

/// Randomized fits over families, sizes and seeds; every VE step, M step and
/// trace increment is checked against a 1e-8 slack.
MonotonicityReport monotonicity_sweep(int runs, std::uint64_t seed, int threads = 1);

// ---------------------------------------------------------------------------
// Sample statistics used by the reports.

namespace stats {

Eigen::VectorXd column_means(const Eigen::MatrixXd& samples);
/// Unbiased sample covariance of the rows.
Eigen::MatrixXd covariance(const Eigen::MatrixXd& samples);
Eigen::MatrixXd correlation(const Eigen::MatrixXd& samples);
Eigen::VectorXd skewness(const Eigen::MatrixXd& samples);
Eigen::VectorXd excess_kurtosis(const Eigen::MatrixXd& samples);
/// ||est - target||_F / ||target||_F.
double relative_frobenius(const Eigen::MatrixXd& est, const Eigen::MatrixXd& target);
double median(std::vector<double> v);
double median(const Eigen::VectorXd& v);

}  // namespace stats

/// Random parameters used by the sweeps: proportions from normalized uniforms
/// on [0.2, 1], alpha uniform on [-2, 2] (Gaussian variance 1).
LbmParams random_params(const Family& family, Eigen::Index g, Eigen::Index m, Rng& rng);

}  // namespace lbm
