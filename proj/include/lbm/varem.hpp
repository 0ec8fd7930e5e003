#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lbm/model.hpp"
#include "lbm/rng.hpp"
#include "lbm/simulate.hpp"

namespace lbm {

/// Product distribution Q(z) Q(w): tau is n x g, nu is d x m, rows sum to one.
struct MeanFieldQ {
    Eigen::MatrixXd tau;
    Eigen::MatrixXd nu;

    /// Throws InvalidArgument unless entries lie in [0, 1] and rows sum to 1 +- 1e-10.
    void validate() const;
    /// Point mass on a hard assignment.
    static MeanFieldQ point_mass(const Assignment& a, Eigen::Index g, Eigen::Index m);
    /// Label-wise argmax of tau and nu (ties to the lowest label).
    Assignment map_labels() const;
};

enum class InitKind { Random, Marginal, Given };

struct FitConfig {
    int max_iter = 500;
    double tol = 1e-8;
    int restarts = 10;
    InitKind init = InitKind::Random;
    /// Mixing weight with the uniform distribution applied after each VE step.
    double smoothing_eps = 0.0;
    int threads = 1;
    std::optional<MeanFieldQ> initial_q;  // used when init == Given

    void validate() const;
};

struct FitResult {
    LbmParams params;
    MeanFieldQ q;
    std::vector<double> elbo_trace;
    bool converged = false;
    int best_restart = 0;
    int iterations = 0;
    std::vector<double> restart_elbos;  // NaN for restarts that degenerated
    int failed_restarts = 0;
};

/// J(Q, theta) = E_Q[log p(x, z, w; theta)] + H(Q), with 0 log 0 = 0.
double elbo(const DataMatrix& x, const MeanFieldQ& q, const LbmParams& params);

/// One coordinate-ascent sweep: rows first, then columns using the new rows.
MeanFieldQ ve_step(const DataMatrix& x, const MeanFieldQ& q, const LbmParams& params);

/// Soft-count maximizer of J over theta for fixed Q. Bernoulli and Poisson block
/// means are clamped into [1e-8, 1 - 1e-8] (Poisson: [1e-8, inf)).
/// Throws DegenerateResponsibilities if a group's soft mass is below 1e-12.
LbmParams m_step(const DataMatrix& x, const MeanFieldQ& q, const Family& family);

inline constexpr double kMeanClamp = 1e-8;

/// Alternating VE / M steps from several initializations; restarts run on
/// config.threads workers with seeds derived from `seed`, and the restart with
/// the highest final ELBO wins (ties to the lowest index).
FitResult fit_vem(const DataMatrix& x, Eigen::Index g, Eigen::Index m, const Family& family,
                  const FitConfig& config, std::uint64_t seed);

/// Initial responsibilities for one restart.
MeanFieldQ initial_q(const DataMatrix& x, Eigen::Index g, Eigen::Index m, InitKind kind, Rng& rng);

}  // namespace lbm
