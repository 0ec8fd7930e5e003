#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "lbm/asymptotics.hpp"
#include "lbm/errors.hpp"

using lbm::Family;
using lbm::LbmParams;

namespace {

LbmParams bernoulli_2x2() {
    LbmParams p{Family::bernoulli(), Eigen::Vector2d(0.4, 0.6), Eigen::Vector2d(0.4, 0.6), Eigen::MatrixXd(2, 2)};
    p.alpha << 1.5, -1.0, -1.0, 0.5;
    return p;
}

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           (a.size() == 0 || std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0);
}

}  // namespace

TEST(Asymptotics, CovarianceExamples) {
    LbmParams p{Family::bernoulli(), Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.5, 0.5), Eigen::MatrixXd::Zero(2, 2)};
    const auto cov = lbm::theoretical_covariances(p);
    Eigen::Matrix2d expected;
    expected << 0.25, -0.25, -0.25, 0.25;
    EXPECT_TRUE(cov.sigma_pi.isApprox(expected));
    EXPECT_TRUE(cov.sigma_alpha.isApprox(Eigen::MatrixXd::Constant(2, 2, 16.0)));

    LbmParams gp{Family::gaussian(2.0), Eigen::Vector3d(0.2, 0.3, 0.5), Eigen::Vector2d(0.25, 0.75),
                 Eigen::MatrixXd::Random(3, 2)};
    const auto gc = lbm::theoretical_covariances(gp);
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 2; ++l) EXPECT_NEAR(gc.sigma_alpha(k, l), 1.0 / (gp.pi(k) * gp.rho(l) * 2.0), 1e-14);
}

TEST(Asymptotics, ProportionCovarianceIsPsdRankDeficient) {
    lbm::Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const int g = gen::uniform_int(rng, 2, 6);
        const LbmParams p = gen::params(rng, gen::family(rng), g, 2);
        const auto cov = lbm::theoretical_covariances(p);
        EXPECT_TRUE(cov.sigma_pi.isApprox(cov.sigma_pi.transpose()));
        const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(cov.sigma_pi).eigenvalues();
        EXPECT_GE(ev.minCoeff(), -1e-12);
        EXPECT_EQ((ev.array() <= 1e-10).count(), 1);
        EXPECT_TRUE((cov.sigma_alpha.array() > 0).all());
    }
}

TEST(Asymptotics, CovariancesAreLabelEquivariant) {
    lbm::Rng rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const LbmParams p = gen::params(rng, gen::family(rng), 3, 3);
        const lbm::PermPair q = gen::perm_pair(rng, 3, 3);
        const auto a = lbm::theoretical_covariances(lbm::permute(p, q));
        const auto b = lbm::theoretical_covariances(p);
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l) {
                EXPECT_EQ(a.sigma_pi(k, l), b.sigma_pi(q.s[k], q.s[l]));
                EXPECT_EQ(a.sigma_alpha(k, l), b.sigma_alpha(q.s[k], q.t[l]));
            }
    }
}

TEST(Asymptotics, ScaledErrorsCenteredWithinClt) {
    const LbmParams p = bernoulli_2x2();
    const int reps = 400;
    const auto rep = lbm::run_complete_mle_replications(p, 100, 100, reps, 3);
    ASSERT_EQ(rep.replicate_count + rep.failures, reps);
    const auto cov = lbm::theoretical_covariances(p);
    const Eigen::VectorXd mpi = lbm::stats::column_means(rep.scaled_pi_errors);
    const Eigen::VectorXd malpha = lbm::stats::column_means(rep.scaled_alpha_errors);
    for (int k = 0; k < 2; ++k) EXPECT_LE(std::abs(mpi(k)), 4 * std::sqrt(cov.sigma_pi(k, k) / reps));
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
            EXPECT_LE(std::abs(malpha(k * 2 + l)), 4 * std::sqrt(cov.sigma_alpha(k, l) / reps));
    EXPECT_TRUE(rep.scaled_alpha_errors.allFinite());
}

TEST(Asymptotics, ReportsIndependentOfThreads) {
    const LbmParams p = bernoulli_2x2();
    const auto a = lbm::run_complete_mle_replications(p, 30, 30, 40, 9, 1);
    const auto b = lbm::run_complete_mle_replications(p, 30, 30, 40, 9, 4);
    EXPECT_TRUE(same_matrix(a.scaled_alpha_errors, b.scaled_alpha_errors));
    EXPECT_TRUE(same_matrix(a.scaled_pi_errors, b.scaled_pi_errors));
    EXPECT_EQ(a.failures, b.failures);

    lbm::FitConfig cfg;
    cfg.restarts = 2;
    const auto c = lbm::run_estimator_comparison(p, 30, 30, 10, cfg, 9, 1);
    const auto d = lbm::run_estimator_comparison(p, 30, 30, 10, cfg, 9, 3);
    EXPECT_TRUE(same_matrix(c.var_vs_mle_gaps, d.var_vs_mle_gaps));
    EXPECT_EQ(c.alignment_perms, d.alignment_perms);
}

TEST(Asymptotics, SingleBlockGapsVanish) {
    LbmParams p{Family::gaussian(1.0), Eigen::VectorXd::Ones(1), Eigen::VectorXd::Ones(1),
                Eigen::MatrixXd::Constant(1, 1, 0.4)};
    lbm::FitConfig cfg;
    cfg.restarts = 1;
    const auto rep = lbm::run_estimator_comparison(p, 20, 20, 5, cfg, 1);
    ASSERT_EQ(rep.replicate_count, 5);
    EXPECT_LT(rep.var_vs_mle_gaps.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Asymptotics, AlignmentNeverWorseThanIdentity) {
    const LbmParams p = bernoulli_2x2();
    lbm::FitConfig cfg;
    cfg.restarts = 2;
    const auto rep = lbm::run_estimator_comparison(p, 40, 40, 20, cfg, 5);
    for (Eigen::Index r = 0; r < rep.var_vs_mle_gaps.rows(); ++r)
        EXPECT_LE(rep.var_vs_mle_gaps.row(r).maxCoeff(), rep.identity_gaps.row(r).maxCoeff());

    // A relabeled copy aligns back to zero gaps.
    const lbm::PermPair q{{1, 0}, {1, 0}};
    const auto al = lbm::align_to_reference(lbm::permute(p, q), p, 50, 50);
    EXPECT_EQ(al.gaps.maxCoeff(), 0.0);
    EXPECT_TRUE(lbm::params_close(lbm::permute(lbm::permute(p, q), al.perm), p, 0.0));
}

TEST(Asymptotics, LanZeroPerturbationAndGaussianAlpha) {
    lbm::Rng rng(6);
    const LbmParams p = bernoulli_2x2();
    const auto [x, a] = lbm::sample_lbm(p, 50, 50, rng);
    const lbm::Perturbation zero{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero(), Eigen::Matrix2d::Zero()};
    EXPECT_EQ(lbm::lan_terms(x, a, p, zero, {-10, 10}).remainder(), 0.0);

    LbmParams gp = p;
    gp.family = Family::gaussian(1.5);
    const auto [xg, ag] = lbm::sample_lbm(gp, 50, 50, rng);
    const lbm::Perturbation pert{Eigen::Vector2d(0.3, -0.3), Eigen::Vector2d(-0.2, 0.2),
                                 (Eigen::Matrix2d() << 1.0, -0.7, 0.4, 2.0).finished()};
    const auto t = lbm::lan_terms(xg, ag, gp, pert, {-10, 10});
    EXPECT_LE(std::abs(t.alpha_remainder()), 1e-10);
    EXPECT_GT(std::abs(t.alpha_exact), 1e-3);
}

TEST(Asymptotics, PerturbationOutOfBox) {
    const LbmParams p = bernoulli_2x2();
    const lbm::Perturbation big{Eigen::Vector2d(5, -5), Eigen::Vector2d::Zero(), Eigen::Matrix2d::Zero()};
    try {
        lbm::perturbed_params(p, big, 4, 4, {-10, 10});
        FAIL();
    } catch (const lbm::Error& e) {
        EXPECT_EQ(e.code(), lbm::ErrorCode::PerturbationOutOfBox);
    }
}

TEST(Asymptotics, LanRemainderShrinks) {
    const LbmParams p = bernoulli_2x2();
    const auto small = lbm::lan_check(p, 100, 100, 200, 1.0, 4);
    const auto large = lbm::lan_check(p, 400, 400, 200, 1.0, 4);
    EXPECT_LT(large.median_abs_remainder, small.median_abs_remainder);
}

TEST(Asymptotics, ConcentrationBoundsDominate) {
    LbmParams p{Family::gaussian(1.0), Eigen::Vector2d(0.5, 0.5), Eigen::Vector2d(0.5, 0.5), Eigen::MatrixXd(2, 2)};
    p.alpha << 0.5, -0.5, 0.0, 1.0;
    lbm::ConcentrationConfig cfg;
    cfg.assignments_per_replicate = 5;
    const auto rep = lbm::concentration_audit(p, {-5, 5}, 30, 30, 0.4, 300, cfg, 2);
    ASSERT_EQ(rep.eps.size(), 3u);
    for (std::size_t i = 0; i < rep.eps.size(); ++i) {
        EXPECT_LE(rep.block_freq[i], rep.block_bound[i] + 3 * lbm::binomial_se(rep.block_bound[i], rep.replicates));
        EXPECT_LE(rep.z_freq[i], rep.z_bound[i] + 3 * lbm::binomial_se(rep.z_bound[i], rep.replicates));
    }
    EXPECT_LE(rep.z_mean, rep.z_mean_bound);
}

TEST(Asymptotics, RegularityExperimentDominated) {
    const LbmParams p = bernoulli_2x2();
    const auto rep = lbm::regularity_experiment(p, 60, 60, 0.3, 2000, 3);
    EXPECT_EQ(rep.replicates, 2000);
    EXPECT_LE(rep.freq, rep.bound + 3 * lbm::binomial_se(rep.bound, rep.replicates));
}

TEST(Asymptotics, SeparabilityExperimentClean) {
    LbmParams p{Family::gaussian(1.0), Eigen::Vector2d(0.45, 0.55), Eigen::Vector2d(0.4, 0.6), Eigen::MatrixXd(2, 2)};
    p.alpha << 1.0, -0.5, 0.0, 0.8;
    const auto rep = lbm::separability_experiment(p, 60, 60, 0.3, 0.1, 3, 30, 8);
    EXPECT_EQ(rep.samples, 90);
    EXPECT_EQ(rep.violations, 0);
    EXPECT_GE(rep.min_margin, 0.0);
}

TEST(Asymptotics, OracleAndMonotonicitySmall) {
    const auto orc = lbm::oracle_experiment(6, 20, 5, 5, 2, 2, 1);
    EXPECT_EQ(orc.q_violations, 0);
    EXPECT_LE(orc.max_fit_excess, 1e-8);
    EXPECT_LE(orc.max_single_column_gap, 1e-8);
    const auto mono = lbm::monotonicity_sweep(10, 2);
    EXPECT_EQ(mono.violations, 0);
    EXPECT_GT(mono.checked_steps, 0);
}

TEST(Asymptotics, RejectsZeroReplicates) {
    EXPECT_THROW(lbm::run_complete_mle_replications(bernoulli_2x2(), 10, 10, 0, 1), lbm::Error);
    EXPECT_THROW(lbm::regularity_experiment(bernoulli_2x2(), 10, 10, 0.3, 0, 1), lbm::Error);
}

TEST(AsymptoticsStats, HandComputedMoments) {
    Eigen::MatrixXd s(4, 2);
    s << 1, 2, 2, 4, 3, 6, 4, 8;
    EXPECT_TRUE(lbm::stats::column_means(s).isApprox(Eigen::Vector2d(2.5, 5.0)));
    const Eigen::MatrixXd cov = lbm::stats::covariance(s);
    EXPECT_NEAR(cov(0, 0), 5.0 / 3.0, 1e-14);
    EXPECT_NEAR(cov(1, 1), 20.0 / 3.0, 1e-14);
    EXPECT_NEAR(lbm::stats::correlation(s)(0, 1), 1.0, 1e-14);
    EXPECT_NEAR(lbm::stats::skewness(s)(0), 0.0, 1e-14);
    // Uniform on four points: m4 / m2^2 = (2 * (1.5^4 + 0.5^4) / 4) / 1.25^2 = 1.64.
    EXPECT_NEAR(lbm::stats::excess_kurtosis(s)(0), 1.64 - 3.0, 1e-12);
    EXPECT_EQ(lbm::stats::median(std::vector<double>{3, 1, 2}), 2.0);
    EXPECT_EQ(lbm::stats::median(std::vector<double>{4, 1, 2, 3}), 2.5);
    EXPECT_NEAR(lbm::stats::relative_frobenius(2 * Eigen::Matrix2d::Identity(), Eigen::Matrix2d::Identity()), 1.0, 1e-15);
}
