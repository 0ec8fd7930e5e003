#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "lbm/errors.hpp"
#include "lbm/likelihood.hpp"
#include "lbm/varem.hpp"

using lbm::Assignment;
using lbm::Family;
using lbm::FitConfig;
using lbm::LbmParams;
using lbm::MeanFieldQ;

namespace {

// Quadruple-sum transcription of J(Q, theta).
double naive_elbo(const Eigen::MatrixXd& x, const MeanFieldQ& q, const LbmParams& p) {
    auto xlogx = [](double v) { return v > 0 ? v * std::log(v) : 0.0; };
    double j = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index k = 0; k < p.g(); ++k) j += q.tau(i, k) * std::log(p.pi(k)) - xlogx(q.tau(i, k));
    for (Eigen::Index c = 0; c < x.cols(); ++c)
        for (Eigen::Index l = 0; l < p.m(); ++l) j += q.nu(c, l) * std::log(p.rho(l)) - xlogx(q.nu(c, l));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index c = 0; c < x.cols(); ++c)
            for (Eigen::Index k = 0; k < p.g(); ++k)
                for (Eigen::Index l = 0; l < p.m(); ++l)
                    j += q.tau(i, k) * q.nu(c, l) * lbm::log_density(p.family, x(i, c), p.alpha(k, l));
    return j;
}

Eigen::MatrixXd draw(lbm::Rng& rng, const LbmParams& p, Eigen::Index n, Eigen::Index d) {
    return lbm::sample_lbm(p, n, d, rng).first;
}

double rel(double v) { return 1e-10 * std::max(1.0, std::abs(v)); }

MeanFieldQ permute_q(const MeanFieldQ& q, const lbm::PermPair& p) {
    MeanFieldQ out = q;
    for (std::size_t k = 0; k < p.s.size(); ++k) out.tau.col(k) = q.tau.col(p.s[k]);
    for (std::size_t l = 0; l < p.t.size(); ++l) out.nu.col(l) = q.nu.col(p.t[l]);
    return out;
}

}  // namespace

TEST(Varem, ElboMatchesNaive) {
    lbm::Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const LbmParams p = gen::params(rng, gen::family(rng), 2, 3);
        const Eigen::MatrixXd x = draw(rng, p, 9, 7);
        const MeanFieldQ q = gen::mean_field(rng, 9, 7, 2, 3);
        const double j = lbm::elbo(x, q, p);
        EXPECT_NEAR(j, naive_elbo(x, q, p), rel(j));
    }
}

TEST(Varem, PointMassElboIsCompleteLoglik) {
    lbm::Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const LbmParams p = gen::params(rng, gen::family(rng), 3, 2);
        const auto [x, a] = lbm::sample_lbm(p, 12, 10, rng);
        const double ll = lbm::complete_loglik(x, a, p);
        EXPECT_NEAR(lbm::elbo(x, MeanFieldQ::point_mass(a, 3, 2), p), ll, 1e-12 * std::abs(ll));
    }
}

TEST(Varem, ElboBelowObservedLikelihood) {
    lbm::Rng rng(3);
    for (int inst = 0; inst < 5; ++inst) {
        const LbmParams p = gen::params(rng, gen::family(rng), 2, 2);
        const Eigen::MatrixXd x = draw(rng, p, 5, 4);
        const double oracle = lbm::observed_loglik_bruteforce(x, p);
        for (int r = 0; r < 100; ++r)
            EXPECT_LE(lbm::elbo(x, gen::mean_field(rng, 5, 4, 2, 2, 3.0), p), oracle + 1e-10);
    }
}

TEST(Varem, SingleColumnGroupReachesOracle) {
    lbm::Rng rng(4);
    for (int inst = 0; inst < 10; ++inst) {
        const LbmParams p = gen::params(rng, gen::family(rng), 3, 1);
        const Eigen::MatrixXd x = draw(rng, p, 6, 5);
        MeanFieldQ q = gen::mean_field(rng, 6, 5, 3, 1);
        for (int it = 0; it < 5; ++it) q = lbm::ve_step(x, q, p);
        EXPECT_NEAR(lbm::elbo(x, q, p), lbm::observed_loglik_bruteforce(x, p), 1e-8);
    }
}

TEST(Varem, SingleRowGroupGivesOnes) {
    lbm::Rng rng(5);
    const LbmParams p = gen::params(rng, Family::poisson(), 1, 3);
    const Eigen::MatrixXd x = draw(rng, p, 8, 6);
    const MeanFieldQ q = lbm::ve_step(x, gen::mean_field(rng, 8, 6, 1, 3), p);
    EXPECT_TRUE((q.tau.array() == 1.0).all());
}

TEST(Varem, VeStepFixedPoint) {
    lbm::Rng rng(6);
    const LbmParams p = gen::params(rng, Family::gaussian(1.0), 2, 2);
    const Eigen::MatrixXd x = draw(rng, p, 6, 6);
    MeanFieldQ q = gen::mean_field(rng, 6, 6, 2, 2);
    for (int it = 0; it < 500; ++it) q = lbm::ve_step(x, q, p);
    const MeanFieldQ next = lbm::ve_step(x, q, p);
    EXPECT_LT((next.tau - q.tau).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((next.nu - q.nu).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Varem, MStepHardQEqualsCompleteMle) {
    lbm::Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const Family f = gen::family(rng);
        const LbmParams p = gen::params(rng, f, 2, 3, 1.0);
        const auto [x, a] = lbm::sample_lbm(p, 40, 40, rng);
        LbmParams mle;
        try {
            mle = lbm::complete_mle(x, a, 2, 3, f);
        } catch (const lbm::Error&) {
            continue;
        }
        const LbmParams soft = lbm::m_step(x, MeanFieldQ::point_mass(a, 2, 3), f);
        EXPECT_TRUE(lbm::params_close(soft, mle, 1e-12));
    }
}

TEST(Varem, MStepUniformQCollapses) {
    lbm::Rng rng(8);
    const LbmParams p = gen::params(rng, Family::poisson(), 3, 2);
    const Eigen::MatrixXd x = draw(rng, p, 10, 8);
    const MeanFieldQ q{Eigen::MatrixXd::Constant(10, 3, 1.0 / 3), Eigen::MatrixXd::Constant(8, 2, 0.5)};
    const LbmParams r = lbm::m_step(x, q, Family::poisson());
    EXPECT_TRUE(r.pi.isApprox(Eigen::VectorXd::Constant(3, 1.0 / 3)));
    EXPECT_TRUE(r.rho.isApprox(Eigen::VectorXd::Constant(2, 0.5)));
    const double a = std::log(x.mean());
    EXPECT_TRUE(r.alpha.isApprox(Eigen::MatrixXd::Constant(3, 2, a), 1e-12));
}

TEST(Varem, MStepDegenerate) {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
    MeanFieldQ q{Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Constant(2, 1, 1.0)};
    q.tau.col(0).setOnes();
    try {
        lbm::m_step(x, q, Family::gaussian(1.0));
        FAIL();
    } catch (const lbm::Error& e) {
        EXPECT_EQ(e.code(), lbm::ErrorCode::DegenerateResponsibilities);
    }
}

TEST(Varem, MStepClampsBoundaryMeans) {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 4);
    const MeanFieldQ q = MeanFieldQ::point_mass({{0, 0, 1, 1}, {0, 1, 0, 1}}, 2, 2);
    const LbmParams r = lbm::m_step(x, q, Family::bernoulli());
    const double floor = lbm::psi_prime_inv(Family::bernoulli(), lbm::kMeanClamp);
    EXPECT_TRUE((r.alpha.array() == floor).all());
}

TEST(Varem, FitSingleBlockIsGrandMean) {
    lbm::Rng rng(9);
    const LbmParams p = gen::params(rng, Family::gaussian(2.0), 1, 1);
    const Eigen::MatrixXd x = draw(rng, p, 30, 20);
    FitConfig cfg;
    cfg.restarts = 2;
    const auto fit = lbm::fit_vem(x, 1, 1, Family::gaussian(2.0), cfg, 5);
    EXPECT_LE(fit.iterations, 2);
    EXPECT_TRUE(fit.converged);
    EXPECT_NEAR(fit.params.alpha(0, 0), x.mean() / 2.0, 1e-12);
}

TEST(Varem, FitDeterministicAndIndependentOfThreads) {
    lbm::Rng rng(10);
    const LbmParams p = gen::params(rng, Family::bernoulli(), 2, 2);
    const Eigen::MatrixXd x = draw(rng, p, 40, 30);
    FitConfig cfg;
    cfg.restarts = 4;
    const auto a = lbm::fit_vem(x, 2, 2, Family::bernoulli(), cfg, 77);
    cfg.threads = 3;
    const auto b = lbm::fit_vem(x, 2, 2, Family::bernoulli(), cfg, 77);
    EXPECT_EQ(a.elbo_trace, b.elbo_trace);
    EXPECT_EQ(a.best_restart, b.best_restart);
    EXPECT_TRUE(lbm::params_close(a.params, b.params, 0.0));
    EXPECT_EQ(a.restart_elbos.size(), 4u);
    EXPECT_EQ(a.elbo_trace.back(), *std::max_element(a.restart_elbos.begin(), a.restart_elbos.end()));
}

TEST(Varem, FitConfigValidation) {
    FitConfig cfg;
    cfg.tol = 0.0;
    EXPECT_THROW(cfg.validate(), lbm::Error);
    cfg = {};
    cfg.restarts = 0;
    EXPECT_THROW(cfg.validate(), lbm::Error);
    cfg = {};
    cfg.smoothing_eps = 0.02;
    EXPECT_THROW(cfg.validate(), lbm::Error);
    cfg = {};
    cfg.init = lbm::InitKind::Given;
    EXPECT_THROW(cfg.validate(), lbm::Error);
}

TEST(Varem, MeanFieldValidation) {
    MeanFieldQ q{Eigen::MatrixXd::Constant(3, 2, 0.5), Eigen::MatrixXd::Constant(2, 2, 0.5)};
    EXPECT_NO_THROW(q.validate());
    q.tau(0, 0) = 0.6;
    EXPECT_THROW(q.validate(), lbm::Error);
}

// --- properties ---

TEST(VaremProperty, VeAndMStepsNeverDecreaseElbo) {
    lbm::Rng rng(20);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int g = gen::uniform_int(rng, 1, 3), m = gen::uniform_int(rng, 1, 3);
        const LbmParams p = gen::params(rng, gen::family(rng), g, m);
        const Eigen::MatrixXd x = draw(rng, p, gen::uniform_int(rng, 2, 10), gen::uniform_int(rng, 2, 10));
        const MeanFieldQ q = gen::mean_field(rng, x.rows(), x.cols(), g, m);
        const LbmParams theta = gen::params(rng, p.family, g, m);
        const double before = lbm::elbo(x, q, theta);
        const MeanFieldQ q2 = lbm::ve_step(x, q, theta);
        const double mid = lbm::elbo(x, q2, theta);
        EXPECT_GE(mid, before - 1e-8);
        LbmParams fitted;
        try {
            fitted = lbm::m_step(x, q2, p.family);
        } catch (const lbm::Error& e) {
            // A VE step can concentrate all mass away from a group or pin a
            // Gaussian block variance to zero; m_step has no maximizer then.
            ASSERT_EQ(e.code(), lbm::ErrorCode::DegenerateResponsibilities);
            continue;
        }
        EXPECT_GE(lbm::elbo(x, q2, fitted), mid - 1e-8);
        ++checked;
    }
    EXPECT_GE(checked, 900);
}

TEST(VaremProperty, MStepBeatsRandomParameters) {
    lbm::Rng rng(21);
    for (int inst = 0; inst < 10; ++inst) {
        const Family f = gen::family(rng);
        const LbmParams p = gen::params(rng, f, 2, 2);
        const Eigen::MatrixXd x = draw(rng, p, 15, 12);
        const MeanFieldQ q = gen::mean_field(rng, 15, 12, 2, 2);
        const double best = lbm::elbo(x, q, lbm::m_step(x, q, f));
        for (int r = 0; r < 100; ++r) EXPECT_GE(best, lbm::elbo(x, q, gen::params(rng, f, 2, 2, 3.0)));
    }
}

TEST(VaremProperty, TracesNondecreasingOverSweep) {
    lbm::Rng rng(22);
    for (int run = 0; run < 200; ++run) {
        const int g = gen::uniform_int(rng, 1, 3), m = gen::uniform_int(rng, 1, 3);
        const LbmParams p = gen::params(rng, gen::family(rng), g, m);
        const Eigen::MatrixXd x = draw(rng, p, gen::uniform_int(rng, 5, 25), gen::uniform_int(rng, 5, 25));
        FitConfig cfg;
        cfg.restarts = 1;
        cfg.max_iter = 100;
        lbm::FitResult fit;
        try {
            fit = lbm::fit_vem(x, g, m, p.family, cfg, run);
        } catch (const lbm::Error& e) {
            ASSERT_EQ(e.code(), lbm::ErrorCode::DegenerateResponsibilities);
            continue;
        }
        for (std::size_t i = 1; i < fit.elbo_trace.size(); ++i)
            EXPECT_GE(fit.elbo_trace[i], fit.elbo_trace[i - 1] - 1e-8) << "run " << run << " step " << i;
        EXPECT_NEAR(fit.elbo_trace.back(), lbm::elbo(x, fit.q, fit.params), rel(fit.elbo_trace.back()));
    }
}

TEST(VaremProperty, FitIsLabelEquivariant) {
    lbm::Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const LbmParams p = gen::params(rng, gen::family(rng), 2, 3, 1.5);
        const Eigen::MatrixXd x = draw(rng, p, 30, 30);
        const MeanFieldQ q0 = gen::mean_field(rng, 30, 30, 2, 3);
        const lbm::PermPair perm = gen::perm_pair(rng, 2, 3);
        FitConfig cfg;
        cfg.init = lbm::InitKind::Given;
        cfg.initial_q = q0;
        const auto a = lbm::fit_vem(x, 2, 3, p.family, cfg, 1);
        cfg.initial_q = permute_q(q0, perm);
        const auto b = lbm::fit_vem(x, 2, 3, p.family, cfg, 1);
        EXPECT_NEAR(a.elbo_trace.back(), b.elbo_trace.back(), 1e-9 * std::max(1.0, std::abs(a.elbo_trace.back())));
        EXPECT_TRUE(lbm::params_close(lbm::permute(a.params, perm), b.params, 1e-6));
    }
}
