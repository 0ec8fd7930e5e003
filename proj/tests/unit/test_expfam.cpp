#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "lbm/errors.hpp"
#include "lbm/expfam.hpp"

using lbm::Family;

namespace {

// E_a[log phi(X, a) - log phi(X, a')] by summing the pmf until the remaining
// mass is negligible. Independent of the kl() closed form.
double kl_by_summation(const Family& f, double a, double ap) {
    if (f.kind == Family::Kind::Bernoulli) {
        const double p = 1.0 / (1.0 + std::exp(-a));
        const double q = 1.0 / (1.0 + std::exp(-ap));
        return p * std::log(p / q) + (1 - p) * std::log((1 - p) / (1 - q));
    }
    if (f.kind == Family::Kind::Poisson) {
        const double lam = std::exp(a), lamp = std::exp(ap);
        double total = 0.0, mass = 0.0;
        for (int k = 0; k < 10000 && 1.0 - mass > 1e-14; ++k) {
            const double logp = k * a - lam - std::lgamma(k + 1.0);
            const double pk = std::exp(logp);
            total += pk * (k * (a - ap) - lam + lamp);
            mass += pk;
        }
        return total;
    }
    const double mu = a * f.variance, mup = ap * f.variance;
    return (mu - mup) * (mu - mup) / (2.0 * f.variance);
}

}  // namespace

TEST(Expfam, PsiExamples) {
    EXPECT_DOUBLE_EQ(lbm::psi(Family::bernoulli(), 0.0), std::log(2.0));
    EXPECT_DOUBLE_EQ(lbm::psi(Family::poisson(), 0.0), 1.0);
    EXPECT_DOUBLE_EQ(lbm::psi(Family::gaussian(1.0), 2.0), 2.0);
}

TEST(Expfam, DerivativeExamples) {
    EXPECT_DOUBLE_EQ(lbm::psi_prime(Family::bernoulli(), 0.0), 0.5);
    EXPECT_DOUBLE_EQ(lbm::psi_second(Family::bernoulli(), 0.0), 0.25);
    EXPECT_NEAR(lbm::psi_prime(Family::poisson(), std::log(2.0)), 2.0, 1e-15);
    EXPECT_DOUBLE_EQ(lbm::psi_prime(Family::gaussian(2.0), 1.5), 3.0);
    EXPECT_DOUBLE_EQ(lbm::psi_second(Family::gaussian(2.0), -7.0), 2.0);
}

TEST(Expfam, BernoulliStableAtExtremes) {
    const Family f = Family::bernoulli();
    EXPECT_DOUBLE_EQ(lbm::psi(f, 800.0), 800.0);
    EXPECT_NEAR(lbm::psi(f, -800.0), 0.0, 1e-300);
    EXPECT_TRUE(std::isfinite(lbm::psi_prime(f, -800.0)));
}

TEST(Expfam, PoissonOverflowIsReported) {
    EXPECT_THROW(lbm::psi(Family::poisson(), 1000.0), lbm::Error);
}

TEST(Expfam, InverseExamples) {
    EXPECT_DOUBLE_EQ(lbm::psi_prime_inv(Family::bernoulli(), 0.5), 0.0);
    EXPECT_DOUBLE_EQ(lbm::psi_prime_inv(Family::poisson(), 1.0), 0.0);
    EXPECT_DOUBLE_EQ(lbm::psi_prime_inv(Family::gaussian(1.0), 2.5), 2.5);
}

TEST(Expfam, InverseRejectsBoundary) {
    for (double mean : {0.0, 1.0, -0.1, 1.5}) {
        try {
            lbm::psi_prime_inv(Family::bernoulli(), mean);
            FAIL() << "mean " << mean << " accepted";
        } catch (const lbm::Error& e) {
            EXPECT_EQ(e.code(), lbm::ErrorCode::DomainError);
        }
    }
    EXPECT_THROW(lbm::psi_prime_inv(Family::poisson(), 0.0), lbm::Error);
}

TEST(Expfam, KlExamples) {
    EXPECT_DOUBLE_EQ(lbm::kl(Family::bernoulli(), 1.3, 1.3), 0.0);
    EXPECT_NEAR(lbm::kl(Family::gaussian(1.0), 1.0, 0.0), 0.5, 1e-15);
    EXPECT_NEAR(lbm::kl(Family::poisson(), std::log(2.0), 0.0), 2.0 * std::log(2.0) - 1.0, 1e-12);
}

TEST(Expfam, SampleSupportAndMoments) {
    lbm::Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
        const double x = lbm::sample(Family::bernoulli(), 0.3, rng);
        EXPECT_TRUE(x == 0.0 || x == 1.0);
    }
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += lbm::sample(Family::poisson(), 0.0, rng);
    EXPECT_NEAR(sum / n, 1.0, 0.02);

    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = lbm::sample(Family::bernoulli(), 0.0, rng);
        s1 += x;
        s2 += x * x;
    }
    const double mean = s1 / n;
    EXPECT_NEAR(s2 / n - mean * mean, 0.25, 0.01);
}

TEST(Expfam, SampleDeterministicGivenState) {
    lbm::Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        const Family f = (i % 3 == 0) ? Family::bernoulli()
                         : (i % 3 == 1) ? Family::poisson()
                                        : Family::gaussian(0.7);
        EXPECT_EQ(lbm::sample(f, 0.4, a), lbm::sample(f, 0.4, b));
    }
}

TEST(Expfam, SubexpExamples) {
    EXPECT_DOUBLE_EQ(lbm::subexp_params(Family::gaussian(1.0), {-5, 5}).sigma_bar_sq, 1.0);
    EXPECT_DOUBLE_EQ(lbm::subexp_params(Family::bernoulli(), {-2, 2}).sigma_bar_sq, 0.25);
    EXPECT_NEAR(lbm::subexp_params(Family::poisson(), {-1, 1}).sigma_bar_sq, std::numbers::e, 1e-15);
    const auto sp = lbm::subexp_params(Family::bernoulli(), {-2, 2}, 0.5);
    EXPECT_DOUBLE_EQ(sp.kappa, 0.5);
    EXPECT_LE(sp.sigma_under_sq, sp.sigma_bar_sq);
    EXPECT_GT(sp.sigma_under_sq, 0.0);
    // A box on one side of zero: the variance is monotone, so endpoints decide.
    EXPECT_NEAR(lbm::subexp_params(Family::bernoulli(), {1, 3}).sigma_bar_sq,
                lbm::psi_second(Family::bernoulli(), 1.0), 1e-15);
}

TEST(Expfam, ArrayOverloadsMatchScalar) {
    Eigen::ArrayXXd a(2, 2);
    a << -1.0, 0.0, 0.5, 2.0;
    for (const Family& f : {Family::bernoulli(), Family::poisson(), Family::gaussian(3.0)}) {
        const Eigen::ArrayXXd p = lbm::psi(f, a), pp = lbm::psi_prime(f, a),
                              ps = lbm::psi_second(f, a);
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            EXPECT_EQ(p(i), lbm::psi(f, a(i)));
            EXPECT_EQ(pp(i), lbm::psi_prime(f, a(i)));
            EXPECT_EQ(ps(i), lbm::psi_second(f, a(i)));
        }
    }
}

// --- properties over random draws ---

TEST(ExpfamProperty, VariancePositiveAndKlAboveQuadraticFloor) {
    lbm::Rng rng(101);
    for (int trial = 0; trial < 100; ++trial) {
        const Family f = gen::family(rng);
        const double a = gen::uniform(rng, -4, 4), ap = gen::uniform(rng, -4, 4);
        const double lo_var = std::min(lbm::psi_second(f, a), lbm::psi_second(f, ap));
        EXPECT_GT(lbm::psi_second(f, a), 0.0);
        // psi'' is monotone or constant on the segment for these families, so
        // the endpoint minimum is the segment minimum.
        EXPECT_GE(lbm::kl(f, a, ap) + 1e-12, lo_var * (a - ap) * (a - ap) / 2.0);
    }
}

TEST(ExpfamProperty, InverseRoundTrip) {
    lbm::Rng rng(202);
    for (int trial = 0; trial < 1000; ++trial) {
        const Family f = gen::family(rng);
        const double a = gen::uniform(rng, -5, 5);
        const double back = lbm::psi_prime_inv(f, lbm::psi_prime(f, a));
        EXPECT_NEAR(back, a, 1e-12 * std::max(1.0, std::abs(a)));
    }
}

TEST(ExpfamProperty, KlMatchesDirectExpectation) {
    lbm::Rng rng(303);
    for (int trial = 0; trial < 100; ++trial) {
        const Family f = gen::family(rng);
        const double a = gen::uniform(rng, -3, 3), ap = gen::uniform(rng, -3, 3);
        EXPECT_NEAR(lbm::kl(f, a, ap), kl_by_summation(f, a, ap), 1e-9)
            << lbm::family_name(f) << " a=" << a << " a'=" << ap;
    }
}

TEST(ExpfamProperty, KlZeroOnlyOnDiagonal) {
    lbm::Rng rng(404);
    for (int trial = 0; trial < 200; ++trial) {
        const Family f = gen::family(rng);
        const double a = gen::uniform(rng, -3, 3);
        EXPECT_EQ(lbm::kl(f, a, a), 0.0);
        EXPECT_GT(lbm::kl(f, a, a + 0.01), 0.0);
    }
}

TEST(ExpfamProperty, LogDensityNormalizes) {
    // Bernoulli and Poisson pmfs sum to one under log_base + alpha x - psi.
    for (double a : {-1.5, 0.0, 0.7}) {
        double total = std::exp(lbm::log_density(Family::bernoulli(), 0.0, a)) +
                       std::exp(lbm::log_density(Family::bernoulli(), 1.0, a));
        EXPECT_NEAR(total, 1.0, 1e-14);
        total = 0.0;
        for (int k = 0; k < 200; ++k) total += std::exp(lbm::log_density(Family::poisson(), double(k), a));
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}
