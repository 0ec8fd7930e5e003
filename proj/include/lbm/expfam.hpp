#pragma once

// One-dimensional natural exponential families
//
//     phi(x, alpha) = b(x) exp(alpha x - psi(alpha))
//
// for the three observation models supported by the block model:
//
//   Bernoulli   psi(a) = log(1 + e^a),  x in {0, 1}
//   Poisson     psi(a) = e^a,           x in {0, 1, 2, ...}
//   Gaussian    psi(a) = a^2 v / 2,     x real, known variance v
//
// For the Gaussian family the sufficient statistic is x and the natural
// parameter is alpha = mu / v, so (psi')^{-1}(mean) = mean / v.
//
// Scalar functions are templated on the floating-point type; the Eigen
// overloads accept any array expression and evaluate coefficient-wise.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numbers>
#include <random>

#include <Eigen/Core>

#include "lbm/errors.hpp"

namespace lbm {

struct Family {
    enum class Kind { Bernoulli, Poisson, Gaussian };

    Kind kind = Kind::Bernoulli;
    double variance = 1.0;  // Gaussian only

    static Family bernoulli() { return {Kind::Bernoulli, 1.0}; }
    static Family poisson() { return {Kind::Poisson, 1.0}; }
    static Family gaussian(double variance) {
        if (!(variance > 0.0) || !std::isfinite(variance))
            throw Error(ErrorCode::InvalidArgument, "Gaussian variance must be positive");
        return {Kind::Gaussian, variance};
    }

    bool operator==(const Family&) const = default;
};

const char* family_name(const Family& f) noexcept;

/// Sub-exponential parameters of centered observations over an alpha box:
/// sigma_bar_sq bounds the variance, kappa is the MGF margin (b = 1/kappa).
struct SubexpParams {
    double sigma_bar_sq = 0.0;
    double sigma_under_sq = 0.0;
    double kappa = 1.0;
};

struct AlphaBox {
    double lo = -5.0;
    double hi = 5.0;

    bool contains(double a) const { return a >= lo && a <= hi; }
};

namespace detail {

template <typename Scalar>
Scalar checked(Scalar v, const char* what) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, what);
    return v;
}

template <typename Scalar>
Scalar softplus(Scalar a) {
    return a > Scalar(0) ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a));
}

template <typename Scalar>
Scalar sigmoid(Scalar a) {
    if (a >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-a));
    const Scalar e = std::exp(a);
    return e / (Scalar(1) + e);
}

}  // namespace detail

template <std::floating_point Scalar>
Scalar psi(const Family& f, Scalar alpha) {
    switch (f.kind) {
        case Family::Kind::Bernoulli: return detail::checked(detail::softplus(alpha), "psi");
        case Family::Kind::Poisson: return detail::checked(std::exp(alpha), "psi");
        case Family::Kind::Gaussian:
            return detail::checked(alpha * alpha * Scalar(f.variance) / Scalar(2), "psi");
    }
    return Scalar(0);
}

template <std::floating_point Scalar>
Scalar psi_prime(const Family& f, Scalar alpha) {
    switch (f.kind) {
        case Family::Kind::Bernoulli: return detail::sigmoid(alpha);
        case Family::Kind::Poisson: return detail::checked(std::exp(alpha), "psi_prime");
        case Family::Kind::Gaussian: return alpha * Scalar(f.variance);
    }
    return Scalar(0);
}

template <std::floating_point Scalar>
Scalar psi_second(const Family& f, Scalar alpha) {
    switch (f.kind) {
        case Family::Kind::Bernoulli: {
            const Scalar p = detail::sigmoid(alpha);
            return p * (Scalar(1) - p);
        }
        case Family::Kind::Poisson: return detail::checked(std::exp(alpha), "psi_second");
        case Family::Kind::Gaussian: return Scalar(f.variance);
    }
    return Scalar(0);
}

template <std::floating_point Scalar>
bool mean_in_domain(const Family& f, Scalar mean) {
    switch (f.kind) {
        case Family::Kind::Bernoulli: return mean > Scalar(0) && mean < Scalar(1);
        case Family::Kind::Poisson: return mean > Scalar(0) && std::isfinite(mean);
        case Family::Kind::Gaussian: return std::isfinite(mean);
    }
    return false;
}

/// Inverse mean map. Throws DomainError on or outside the mean-domain boundary.
template <std::floating_point Scalar>
Scalar psi_prime_inv(const Family& f, Scalar mean) {
    if (!mean_in_domain(f, mean))
        throw Error(ErrorCode::DomainError, "mean outside the open mean domain");
    switch (f.kind) {
        case Family::Kind::Bernoulli: return std::log(mean) - std::log1p(-mean);
        case Family::Kind::Poisson: return std::log(mean);
        case Family::Kind::Gaussian: return mean / Scalar(f.variance);
    }
    return Scalar(0);
}

/// log b(x), so that log phi(x, a) = log_base(x) + a x - psi(a) is normalized.
template <std::floating_point Scalar>
Scalar log_base(const Family& f, Scalar x) {
    switch (f.kind) {
        case Family::Kind::Bernoulli: return Scalar(0);
        case Family::Kind::Poisson: return -std::lgamma(x + Scalar(1));
        case Family::Kind::Gaussian: {
            const Scalar v(f.variance);
            return -x * x / (Scalar(2) * v) -
                   Scalar(0.5) * std::log(Scalar(2) * std::numbers::pi_v<Scalar> * v);
        }
    }
    return Scalar(0);
}

template <std::floating_point Scalar>
Scalar log_density(const Family& f, Scalar x, Scalar alpha) {
    return log_base(f, x) + alpha * x - psi(f, alpha);
}

/// KL(phi(., a) || phi(., a')) = psi'(a)(a - a') + psi(a') - psi(a).
template <std::floating_point Scalar>
Scalar kl(const Family& f, Scalar alpha, Scalar alpha_prime) {
    if (alpha == alpha_prime) return Scalar(0);
    if (f.kind == Family::Kind::Gaussian) {
        const Scalar diff = alpha - alpha_prime;
        return diff * diff * Scalar(f.variance) / Scalar(2);
    }
    const Scalar v =
        psi_prime(f, alpha) * (alpha - alpha_prime) + psi(f, alpha_prime) - psi(f, alpha);
    // rounding can push a tiny positive divergence below zero
    return std::max(v, Scalar(0));
}

template <typename URBG>
double sample(const Family& f, double alpha, URBG& rng) {
    switch (f.kind) {
        case Family::Kind::Bernoulli: {
            std::bernoulli_distribution dist(detail::sigmoid(alpha));
            return dist(rng) ? 1.0 : 0.0;
        }
        case Family::Kind::Poisson: {
            std::poisson_distribution<long long> dist(std::exp(alpha));
            return static_cast<double>(dist(rng));
        }
        case Family::Kind::Gaussian: {
            std::normal_distribution<double> dist(alpha * f.variance, std::sqrt(f.variance));
            return dist(rng);
        }
    }
    return 0.0;
}

/// Variance bounds of X_alpha over the box. psi'' is monotone or constant for
/// the built-in families except Bernoulli, whose maximum sits at alpha = 0.
inline SubexpParams subexp_params(const Family& f, const AlphaBox& box, double kappa = 1.0) {
    if (!(box.lo <= box.hi)) throw Error(ErrorCode::InvalidArgument, "empty alpha box");
    if (!(kappa > 0.0)) throw Error(ErrorCode::InvalidArgument, "kappa must be positive");
    double hi = std::max(psi_second(f, box.lo), psi_second(f, box.hi));
    double lo = std::min(psi_second(f, box.lo), psi_second(f, box.hi));
    if (f.kind == Family::Kind::Bernoulli && box.lo <= 0.0 && box.hi >= 0.0)
        hi = std::max(hi, psi_second(f, 0.0));
    return {hi, lo, kappa};
}

// Coefficient-wise overloads for Eigen expressions.

template <typename Derived>
auto psi(const Family& f, const Eigen::ArrayBase<Derived>& alpha) {
    using S = typename Derived::Scalar;
    return alpha.unaryExpr([f](S a) { return psi(f, a); }).eval();
}

template <typename Derived>
auto psi_prime(const Family& f, const Eigen::ArrayBase<Derived>& alpha) {
    using S = typename Derived::Scalar;
    return alpha.unaryExpr([f](S a) { return psi_prime(f, a); }).eval();
}

template <typename Derived>
auto psi_second(const Family& f, const Eigen::ArrayBase<Derived>& alpha) {
    using S = typename Derived::Scalar;
    return alpha.unaryExpr([f](S a) { return psi_second(f, a); }).eval();
}

template <typename Derived>
auto psi_prime_inv(const Family& f, const Eigen::ArrayBase<Derived>& mean) {
    using S = typename Derived::Scalar;
    return mean.unaryExpr([f](S m) { return psi_prime_inv(f, m); }).eval();
}

template <typename Derived>
auto log_base(const Family& f, const Eigen::ArrayBase<Derived>& x) {
    using S = typename Derived::Scalar;
    return x.unaryExpr([f](S v) { return log_base(f, v); }).eval();
}

inline const char* family_name(const Family& f) noexcept {
    switch (f.kind) {
        case Family::Kind::Bernoulli: return "bernoulli";
        case Family::Kind::Poisson: return "poisson";
        case Family::Kind::Gaussian: return "gaussian";
    }
    return "unknown";
}

}  // namespace lbm
