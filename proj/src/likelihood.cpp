#include "lbm/likelihood.hpp"

#include <cmath>
#include <limits>

#include "lbm/assignments.hpp"

namespace lbm {

namespace {

void check_dims(const DataMatrix& x, const Assignment& a) {
    if (x.rows() != a.n() || x.cols() != a.d())
        throw Error(ErrorCode::DimensionMismatch, "data and assignment sizes differ");
}

}  // namespace

void LogSumExp::add(double v) {
    if (v == -std::numeric_limits<double>::infinity()) return;
    if (v <= max_) {
        sum_ += std::exp(v - max_);
    } else {
        sum_ = sum_ * std::exp(max_ - v) + 1.0;
        max_ = v;
    }
}

double LogSumExp::value() const {
    if (sum_ == 0.0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(sum_);
}

BlockStats block_stats(const DataMatrix& x, const Assignment& a, Eigen::Index g, Eigen::Index m) {
    check_dims(x, a);
    validate_assignment(a, g, m);
    BlockStats st;
    st.counts = group_counts(a.z, g) * group_counts(a.w, m).transpose();
    st.sums = Eigen::MatrixXd::Zero(g, m);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) st.sums(a.z[i], a.w[j]) += x(i, j);
    st.empty = st.counts.array() == 0.0;
    st.means = st.empty.select(0.0, st.sums.array() / st.counts.array()).matrix();
    return st;
}

double sum_log_base(const Family& family, const DataMatrix& x) {
    if (family.kind == Family::Kind::Bernoulli) return 0.0;
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) total += log_base(family, x(i, j));
    return total;
}

double complete_loglik(const DataMatrix& x, const Assignment& a, const LbmParams& params) {
    check_dims(x, a);
    if (params.alpha.rows() != params.g() || params.alpha.cols() != params.m())
        throw Error(ErrorCode::DimensionMismatch, "alpha must be g x m");
    validate_assignment(a, params.g(), params.m());
    const Eigen::MatrixXd psi_alpha = psi(params.family, params.alpha.array()).matrix();
    double total = 0.0;
    for (int k : a.z) total += std::log(params.pi(k));
    for (int l : a.w) total += std::log(params.rho(l));
    double cells = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const int k = a.z[i];
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const int l = a.w[j];
            cells += params.alpha(k, l) * x(i, j) - psi_alpha(k, l);
        }
    }
    return total + cells + sum_log_base(params.family, x);
}

LbmParams complete_mle(const DataMatrix& x, const Assignment& a, Eigen::Index g, Eigen::Index m,
                       const Family& family) {
    const BlockStats st = block_stats(x, a, g, m);
    const Eigen::VectorXd zc = group_counts(a.z, g), wc = group_counts(a.w, m);
    for (Eigen::Index k = 0; k < g; ++k)
        if (zc(k) == 0.0) throw Error(ErrorCode::EmptyGroup, "row group " + std::to_string(k + 1) + " is empty");
    for (Eigen::Index l = 0; l < m; ++l)
        if (wc(l) == 0.0) throw Error(ErrorCode::EmptyGroup, "column group " + std::to_string(l + 1) + " is empty");
    LbmParams out{family, zc / static_cast<double>(a.n()), wc / static_cast<double>(a.d()),
                  Eigen::MatrixXd(g, m)};
    for (Eigen::Index k = 0; k < g; ++k)
        for (Eigen::Index l = 0; l < m; ++l) {
            if (!mean_in_domain(family, st.means(k, l)))
                throw Error(ErrorCode::MeanOnBoundary, "block (" + std::to_string(k + 1) + ", " +
                                                           std::to_string(l + 1) +
                                                           ") mean is on the domain boundary");
            out.alpha(k, l) = psi_prime_inv(family, st.means(k, l));
        }
    return out;
}

double configuration_count(Eigen::Index n, Eigen::Index d, Eigen::Index g, Eigen::Index m) {
    return std::pow(static_cast<double>(g), static_cast<double>(n)) *
           std::pow(static_cast<double>(m), static_cast<double>(d));
}

double observed_loglik_bruteforce(const DataMatrix& x, const LbmParams& params, double cap) {
    params.validate();
    const Eigen::Index n = x.rows(), d = x.cols(), g = params.g(), m = params.m();
    if (n < 1 || d < 1) throw Error(ErrorCode::InvalidArgument, "empty data matrix");
    if (configuration_count(n, d, g, m) > cap)
        throw Error(ErrorCode::TooLarge, "g^n m^d exceeds the enumeration cap");
    const Eigen::MatrixXd psi_alpha = psi(params.family, params.alpha.array()).matrix();
    const Eigen::ArrayXd log_pi = params.pi.array().log();
    const Eigen::ArrayXd log_rho = params.rho.array().log();

    LogSumExp acc;
    std::vector<int> z(n, 0), w(d, 0);
    // col_term(j, l): contribution of column j placed in class l, given z.
    Eigen::MatrixXd col_term(d, m);
    for (;;) {
        double row_part = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) row_part += log_pi(z[i]);
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index l = 0; l < m; ++l) {
                double s = log_rho(l);
                for (Eigen::Index i = 0; i < n; ++i)
                    s += params.alpha(z[i], l) * x(i, j) - psi_alpha(z[i], l);
                col_term(j, l) = s;
            }
        std::fill(w.begin(), w.end(), 0);
        for (;;) {
            double v = row_part;
            for (Eigen::Index j = 0; j < d; ++j) v += col_term(j, w[j]);
            acc.add(v);
            Eigen::Index j = 0;
            while (j < d && ++w[j] == m) w[j++] = 0;
            if (j == d) break;
        }
        Eigen::Index i = 0;
        while (i < n && ++z[i] == g) z[i++] = 0;
        if (i == n) break;
    }
    return acc.value() + sum_log_base(params.family, x);
}

double equivalent_assignment_sum(const DataMatrix& x, const LbmParams& params,
                                 const Assignment& a_star, std::size_t cap) {
    LogSumExp acc;
    for_each_perm_pair(params.g(), params.m(), cap, [&](const PermPair& p) {
        acc.add(complete_loglik(x, permute_assignment(a_star, p), params));
    });
    return acc.value();
}

}  // namespace lbm
