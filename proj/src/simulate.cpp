#include "lbm/simulate.hpp"

#include <cmath>
#include <random>

namespace lbm {

void validate_assignment(const Assignment& a, Eigen::Index g, Eigen::Index m) {
    if (a.z.empty() || a.w.empty()) throw Error(ErrorCode::InvalidArgument, "empty assignment");
    for (int k : a.z)
        if (k < 0 || k >= g) throw Error(ErrorCode::InvalidArgument, "row label out of range");
    for (int l : a.w)
        if (l < 0 || l >= m) throw Error(ErrorCode::InvalidArgument, "column label out of range");
}

void validate_data(const Family& family, const DataMatrix& x) {
    if (x.rows() < 1 || x.cols() < 1) throw Error(ErrorCode::InvalidArgument, "empty data matrix");
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double v = x.data()[i];
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite observation");
        switch (family.kind) {
            case Family::Kind::Bernoulli:
                if (v != 0.0 && v != 1.0)
                    throw Error(ErrorCode::InvalidArgument, "Bernoulli data must be 0/1");
                break;
            case Family::Kind::Poisson:
                if (v < 0.0 || v != std::floor(v))
                    throw Error(ErrorCode::InvalidArgument, "Poisson data must be counts");
                break;
            case Family::Kind::Gaussian: break;
        }
    }
}

Eigen::VectorXd group_counts(const std::vector<int>& labels, Eigen::Index groups) {
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(groups);
    for (int k : labels) counts(k) += 1.0;
    return counts;
}

Eigen::MatrixXd one_hot(const std::vector<int>& labels, Eigen::Index groups) {
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), groups);
    for (std::size_t i = 0; i < labels.size(); ++i) h(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    return h;
}

Assignment sample_labels(const LbmParams& params, Eigen::Index n, Eigen::Index d, Rng& rng) {
    params.validate();
    if (n < 1 || d < 1) throw Error(ErrorCode::InvalidArgument, "n and d must be positive");
    std::discrete_distribution<int> row_dist(params.pi.data(), params.pi.data() + params.g());
    std::discrete_distribution<int> col_dist(params.rho.data(), params.rho.data() + params.m());
    Assignment a;
    a.z.resize(n);
    a.w.resize(d);
    for (auto& k : a.z) k = row_dist(rng);
    for (auto& l : a.w) l = col_dist(rng);
    return a;
}

std::pair<DataMatrix, Assignment> sample_lbm(const LbmParams& params, Eigen::Index n,
                                             Eigen::Index d, Rng& rng) {
    Assignment a = sample_labels(params, n, d, rng);
    DataMatrix x(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            x(i, j) = sample(params.family, params.alpha(a.z[i], a.w[j]), rng);
    return {std::move(x), std::move(a)};
}

bool is_c_regular(const Assignment& a, Eigen::Index g, Eigen::Index m, double c) {
    const Eigen::VectorXd zc = group_counts(a.z, g);
    const Eigen::VectorXd wc = group_counts(a.w, m);
    const double n = static_cast<double>(a.n()), d = static_cast<double>(a.d());
    return zc.minCoeff() >= c * n && wc.minCoeff() >= c * d;
}

double regularity_failure_bound(Eigen::Index g, Eigen::Index m, double n, double d, double c) {
    return static_cast<double>(g) * std::exp(-n * c * c / 2.0) +
           static_cast<double>(m) * std::exp(-d * c * c / 2.0);
}

}  // namespace lbm
