#include "lbm/profile.hpp"

#include <cmath>

#include "lbm/assignments.hpp"
#include "lbm/likelihood.hpp"

namespace lbm {

namespace {

void check_shape(const ContrastContext& ctx, const Assignment& a) {
    if (a.n() != ctx.x.rows() || a.d() != ctx.x.cols())
        throw Error(ErrorCode::DimensionMismatch, "assignment does not match the data");
}

void require_nonempty(const Assignment& a, Eigen::Index g, Eigen::Index m) {
    const Eigen::VectorXd zc = group_counts(a.z, g), wc = group_counts(a.w, m);
    if ((zc.array() == 0.0).any()) throw Error(ErrorCode::EmptyGroup, "empty row group");
    if ((wc.array() == 0.0).any()) throw Error(ErrorCode::EmptyGroup, "empty column group");
}

// sum_kl [alpha_kl S_kl - N_kl psi(alpha_kl)] for block sums S and counts N.
double block_term(const Family& f, const Eigen::MatrixXd& alpha, const BlockStats& st) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < alpha.rows(); ++k)
        for (Eigen::Index l = 0; l < alpha.cols(); ++l)
            if (st.counts(k, l) > 0.0)
                total += alpha(k, l) * st.sums(k, l) - st.counts(k, l) * psi(f, alpha(k, l));
    return total;
}

}  // namespace

ContrastContext make_context(DataMatrix x, Assignment a_star, LbmParams params_star) {
    params_star.validate();
    if (a_star.n() != x.rows() || a_star.d() != x.cols())
        throw Error(ErrorCode::DimensionMismatch, "reference labels do not match the data");
    validate_assignment(a_star, params_star.g(), params_star.m());
    Eigen::MatrixXd s = psi_prime(params_star.family, params_star.alpha.array()).matrix();
    return {std::move(x), std::move(a_star), std::move(params_star), std::move(s)};
}

double f_nd(const ContrastContext& ctx, const LbmParams& params, const Assignment& a) {
    check_shape(ctx, a);
    if (params.g() != ctx.params_star.g() || params.m() != ctx.params_star.m() ||
        params.alpha.rows() != params.g() || params.alpha.cols() != params.m())
        throw Error(ErrorCode::DimensionMismatch, "parameters do not match the context");
    const Eigen::Index g = params.g(), m = params.m();
    const Family& f = ctx.params_star.family;
    return block_term(f, params.alpha, block_stats(ctx.x, a, g, m)) -
           block_term(f, ctx.params_star.alpha, block_stats(ctx.x, ctx.a_star, g, m));
}

double g_expected(const ContrastContext& ctx, const LbmParams& params, const Assignment& a) {
    check_shape(ctx, a);
    const Eigen::Index g = ctx.params_star.g(), m = ctx.params_star.m();
    const ConfusionPair r = confusion(a, ctx.a_star, g, m);
    const Family& f = ctx.params_star.family;
    double total = 0.0;
    for (Eigen::Index k = 0; k < g; ++k)
        for (Eigen::Index kp = 0; kp < g; ++kp) {
            if (r.rg(k, kp) == 0.0) continue;
            for (Eigen::Index l = 0; l < m; ++l)
                for (Eigen::Index lp = 0; lp < m; ++lp) {
                    if (r.rm(l, lp) == 0.0) continue;
                    total += r.rg(k, kp) * r.rm(l, lp) *
                             kl(f, ctx.params_star.alpha(k, l), params.alpha(kp, lp));
                }
        }
    const double nd = static_cast<double>(a.n()) * static_cast<double>(a.d());
    return -nd * total;
}

Eigen::MatrixXd alpha_hat(const ContrastContext& ctx, const Assignment& a) {
    check_shape(ctx, a);
    const LbmParams mle = complete_mle(ctx.x, a, ctx.params_star.g(), ctx.params_star.m(),
                                       ctx.params_star.family);
    return mle.alpha;
}

namespace {

// Integer contingency tables ng(k*, k) and nm(l*, l) between a* and a.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> contingency(const ContrastContext& ctx, const Assignment& a) {
    check_shape(ctx, a);
    const Eigen::Index g = ctx.params_star.g(), m = ctx.params_star.m();
    validate_assignment(a, g, m);
    require_nonempty(a, g, m);
    Eigen::MatrixXd ng = Eigen::MatrixXd::Zero(g, g), nm = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t i = 0; i < a.z.size(); ++i) ng(ctx.a_star.z[i], a.z[i]) += 1.0;
    for (std::size_t j = 0; j < a.w.size(); ++j) nm(ctx.a_star.w[j], a.w[j]) += 1.0;
    return {ng, nm};
}

}  // namespace

Eigen::MatrixXd x_bar(const ContrastContext& ctx, const Assignment& a) {
    const auto [ng, nm] = contingency(ctx, a);
    const Eigen::Index g = ng.rows(), m = nm.rows();
    // Each entry is a convex combination of S* entries with weights
    // N_g(k', k) N_m(l', l) / (z_{+k} w_{+l}).
    const Eigen::VectorXd zc = ng.colwise().sum().transpose(), wc = nm.colwise().sum().transpose();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g, m);
    for (Eigen::Index k = 0; k < g; ++k)
        for (Eigen::Index l = 0; l < m; ++l) {
            const double total = zc(k) * wc(l);
            double v = 0.0;
            for (Eigen::Index kp = 0; kp < g; ++kp)
                for (Eigen::Index lp = 0; lp < m; ++lp) {
                    const double w = ng(kp, k) * nm(lp, l);
                    if (w > 0.0) v += (w / total) * ctx.s_star(kp, lp);
                }
            out(k, l) = v;
        }
    return out;
}

Eigen::MatrixXd alpha_bar(const ContrastContext& ctx, const Assignment& a) {
    const auto [ng, nm] = contingency(ctx, a);
    Eigen::MatrixXd out = psi_prime_inv(ctx.params_star.family, x_bar(ctx, a).array()).matrix();
    // A block fed by a single reference block takes that block's alpha* as is,
    // skipping the psi' round trip so that relabelings of a* give exact zeros.
    for (Eigen::Index k = 0; k < out.rows(); ++k)
        for (Eigen::Index l = 0; l < out.cols(); ++l) {
            Eigen::Index src_k = -1, src_l = -1;
            int sources = 0;
            for (Eigen::Index kp = 0; kp < ng.rows(); ++kp)
                for (Eigen::Index lp = 0; lp < nm.rows(); ++lp)
                    if (ng(kp, k) * nm(lp, l) > 0.0) {
                        ++sources;
                        src_k = kp;
                        src_l = lp;
                    }
            if (sources == 1) out(k, l) = ctx.params_star.alpha(src_k, src_l);
        }
    return out;
}

ProfileMaximizers profile_maximizers(const ContrastContext& ctx, const Assignment& a) {
    return {alpha_hat(ctx, a), alpha_bar(ctx, a)};
}

double lambda_profile(const ContrastContext& ctx, const Assignment& a) {
    LbmParams p = ctx.params_star;
    p.alpha = alpha_hat(ctx, a);
    return f_nd(ctx, p, a);
}

double lambda_tilde(const ContrastContext& ctx, const Assignment& a) {
    LbmParams p = ctx.params_star;
    p.alpha = alpha_bar(ctx, a);
    return g_expected(ctx, p, a);
}

double separability_bound(const ContrastContext& ctx, const Assignment& a, double c) {
    const EquivDistance dist =
        distance_up_to_equiv(a, ctx.a_star, ctx.params_star.g(), ctx.params_star.m());
    const double delta = class_distinctness(ctx.params_star);
    const double n = static_cast<double>(a.n()), d = static_cast<double>(a.d());
    const double weighted = d * static_cast<double>(dist.dist_z) + n * static_cast<double>(dist.dist_w);
    if (weighted == 0.0) return 0.0;
    return -(c * delta / 4.0) * weighted;
}

namespace {

double entropy_of_counts(const Eigen::VectorXd& counts, double n) {
    double h = 0.0;
    for (Eigen::Index k = 0; k < counts.size(); ++k)
        if (counts(k) > 0.0) {
            const double p = counts(k) / n;
            h -= p * std::log(p);
        }
    return h;
}

}  // namespace

double entropy_ratio_lhs(const std::vector<int>& z, const std::vector<int>& z_star, Eigen::Index g) {
    if (z.size() != z_star.size() || z.empty())
        throw Error(ErrorCode::DimensionMismatch, "label vectors differ in size");
    const double n = static_cast<double>(z.size());
    return n * std::abs(entropy_of_counts(group_counts(z, g), n) -
                        entropy_of_counts(group_counts(z_star, g), n));
}

double entropy_ratio_bound(const std::vector<int>& z, const std::vector<int>& z_star,
                           Eigen::Index g, double c) {
    if (!(c > 0.0 && c < 0.5)) throw Error(ErrorCode::InvalidArgument, "c must lie in (0, 1/2)");
    if (z.size() != z_star.size() || z.empty())
        throw Error(ErrorCode::DimensionMismatch, "label vectors differ in size");
    const double n = static_cast<double>(z.size());
    for (const auto* labels : {&z, &z_star}) {
        for (int k : *labels)
            if (k < 0 || k >= g) throw Error(ErrorCode::InvalidArgument, "label out of range");
        if (group_counts(*labels, g).minCoeff() < c * n)
            throw Error(ErrorCode::NotRegular, "labels are not c-regular");
    }
    const double mc = 2.0 * std::log((1.0 - c) / c);
    return mc * static_cast<double>(hamming_one_hot(z, z_star));
}

double log_bernstein_block_bound(Eigen::Index g, Eigen::Index m, double n, double d, double c,
                                 double eps, const SubexpParams& subexp) {
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
    const double combinatorial = (n + 1.0) * std::log(static_cast<double>(g)) +
                                 (d + 1.0) * std::log(static_cast<double>(m));
    const double exponent =
        n * d * c * c * eps * eps / (8.0 * (subexp.sigma_bar_sq + eps / subexp.kappa));
    return combinatorial - exponent;
}

double bernstein_block_bound(Eigen::Index g, Eigen::Index m, double n, double d, double c,
                             double eps, const SubexpParams& subexp) {
    return std::exp(log_bernstein_block_bound(g, m, n, d, c, eps, subexp));
}

SubexpSupBound subexp_sup_bound(double n_vars, double m_cap, double v0_sq, double b, double t) {
    if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "t must be non-negative");
    const double denom = 2.0 * (8.0 * m_cap * m_cap * v0_sq + 2.0 * std::sqrt(2.0) * m_cap * b * t);
    const double tail = (t == 0.0) ? 1.0 : std::exp(-t * t / denom);
    return {tail, m_cap * std::sqrt(v0_sq) * std::sqrt(n_vars)};
}

}  // namespace lbm
