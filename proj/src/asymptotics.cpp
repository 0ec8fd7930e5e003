#include "lbm/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "lbm/assignments.hpp"
#include "lbm/likelihood.hpp"
#include "lbm/parallel.hpp"
#include "lbm/profile.hpp"

namespace lbm {

namespace {

// Seed streams, one per experiment, so experiments sharing a master seed do
// not reuse draws.
enum Stream : std::uint64_t {
    kMleStream = 11,
    kCompareStream = 12,
    kFitStream = 13,
    kLanStream = 14,
    kConcentrationStream = 15,
    kRegularityStream = 16,
    kSeparabilityStream = 17,
    kLocalStream = 18,
    kOracleStream = 19,
    kMonotoneStream = 20,
};

void require_replicates(int r) {
    if (r < 1) throw Error(ErrorCode::InvalidArgument, "replicate count must be positive");
}

void require_sizes(Eigen::Index n, Eigen::Index d) {
    if (n < 1 || d < 1) throw Error(ErrorCode::InvalidArgument, "n and d must be positive");
}

Eigen::RowVectorXd flatten_row_major(const Eigen::MatrixXd& a) {
    Eigen::RowVectorXd out(a.size());
    for (Eigen::Index k = 0; k < a.rows(); ++k)
        for (Eigen::Index l = 0; l < a.cols(); ++l) out(k * a.cols() + l) = a(k, l);
    return out;
}

Eigen::VectorXd project_sum_zero(Eigen::VectorXd v) {
    v.array() -= v.mean();
    return v;
}

Eigen::MatrixXd random_responsibilities(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    // Sharpness varies per matrix so both diffuse and nearly hard Q are covered.
    const double sharp = 4.0 * unif(rng);
    Eigen::MatrixXd r(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index k = 0; k < cols; ++k) r(i, k) = sharp * normal(rng);
        r.row(i).array() -= r.row(i).maxCoeff();
        r.row(i) = r.row(i).array().exp().matrix();
        r.row(i) /= r.row(i).sum();
    }
    return r;
}

}  // namespace

AsymptoticCovariances theoretical_covariances(const LbmParams& params) {
    params.validate();
    AsymptoticCovariances c;
    c.sigma_pi = Eigen::MatrixXd(params.pi.asDiagonal()) - params.pi * params.pi.transpose();
    c.sigma_rho = Eigen::MatrixXd(params.rho.asDiagonal()) - params.rho * params.rho.transpose();
    const Eigen::ArrayXXd v = psi_second(params.family, params.alpha.array());
    c.sigma_alpha = ((params.pi * params.rho.transpose()).array() * v).inverse().matrix();
    return c;
}

Eigen::Vector3d scaled_gaps(const LbmParams& reference, const LbmParams& other, Eigen::Index n,
                            Eigen::Index d) {
    if (reference.g() != other.g() || reference.m() != other.m())
        throw Error(ErrorCode::DimensionMismatch, "parameter shapes differ");
    const double nn = static_cast<double>(n), dd = static_cast<double>(d);
    return {std::sqrt(nn) * (reference.pi - other.pi).cwiseAbs().maxCoeff(),
            std::sqrt(dd) * (reference.rho - other.rho).cwiseAbs().maxCoeff(),
            std::sqrt(nn * dd) * (reference.alpha - other.alpha).cwiseAbs().maxCoeff()};
}

Alignment align_to_reference(const LbmParams& fitted, const LbmParams& reference, Eigen::Index n,
                             Eigen::Index d, const MeanFieldQ* q, const Assignment* a_star) {
    const Eigen::Index g = fitted.g(), m = fitted.m();
    Alignment out;
    out.identity_gaps = scaled_gaps(reference, fitted, n, d);
    bool enumerable = true;
    try {
        perm_pair_count(g, m);
    } catch (const Error&) {
        enumerable = false;
    }
    if (enumerable) {
        double best = std::numeric_limits<double>::infinity();
        for_each_perm_pair(g, m, kPermutationCap, [&](const PermPair& p) {
            const Eigen::Vector3d gaps = scaled_gaps(reference, permute(fitted, p), n, d);
            if (gaps.maxCoeff() < best) {
                best = gaps.maxCoeff();
                out.perm = p;
                out.gaps = gaps;
            }
        });
        return out;
    }
    if (!q || !a_star)
        throw Error(ErrorCode::TooLarge, "alignment needs responsibilities above the permutation cap");
    out.perm.s = max_trace_permutation(soft_confusion(q->tau, a_star->z, g));
    out.perm.t = max_trace_permutation(soft_confusion(q->nu, a_star->w, m));
    out.gaps = scaled_gaps(reference, permute(fitted, out.perm), n, d);
    if (out.gaps.maxCoeff() > out.identity_gaps.maxCoeff()) {
        out.perm = PermPair::identity(g, m);
        out.gaps = out.identity_gaps;
    }
    return out;
}

namespace {

struct ReplicateRow {
    bool mle_ok = false;
    bool fit_ok = false;
    Eigen::RowVectorXd pi_err, rho_err, alpha_err;
    Alignment align;
    double row_err = 0.0, col_err = 0.0;
};

ReplicationReport assemble(const LbmParams& params, const std::vector<ReplicateRow>& rows,
                           bool with_fit) {
    ReplicationReport rep;
    rep.attempted = static_cast<int>(rows.size());
    std::vector<const ReplicateRow*> ok;
    for (const auto& r : rows) {
        if (!r.mle_ok) {
            ++rep.failures;
            continue;
        }
        if (with_fit && !r.fit_ok) {
            ++rep.fit_failures;
            continue;
        }
        ok.push_back(&r);
    }
    const Eigen::Index count = static_cast<Eigen::Index>(ok.size());
    const Eigen::Index g = params.g(), m = params.m();
    rep.replicate_count = static_cast<int>(count);
    rep.scaled_pi_errors.resize(count, g);
    rep.scaled_rho_errors.resize(count, m);
    rep.scaled_alpha_errors.resize(count, g * m);
    if (with_fit) {
        rep.var_vs_mle_gaps.resize(count, 3);
        rep.identity_gaps.resize(count, 3);
        rep.row_error_rate.resize(count);
        rep.col_error_rate.resize(count);
    }
    for (Eigen::Index i = 0; i < count; ++i) {
        const ReplicateRow& r = *ok[i];
        rep.scaled_pi_errors.row(i) = r.pi_err;
        rep.scaled_rho_errors.row(i) = r.rho_err;
        rep.scaled_alpha_errors.row(i) = r.alpha_err;
        if (with_fit) {
            rep.alignment_perms.push_back(r.align.perm);
            rep.var_vs_mle_gaps.row(i) = r.align.gaps.transpose();
            rep.identity_gaps.row(i) = r.align.identity_gaps.transpose();
            rep.row_error_rate(i) = r.row_err;
            rep.col_error_rate(i) = r.col_err;
        }
    }
    return rep;
}

// Records the true-label MLE errors of one draw; false on empty or boundary blocks.
bool record_mle(const DataMatrix& x, const Assignment& a, const LbmParams& params,
                ReplicateRow& row, LbmParams* mle_out) {
    const double n = static_cast<double>(a.n()), d = static_cast<double>(a.d());
    try {
        LbmParams mle = complete_mle(x, a, params.g(), params.m(), params.family);
        row.pi_err = std::sqrt(n) * (mle.pi - params.pi).transpose();
        row.rho_err = std::sqrt(d) * (mle.rho - params.rho).transpose();
        row.alpha_err = std::sqrt(n * d) * flatten_row_major(mle.alpha - params.alpha);
        row.mle_ok = true;
        if (mle_out) *mle_out = std::move(mle);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyGroup && e.code() != ErrorCode::MeanOnBoundary) throw;
    }
    return row.mle_ok;
}

}  // namespace

ReplicationReport run_complete_mle_replications(const LbmParams& params, Eigen::Index n,
                                                Eigen::Index d, int replicates,
                                                std::uint64_t seed, int threads) {
    params.validate();
    require_sizes(n, d);
    require_replicates(replicates);
    std::vector<ReplicateRow> rows(replicates);
    parallel_for(rows.size(), threads, [&](std::size_t r) {
        Rng rng = make_rng(seed, kMleStream, r);
        const auto [x, a] = sample_lbm(params, n, d, rng);
        record_mle(x, a, params, rows[r], nullptr);
    });
    return assemble(params, rows, false);
}

ReplicationReport run_estimator_comparison(const LbmParams& params, Eigen::Index n,
                                           Eigen::Index d, int replicates,
                                           const FitConfig& config, std::uint64_t seed,
                                           int threads) {
    params.validate();
    require_sizes(n, d);
    require_replicates(replicates);
    config.validate();
    FitConfig inner = config;
    inner.threads = 1;
    std::vector<ReplicateRow> rows(replicates);
    parallel_for(rows.size(), threads, [&](std::size_t r) {
        Rng rng = make_rng(seed, kCompareStream, r);
        const auto [x, a] = sample_lbm(params, n, d, rng);
        LbmParams mle;
        if (!record_mle(x, a, params, rows[r], &mle)) return;
        FitResult fit;
        try {
            fit = fit_vem(x, params.g(), params.m(), params.family, inner,
                          derive_seed(seed, kFitStream, r));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateResponsibilities) throw;
            return;
        }
        rows[r].fit_ok = true;
        rows[r].align = align_to_reference(fit.params, mle, n, d, &fit.q, &a);
        const EquivDistance dist = distance_up_to_equiv(fit.q.map_labels(), a, params.g(), params.m());
        rows[r].row_err = static_cast<double>(dist.dist_z) / (2.0 * static_cast<double>(n));
        rows[r].col_err = static_cast<double>(dist.dist_w) / (2.0 * static_cast<double>(d));
    });
    ReplicationReport rep = assemble(params, rows, true);
    rep.symmetry_count = enumerate_symmetries(params).size();
    return rep;
}

LbmParams perturbed_params(const LbmParams& params, const Perturbation& p, Eigen::Index n,
                           Eigen::Index d, const AlphaBox& box) {
    const Eigen::Index g = params.g(), m = params.m();
    if (p.s.size() != g || p.t.size() != m || p.u.rows() != g || p.u.cols() != m)
        throw Error(ErrorCode::DimensionMismatch, "perturbation does not match (g, m)");
    const double nn = static_cast<double>(n), dd = static_cast<double>(d);
    LbmParams h = params;
    h.pi += p.s / std::sqrt(nn);
    h.rho += p.t / std::sqrt(dd);
    h.alpha += p.u / std::sqrt(nn * dd);
    const auto open_unit = [](const Eigen::VectorXd& v) {
        return (v.array() > 0.0).all() && (v.array() < 1.0).all();
    };
    const bool props_ok = (g == 1 || open_unit(h.pi)) && (m == 1 || open_unit(h.rho));
    bool alpha_ok = true;
    for (Eigen::Index i = 0; i < h.alpha.size(); ++i)
        alpha_ok = alpha_ok && box.contains(h.alpha.data()[i]);
    if (!props_ok || !alpha_ok)
        throw Error(ErrorCode::PerturbationOutOfBox, "perturbed parameters leave the parameter set");
    return h;
}

namespace {

// psi(a + h) - psi(a) without cancellation.
double psi_increment(const Family& f, double a, double h) {
    switch (f.kind) {
        case Family::Kind::Bernoulli: return std::log1p(psi_prime(f, a) * std::expm1(h));
        case Family::Kind::Poisson: return std::exp(a) * std::expm1(h);
        case Family::Kind::Gaussian: return f.variance * h * (2.0 * a + h) / 2.0;
    }
    return 0.0;
}

}  // namespace

LanTerms lan_terms(const DataMatrix& x, const Assignment& a, const LbmParams& params,
                   const Perturbation& p, const AlphaBox& box) {
    const Eigen::Index n = x.rows(), d = x.cols(), g = params.g(), m = params.m();
    perturbed_params(params, p, n, d, box);
    const BlockStats st = block_stats(x, a, g, m);
    const Eigen::VectorXd zc = group_counts(a.z, g), wc = group_counts(a.w, m);
    const double nn = static_cast<double>(n), dd = static_cast<double>(d);
    LanTerms out;
    for (Eigen::Index k = 0; k < g; ++k) {
        const double r = p.s(k) / (std::sqrt(nn) * params.pi(k));
        out.exact += zc(k) * std::log1p(r);
        out.linear += zc(k) * r;
        out.quadratic -= 0.5 * zc(k) * r * r;
    }
    for (Eigen::Index l = 0; l < m; ++l) {
        const double r = p.t(l) / (std::sqrt(dd) * params.rho(l));
        out.exact += wc(l) * std::log1p(r);
        out.linear += wc(l) * r;
        out.quadratic -= 0.5 * wc(l) * r * r;
    }
    double alpha_lin = 0.0, alpha_quad = 0.0;
    for (Eigen::Index k = 0; k < g; ++k)
        for (Eigen::Index l = 0; l < m; ++l) {
            const double alpha = params.alpha(k, l);
            const double h = p.u(k, l) / std::sqrt(nn * dd);
            const double cnt = st.counts(k, l), sum = st.sums(k, l);
            out.alpha_exact += h * sum - cnt * psi_increment(params.family, alpha, h);
            alpha_lin += h * (sum - cnt * psi_prime(params.family, alpha));
            alpha_quad -= 0.5 * h * h * cnt * psi_second(params.family, alpha);
        }
    out.exact += out.alpha_exact;
    out.linear += alpha_lin;
    out.quadratic += alpha_quad;
    out.alpha_expansion = alpha_lin + alpha_quad;
    return out;
}

LanReport lan_check(const LbmParams& params, Eigen::Index n, Eigen::Index d, int replicates,
                    double perturbation_scale, std::uint64_t seed, int threads,
                    const AlphaBox& box) {
    params.validate();
    require_sizes(n, d);
    require_replicates(replicates);
    if (!(perturbation_scale >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "perturbation scale must be non-negative");
    const Eigen::Index g = params.g(), m = params.m();
    LanReport rep;
    rep.remainder.resize(replicates);
    rep.alpha_remainder.resize(replicates);
    parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
        Rng rng = make_rng(seed, kLanStream, r);
        const auto [x, a] = sample_lbm(params, n, d, rng);
        std::uniform_real_distribution<double> unif(-perturbation_scale, perturbation_scale);
        Perturbation p{Eigen::VectorXd(g), Eigen::VectorXd(m), Eigen::MatrixXd(g, m)};
        for (Eigen::Index k = 0; k < g; ++k) p.s(k) = unif(rng);
        for (Eigen::Index l = 0; l < m; ++l) p.t(l) = unif(rng);
        for (Eigen::Index k = 0; k < g; ++k)
            for (Eigen::Index l = 0; l < m; ++l) p.u(k, l) = unif(rng);
        p.s = project_sum_zero(p.s);
        p.t = project_sum_zero(p.t);
        const LanTerms t = lan_terms(x, a, params, p, box);
        rep.remainder(static_cast<Eigen::Index>(r)) = t.remainder();
        rep.alpha_remainder(static_cast<Eigen::Index>(r)) = t.alpha_remainder();
    });
    rep.median_abs_remainder = stats::median(Eigen::VectorXd(rep.remainder.cwiseAbs()));
    rep.median_abs_alpha_remainder = stats::median(Eigen::VectorXd(rep.alpha_remainder.cwiseAbs()));
    rep.max_abs_alpha_remainder = rep.alpha_remainder.cwiseAbs().maxCoeff();
    return rep;
}

double binomial_se(double p, int replicates) {
    return std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(replicates));
}

Assignment sample_regular_assignment(Eigen::Index n, Eigen::Index d, Eigen::Index g,
                                     Eigen::Index m, double level, Rng& rng) {
    if (level * static_cast<double>(g) > 1.0 || level * static_cast<double>(m) > 1.0)
        throw Error(ErrorCode::InvalidArgument, "regularity level is unattainable");
    std::uniform_int_distribution<int> row_lab(0, static_cast<int>(g) - 1);
    std::uniform_int_distribution<int> col_lab(0, static_cast<int>(m) - 1);
    Assignment a;
    a.z.resize(n);
    a.w.resize(d);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        for (auto& k : a.z) k = row_lab(rng);
        for (auto& l : a.w) l = col_lab(rng);
        if (is_c_regular(a, g, m, level)) return a;
    }
    throw Error(ErrorCode::NotRegular, "could not draw a regular assignment");
}

ConcentrationReport concentration_audit(const LbmParams& params, const AlphaBox& box,
                                        Eigen::Index n, Eigen::Index d, double c, int replicates,
                                        const ConcentrationConfig& config, std::uint64_t seed,
                                        int threads) {
    params.validate();
    require_sizes(n, d);
    require_replicates(replicates);
    for (Eigen::Index i = 0; i < params.alpha.size(); ++i)
        if (!box.contains(params.alpha.data()[i]))
            throw Error(ErrorCode::InvalidArgument, "alpha lies outside the box");
    if (config.eps_grid.empty()) throw Error(ErrorCode::InvalidArgument, "empty eps grid");
    const Eigen::Index g = params.g(), m = params.m();
    ConcentrationReport rep;
    rep.replicates = replicates;
    rep.subexp = subexp_params(params.family, box, config.kappa);

    std::vector<double> block_stat(replicates), z_stat(replicates);
    parallel_for(static_cast<std::size_t>(replicates), threads, [&](std::size_t r) {
        Rng rng = make_rng(seed, kConcentrationStream, r);
        auto [x, a] = sample_lbm(params, n, d, rng);
        double z = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < d; ++j)
                z += std::abs(x(i, j) - psi_prime(params.family, params.alpha(a.z[i], a.w[j])));
        z_stat[r] = config.m_cap * z;

        const ContrastContext ctx = make_context(std::move(x), a, params);
        const auto deviation = [&](const Assignment& b) {
            const BlockStats st = block_stats(ctx.x, b, g, m);
            return (st.means - x_bar(ctx, b)).cwiseAbs().maxCoeff();
        };
        double worst = 0.0;
        if (is_c_regular(a, g, m, c / 2.0)) worst = deviation(a);
        for (int k = 0; k < config.assignments_per_replicate; ++k)
            worst = std::max(worst, deviation(sample_regular_assignment(n, d, g, m, c / 2.0, rng)));
        block_stat[r] = worst;
    });

    const double nvars = static_cast<double>(n) * static_cast<double>(d);
    const double v0_sq = nvars * rep.subexp.sigma_bar_sq;
    const double b = 1.0 / rep.subexp.kappa;
    rep.z_mean_bound = subexp_sup_bound(nvars, config.m_cap, v0_sq, b, 0.0).mean_bound;
    rep.z_mean = std::accumulate(z_stat.begin(), z_stat.end(), 0.0) / replicates;
    for (double eps : config.eps_grid) {
        rep.eps.push_back(eps);
        const auto exceed = std::count_if(block_stat.begin(), block_stat.end(),
                                          [eps](double s) { return s > eps; });
        rep.block_freq.push_back(static_cast<double>(exceed) / replicates);
        const double lb = log_bernstein_block_bound(g, m, static_cast<double>(n),
                                                    static_cast<double>(d), c, eps, rep.subexp);
        rep.block_log_bound.push_back(lb);
        rep.block_bound.push_back(lb >= 0.0 ? 1.0 : std::exp(lb));

        const double t = eps * config.m_cap * nvars;
        rep.z_threshold.push_back(t);
        const auto z_exceed =
            std::count_if(z_stat.begin(), z_stat.end(),
                          [&](double z) { return z - rep.z_mean_bound >= t; });
        rep.z_freq.push_back(static_cast<double>(z_exceed) / replicates);
        rep.z_bound.push_back(
            std::min(1.0, subexp_sup_bound(nvars, config.m_cap, v0_sq, b, t).tail));
    }
    return rep;
}

RegularityReport regularity_experiment(const LbmParams& params, Eigen::Index n, Eigen::Index d,
                                       double c, int replicates, std::uint64_t seed,
                                       int threads) {
    params.validate();
    require_sizes(n, d);
    require_replicates(replicates);
    std::vector<char> irregular(replicates, 0);
    parallel_for(irregular.size(), threads, [&](std::size_t r) {
        Rng rng = make_rng(seed, kRegularityStream, r);
        const Assignment a = sample_labels(params, n, d, rng);
        irregular[r] = is_c_regular(a, params.g(), params.m(), c / 2.0) ? 0 : 1;
    });
    RegularityReport rep;
    rep.replicates = replicates;
    rep.irregular = static_cast<int>(std::count(irregular.begin(), irregular.end(), 1));
    rep.freq = static_cast<double>(rep.irregular) / replicates;
    rep.bound = regularity_failure_bound(params.g(), params.m(), static_cast<double>(n),
                                         static_cast<double>(d), c);
    return rep;
}

Assignment sample_local_assignment(const Assignment& a_star, Eigen::Index g, Eigen::Index m,
                                   double radius, double level, Rng& rng) {
    const Eigen::Index n = a_star.n(), d = a_star.d();
    const auto max_rows = static_cast<Eigen::Index>(std::floor(radius * static_cast<double>(n) / 2.0));
    const auto max_cols = static_cast<Eigen::Index>(std::floor(radius * static_cast<double>(d) / 2.0));
    const auto relabel = [&rng](std::vector<int>& labels, Eigen::Index count, Eigen::Index groups) {
        if (groups < 2 || count == 0) return;
        std::vector<int> idx(labels.size());
        std::iota(idx.begin(), idx.end(), 0);
        for (Eigen::Index i = 0; i < count; ++i) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), idx.size() - 1);
            std::swap(idx[static_cast<std::size_t>(i)], idx[pick(rng)]);
            std::uniform_int_distribution<int> shift(1, static_cast<int>(groups) - 1);
            int& lab = labels[idx[static_cast<std::size_t>(i)]];
            lab = (lab + shift(rng)) % static_cast<int>(groups);
        }
    };
    for (int attempt = 0; attempt < 100000; ++attempt) {
        Assignment a = a_star;
        std::uniform_int_distribution<Eigen::Index> rows_count(0, max_rows), cols_count(0, max_cols);
        relabel(a.z, rows_count(rng), g);
        relabel(a.w, cols_count(rng), m);
        if (is_c_regular(a, g, m, level)) return a;
    }
    throw Error(ErrorCode::NotRegular, "could not draw a regular local assignment");
}

SeparabilityReport separability_experiment(const LbmParams& params, Eigen::Index n,
                                           Eigen::Index d, double c, double radius, int contexts,
                                           int samples_per_context, std::uint64_t seed,
                                           int threads) {
    params.validate();
    require_sizes(n, d);
    require_replicates(contexts);
    require_replicates(samples_per_context);
    const Eigen::Index g = params.g(), m = params.m();
    std::vector<double> margin(static_cast<std::size_t>(contexts) * samples_per_context);
    parallel_for(static_cast<std::size_t>(contexts), threads, [&](std::size_t ci) {
        Rng rng = make_rng(seed, kSeparabilityStream, ci);
        std::optional<ContrastContext> ctx;
        for (int attempt = 0; attempt < 10000 && !ctx; ++attempt) {
            auto [x, a] = sample_lbm(params, n, d, rng);
            if (is_c_regular(a, g, m, c / 2.0)) ctx = make_context(std::move(x), std::move(a), params);
        }
        if (!ctx) throw Error(ErrorCode::NotRegular, "no c/2-regular context drawn");
        for (int s = 0; s < samples_per_context; ++s) {
            const std::size_t slot = ci * static_cast<std::size_t>(samples_per_context) + s;
            Rng local = make_rng(seed, kLocalStream, slot);
            const Assignment a = sample_local_assignment(ctx->a_star, g, m, radius, c / 2.0, local);
            margin[slot] = separability_bound(*ctx, a, c) - lambda_tilde(*ctx, a);
        }
    });
    SeparabilityReport rep;
    rep.contexts = contexts;
    rep.samples = static_cast<int>(margin.size());
    rep.violations = static_cast<int>(std::count_if(margin.begin(), margin.end(),
                                                    [](double v) { return v < 0.0; }));
    rep.min_margin = *std::min_element(margin.begin(), margin.end());
    rep.delta = class_distinctness(params);
    return rep;
}

LbmParams random_params(const Family& family, Eigen::Index g, Eigen::Index m, Rng& rng) {
    std::uniform_real_distribution<double> prop(0.2, 1.0), alpha(-2.0, 2.0);
    LbmParams p{family, Eigen::VectorXd(g), Eigen::VectorXd(m), Eigen::MatrixXd(g, m)};
    for (Eigen::Index k = 0; k < g; ++k) p.pi(k) = prop(rng);
    for (Eigen::Index l = 0; l < m; ++l) p.rho(l) = prop(rng);
    p.pi /= p.pi.sum();
    p.rho /= p.rho.sum();
    for (Eigen::Index k = 0; k < g; ++k)
        for (Eigen::Index l = 0; l < m; ++l) p.alpha(k, l) = alpha(rng);
    return p;
}

namespace {

const Family& sweep_family(std::size_t i) {
    static const Family families[] = {Family::bernoulli(), Family::poisson(), Family::gaussian(1.0)};
    return families[i % 3];
}

struct OracleRow {
    int q_violations = 0;
    double max_q_excess = -std::numeric_limits<double>::infinity();
    bool fit_violation = false;
    double fit_excess = -std::numeric_limits<double>::infinity();
    double single_column_gap = 0.0;
};

}  // namespace

OracleReport oracle_experiment(int instances, int q_per_instance, Eigen::Index n, Eigen::Index d,
                               Eigen::Index g, Eigen::Index m, std::uint64_t seed, int threads) {
    require_replicates(instances);
    require_replicates(q_per_instance);
    require_sizes(n, d);
    std::vector<OracleRow> rows(instances);
    FitConfig fc;
    fc.restarts = 3;
    fc.tol = 1e-12;
    fc.max_iter = 2000;
    parallel_for(rows.size(), threads, [&](std::size_t i) {
        Rng rng = make_rng(seed, kOracleStream, i);
        const Family& family = sweep_family(i);
        OracleRow& row = rows[i];

        const LbmParams theta = random_params(family, g, m, rng);
        const auto [x, a] = sample_lbm(theta, n, d, rng);
        const double oracle = observed_loglik_bruteforce(x, theta);
        for (int qi = 0; qi < q_per_instance; ++qi) {
            const MeanFieldQ q{random_responsibilities(n, g, rng), random_responsibilities(d, m, rng)};
            const double excess = elbo(x, q, theta) - oracle;
            row.max_q_excess = std::max(row.max_q_excess, excess);
            if (excess > 0.0) ++row.q_violations;
        }
        const FitResult fit = fit_vem(x, g, m, family, fc, derive_seed(seed, kOracleStream, i));
        row.fit_excess = fit.elbo_trace.back() - observed_loglik_bruteforce(x, fit.params);
        row.fit_violation = row.fit_excess > 1e-8;

        // One column group: the row update is the exact posterior, so the best
        // ELBO at the fitted parameters equals the observed log-likelihood.
        const LbmParams theta1 = random_params(family, g, 1, rng);
        const auto [x1, a1] = sample_lbm(theta1, n, d, rng);
        const FitResult fit1 = fit_vem(x1, g, 1, family, fc, derive_seed(seed, kOracleStream + 100, i));
        const MeanFieldQ q1 = ve_step(x1, fit1.q, fit1.params);
        row.single_column_gap =
            std::abs(elbo(x1, q1, fit1.params) - observed_loglik_bruteforce(x1, fit1.params));
    });
    OracleReport rep;
    rep.instances = instances;
    rep.single_column_instances = instances;
    rep.max_q_excess = -std::numeric_limits<double>::infinity();
    rep.max_fit_excess = -std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        rep.q_checks += q_per_instance;
        rep.q_violations += r.q_violations;
        rep.max_q_excess = std::max(rep.max_q_excess, r.max_q_excess);
        rep.fit_violations += r.fit_violation ? 1 : 0;
        rep.max_fit_excess = std::max(rep.max_fit_excess, r.fit_excess);
        rep.max_single_column_gap = std::max(rep.max_single_column_gap, r.single_column_gap);
    }
    return rep;
}

namespace {

struct MonotoneRow {
    int steps = 0;
    int violations = 0;
    double worst = 0.0;
};

void check_step(MonotoneRow& row, double before, double after) {
    constexpr double kSlack = 1e-8;
    ++row.steps;
    row.worst = std::max(row.worst, before - after);
    if (after < before - kSlack) ++row.violations;
}

}  // namespace

MonotonicityReport monotonicity_sweep(int runs, std::uint64_t seed, int threads) {
    require_replicates(runs);
    struct Size {
        Eigen::Index n, d, g, m;
    };
    static const Size sizes[] = {{8, 6, 2, 2}, {20, 15, 2, 3}, {40, 30, 3, 2}, {60, 60, 2, 2}, {30, 50, 4, 3}};
    std::vector<MonotoneRow> rows(runs);
    parallel_for(rows.size(), threads, [&](std::size_t r) {
        Rng rng = make_rng(seed, kMonotoneStream, r);
        const Family& family = sweep_family(r);
        const Size& sz = sizes[(r / 3) % std::size(sizes)];
        const LbmParams theta = random_params(family, sz.g, sz.m, rng);
        const auto [x, a] = sample_lbm(theta, sz.n, sz.d, rng);
        MonotoneRow& row = rows[r];

        MeanFieldQ q = initial_q(x, sz.g, sz.m, InitKind::Random, rng);
        try {
            LbmParams th = m_step(x, q, family);
            double cur = elbo(x, q, th);
            for (int it = 0; it < 100; ++it) {
                q = ve_step(x, q, th);
                const double after_ve = elbo(x, q, th);
                check_step(row, cur, after_ve);
                th = m_step(x, q, family);
                cur = elbo(x, q, th);
                check_step(row, after_ve, cur);
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateResponsibilities) throw;
        }

        FitConfig fc;
        fc.restarts = 1;
        fc.tol = 1e-12;
        fc.max_iter = 300;
        try {
            const FitResult fit = fit_vem(x, sz.g, sz.m, family, fc, rng());
            for (std::size_t i = 1; i < fit.elbo_trace.size(); ++i)
                check_step(row, fit.elbo_trace[i - 1], fit.elbo_trace[i]);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateResponsibilities) throw;
        }
    });
    MonotonicityReport rep;
    rep.runs = runs;
    for (const auto& r : rows) {
        rep.checked_steps += r.steps;
        rep.violations += r.violations;
        rep.worst_drop = std::max(rep.worst_drop, r.worst);
    }
    return rep;
}

namespace stats {

Eigen::VectorXd column_means(const Eigen::MatrixXd& samples) {
    return samples.colwise().mean().transpose();
}

Eigen::MatrixXd covariance(const Eigen::MatrixXd& samples) {
    if (samples.rows() < 2) throw Error(ErrorCode::InvalidArgument, "covariance needs two samples");
    const Eigen::MatrixXd centered = samples.rowwise() - samples.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
}

Eigen::MatrixXd correlation(const Eigen::MatrixXd& samples) {
    const Eigen::MatrixXd cov = covariance(samples);
    const Eigen::VectorXd sd = cov.diagonal().cwiseSqrt();
    return cov.array() / (sd * sd.transpose()).array();
}

namespace {

Eigen::VectorXd central_moment(const Eigen::MatrixXd& samples, int order) {
    const Eigen::MatrixXd centered = samples.rowwise() - samples.colwise().mean();
    return centered.array().pow(order).colwise().mean().transpose();
}

}  // namespace

Eigen::VectorXd skewness(const Eigen::MatrixXd& samples) {
    const Eigen::ArrayXd m2 = central_moment(samples, 2).array();
    return (central_moment(samples, 3).array() / m2.pow(1.5)).matrix();
}

Eigen::VectorXd excess_kurtosis(const Eigen::MatrixXd& samples) {
    const Eigen::ArrayXd m2 = central_moment(samples, 2).array();
    return (central_moment(samples, 4).array() / m2.square() - 3.0).matrix();
}

double relative_frobenius(const Eigen::MatrixXd& est, const Eigen::MatrixXd& target) {
    if (est.rows() != target.rows() || est.cols() != target.cols())
        throw Error(ErrorCode::DimensionMismatch, "relative_frobenius: shapes differ");
    return (est - target).norm() / target.norm();
}

double median(std::vector<double> v) {
    if (v.empty()) throw Error(ErrorCode::InvalidArgument, "median of an empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double median(const Eigen::VectorXd& v) {
    return median(std::vector<double>(v.data(), v.data() + v.size()));
}

}  // namespace stats

}  // namespace lbm
