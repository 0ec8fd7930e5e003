#include "lbm/varem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lbm/likelihood.hpp"
#include "lbm/parallel.hpp"

namespace lbm {

namespace {

constexpr double kMinSoftMass = 1e-12;

void check_rows(const Eigen::MatrixXd& r, const char* name) {
    if (r.rows() < 1 || r.cols() < 1) throw Error(ErrorCode::InvalidArgument, std::string(name) + " is empty");
    if (!r.allFinite() || (r.array() < 0.0).any() || (r.array() > 1.0).any())
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " has entries outside [0, 1]");
    for (Eigen::Index i = 0; i < r.rows(); ++i)
        if (std::abs(r.row(i).sum() - 1.0) > 1e-10)
            throw Error(ErrorCode::InvalidArgument, std::string(name) + " rows must sum to one");
}

double neg_entropy(const Eigen::MatrixXd& r) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double v = r.data()[i];
        if (v > 0.0) s += v * std::log(v);
    }
    return s;
}

// Rows of log-weights -> normalized probabilities, max-shifted per row.
Eigen::MatrixXd softmax_rows(Eigen::MatrixXd logw) {
    for (Eigen::Index i = 0; i < logw.rows(); ++i) {
        const double mx = logw.row(i).maxCoeff();
        logw.row(i) = (logw.row(i).array() - mx).exp();
        logw.row(i) /= logw.row(i).sum();
    }
    return logw;
}

// sum_k r_ik log p_k, skipping zero responsibilities.
double expected_log_prop(const Eigen::MatrixXd& r, const Eigen::VectorXd& p) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < r.rows(); ++i)
        for (Eigen::Index k = 0; k < r.cols(); ++k)
            if (r(i, k) > 0.0) s += r(i, k) * std::log(p(k));
    return s;
}

void check_q_shape(const DataMatrix& x, const MeanFieldQ& q, const LbmParams* params) {
    if (q.tau.rows() != x.rows() || q.nu.rows() != x.cols())
        throw Error(ErrorCode::DimensionMismatch, "responsibilities do not match the data");
    if (params && (q.tau.cols() != params->g() || q.nu.cols() != params->m() ||
                   params->alpha.rows() != params->g() || params->alpha.cols() != params->m()))
        throw Error(ErrorCode::DimensionMismatch, "responsibilities do not match (g, m)");
}

Eigen::MatrixXd random_rows(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd r(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index k = 0; k < cols; ++k) r(i, k) = 1e-3 + unif(rng);
        r.row(i) /= r.row(i).sum();
    }
    return r;
}

// 1-D k-means on item marginal means, started from quantiles, then softened
// with random noise so restarts differ.
Eigen::MatrixXd marginal_rows(const Eigen::VectorXd& score, Eigen::Index groups, Rng& rng) {
    const Eigen::Index n = score.size();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return score(a) < score(b); });
    Eigen::VectorXd centers(groups);
    for (Eigen::Index k = 0; k < groups; ++k)
        centers(k) = score(order[std::min(n - 1, (2 * k + 1) * n / (2 * groups))]);
    std::vector<int> lab(n, 0);
    for (int it = 0; it < 50; ++it) {
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            for (Eigen::Index k = 1; k < groups; ++k)
                if (std::abs(score(i) - centers(k)) < std::abs(score(i) - centers(best)))
                    best = static_cast<int>(k);
            lab[i] = best;
        }
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(groups), cnt = Eigen::VectorXd::Zero(groups);
        for (Eigen::Index i = 0; i < n; ++i) {
            sum(lab[i]) += score(i);
            cnt(lab[i]) += 1.0;
        }
        for (Eigen::Index k = 0; k < groups; ++k)
            if (cnt(k) > 0.0) centers(k) = sum(k) / cnt(k);
    }
    Eigen::MatrixXd r = 0.2 * random_rows(n, groups, rng);
    for (Eigen::Index i = 0; i < n; ++i) r(i, lab[i]) += 0.8;
    return r;
}

}  // namespace

void MeanFieldQ::validate() const {
    check_rows(tau, "tau");
    check_rows(nu, "nu");
}

MeanFieldQ MeanFieldQ::point_mass(const Assignment& a, Eigen::Index g, Eigen::Index m) {
    validate_assignment(a, g, m);
    return {one_hot(a.z, g), one_hot(a.w, m)};
}

Assignment MeanFieldQ::map_labels() const {
    Assignment a;
    a.z.resize(tau.rows());
    a.w.resize(nu.rows());
    Eigen::Index arg = 0;
    for (Eigen::Index i = 0; i < tau.rows(); ++i) {
        tau.row(i).maxCoeff(&arg);
        a.z[i] = static_cast<int>(arg);
    }
    for (Eigen::Index j = 0; j < nu.rows(); ++j) {
        nu.row(j).maxCoeff(&arg);
        a.w[j] = static_cast<int>(arg);
    }
    return a;
}

void FitConfig::validate() const {
    if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be at least 1");
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
    if (restarts < 1) throw Error(ErrorCode::InvalidArgument, "restarts must be at least 1");
    if (!(smoothing_eps >= 0.0 && smoothing_eps <= 0.01))
        throw Error(ErrorCode::InvalidArgument, "smoothing_eps must lie in [0, 0.01]");
    if (threads < 1) throw Error(ErrorCode::InvalidArgument, "threads must be at least 1");
    if (init == InitKind::Given && !initial_q)
        throw Error(ErrorCode::InvalidArgument, "init 'given' needs initial responsibilities");
}

double elbo(const DataMatrix& x, const MeanFieldQ& q, const LbmParams& params) {
    check_q_shape(x, q, &params);
    const Family& f = params.family;
    const Eigen::MatrixXd s = q.tau.transpose() * x * q.nu;
    const Eigen::VectorXd tk = q.tau.colwise().sum().transpose();
    const Eigen::VectorXd nl = q.nu.colwise().sum().transpose();
    double cells = 0.0;
    for (Eigen::Index k = 0; k < params.g(); ++k)
        for (Eigen::Index l = 0; l < params.m(); ++l) {
            const double mass = tk(k) * nl(l);
            if (mass > 0.0) cells += params.alpha(k, l) * s(k, l) - mass * psi(f, params.alpha(k, l));
        }
    return expected_log_prop(q.tau, params.pi) + expected_log_prop(q.nu, params.rho) + cells +
           sum_log_base(f, x) - neg_entropy(q.tau) - neg_entropy(q.nu);
}

MeanFieldQ ve_step(const DataMatrix& x, const MeanFieldQ& q, const LbmParams& params) {
    check_q_shape(x, q, &params);
    const Eigen::MatrixXd psi_alpha = psi(params.family, params.alpha.array()).matrix();
    const Eigen::RowVectorXd log_pi = params.pi.array().log().matrix().transpose();
    const Eigen::RowVectorXd log_rho = params.rho.array().log().matrix().transpose();

    MeanFieldQ out;
    {
        const Eigen::VectorXd nl = q.nu.colwise().sum().transpose();
        Eigen::MatrixXd logw = (x * q.nu) * params.alpha.transpose();
        logw.rowwise() += log_pi - (psi_alpha * nl).transpose();
        out.tau = softmax_rows(std::move(logw));
    }
    {
        const Eigen::VectorXd tk = out.tau.colwise().sum().transpose();
        Eigen::MatrixXd logw = (x.transpose() * out.tau) * params.alpha;
        logw.rowwise() += log_rho - (psi_alpha.transpose() * tk).transpose();
        out.nu = softmax_rows(std::move(logw));
    }
    return out;
}

LbmParams m_step(const DataMatrix& x, const MeanFieldQ& q, const Family& family) {
    check_q_shape(x, q, nullptr);
    const Eigen::Index g = q.tau.cols(), m = q.nu.cols();
    const Eigen::VectorXd tk = q.tau.colwise().sum().transpose();
    const Eigen::VectorXd nl = q.nu.colwise().sum().transpose();
    if (tk.minCoeff() < kMinSoftMass || nl.minCoeff() < kMinSoftMass)
        throw Error(ErrorCode::DegenerateResponsibilities, "a group has no soft mass");
    const Eigen::MatrixXd s = q.tau.transpose() * x * q.nu;
    LbmParams out{family, tk / tk.sum(), nl / nl.sum(), Eigen::MatrixXd(g, m)};
    for (Eigen::Index k = 0; k < g; ++k)
        for (Eigen::Index l = 0; l < m; ++l) {
            double mean = s(k, l) / (tk(k) * nl(l));
            switch (family.kind) {
                case Family::Kind::Bernoulli:
                    mean = std::clamp(mean, kMeanClamp, 1.0 - kMeanClamp);
                    break;
                case Family::Kind::Poisson: mean = std::max(mean, kMeanClamp); break;
                case Family::Kind::Gaussian: break;
            }
            out.alpha(k, l) = psi_prime_inv(family, mean);
        }
    return out;
}

MeanFieldQ initial_q(const DataMatrix& x, Eigen::Index g, Eigen::Index m, InitKind kind, Rng& rng) {
    if (kind == InitKind::Marginal)
        return {marginal_rows(x.rowwise().mean(), g, rng),
                marginal_rows(x.colwise().mean().transpose(), m, rng)};
    MeanFieldQ q;
    q.tau = random_rows(x.rows(), g, rng);
    q.nu = random_rows(x.cols(), m, rng);
    return q;
}

namespace {

struct RunOutcome {
    bool ok = false;
    LbmParams params;
    MeanFieldQ q;
    std::vector<double> trace;
    bool converged = false;
};

MeanFieldQ smooth(MeanFieldQ q, double eps) {
    if (eps <= 0.0) return q;
    q.tau = (1.0 - eps) * q.tau.array() + eps / static_cast<double>(q.tau.cols());
    q.nu = (1.0 - eps) * q.nu.array() + eps / static_cast<double>(q.nu.cols());
    return q;
}

RunOutcome run_once(const DataMatrix& x, const Family& family, const FitConfig& config,
                    MeanFieldQ q) {
    RunOutcome r;
    try {
        LbmParams theta = m_step(x, q, family);
        double prev = elbo(x, q, theta);
        r.trace.push_back(prev);
        for (int it = 0; it < config.max_iter; ++it) {
            q = smooth(ve_step(x, q, theta), config.smoothing_eps);
            theta = m_step(x, q, family);
            const double cur = elbo(x, q, theta);
            r.trace.push_back(cur);
            const bool done = cur - prev < config.tol;
            prev = cur;
            if (done) {
                r.converged = true;
                break;
            }
        }
        r.params = std::move(theta);
        r.q = std::move(q);
        r.ok = true;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateResponsibilities) throw;
    }
    return r;
}

}  // namespace

FitResult fit_vem(const DataMatrix& x, Eigen::Index g, Eigen::Index m, const Family& family,
                  const FitConfig& config, std::uint64_t seed) {
    config.validate();
    validate_data(family, x);
    if (g < 1 || m < 1) throw Error(ErrorCode::InvalidArgument, "g and m must be positive");
    const int runs = config.init == InitKind::Given ? 1 : config.restarts;
    std::vector<RunOutcome> outcomes(runs);
    parallel_for(static_cast<std::size_t>(runs), config.threads, [&](std::size_t r) {
        MeanFieldQ q0;
        if (config.init == InitKind::Given) {
            q0 = *config.initial_q;
            check_q_shape(x, q0, nullptr);
            if (q0.tau.cols() != g || q0.nu.cols() != m)
                throw Error(ErrorCode::DimensionMismatch, "initial responsibilities do not match (g, m)");
            q0.validate();
        } else {
            Rng rng = make_rng(seed, 0x5645u, r);
            q0 = initial_q(x, g, m, config.init, rng);
        }
        outcomes[r] = run_once(x, family, config, std::move(q0));
    });

    FitResult result;
    int best = -1;
    for (int r = 0; r < runs; ++r) {
        if (!outcomes[r].ok) {
            result.restart_elbos.push_back(std::numeric_limits<double>::quiet_NaN());
            ++result.failed_restarts;
            continue;
        }
        const double final_elbo = outcomes[r].trace.back();
        result.restart_elbos.push_back(final_elbo);
        if (best < 0 || final_elbo > outcomes[best].trace.back()) best = r;
    }
    if (best < 0) throw Error(ErrorCode::DegenerateResponsibilities, "every restart degenerated");
    RunOutcome& win = outcomes[best];
    result.params = std::move(win.params);
    result.q = std::move(win.q);
    result.elbo_trace = std::move(win.trace);
    result.converged = win.converged;
    result.best_restart = best;
    result.iterations = static_cast<int>(result.elbo_trace.size()) - 1;
    return result;
}

}  // namespace lbm
