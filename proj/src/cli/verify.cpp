#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "config.hpp"
#include "lbm/asymptotics.hpp"
#include "lbm/cli.hpp"

namespace lbm::cli {

namespace {

class Criteria {
   public:
    void add(const std::string& name, bool hard, bool pass, double value, double threshold) {
        Json c;
        c["name"] = name;
        c["hard"] = hard;
        c["pass"] = pass;
        c["value"] = value;
        c["threshold"] = threshold;
        list_.push_back(std::move(c));
        if (hard && !pass) all_hard_pass_ = false;
    }
    Json list() const { return list_; }
    bool pass() const { return all_hard_pass_; }

   private:
    Json list_ = Json::array();
    bool all_hard_pass_ = true;
};

Json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

double max_abs_offdiag(const Eigen::MatrixXd& m) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            if (i != j) worst = std::max(worst, std::abs(m(i, j)));
    return worst;
}

// Largest |mean| / sqrt(var / R) over the columns of a sample matrix.
double max_mean_zscore(const Eigen::MatrixXd& samples) {
    const Eigen::VectorXd mean = stats::column_means(samples);
    const Eigen::VectorXd var = stats::covariance(samples).diagonal();
    const double r = static_cast<double>(samples.rows());
    double worst = 0.0;
    for (Eigen::Index i = 0; i < mean.size(); ++i)
        if (var(i) > 0.0) worst = std::max(worst, std::abs(mean(i)) / std::sqrt(var(i) / r));
    return worst;
}

Json normality(const Json& cfg, std::uint64_t seed, int threads, Criteria& crit, Json& params) {
    check_keys(cfg, {"check", "seed", "theta", "n", "d", "replicates"}, "normality config");
    const LbmParams theta = get_theta(cfg);
    const long n = get_positive_int(cfg, "n", 400), d = get_positive_int(cfg, "d", 400);
    const int reps = static_cast<int>(get_positive_int(cfg, "replicates", 2000));
    params = {{"theta", io::params_to_json(theta)}, {"n", n}, {"d", d}, {"replicates", reps}};

    const ReplicationReport rep = run_complete_mle_replications(theta, n, d, reps, seed, threads);
    const AsymptoticCovariances th = theoretical_covariances(theta);
    const Eigen::Index g = theta.g(), m = theta.m();
    Eigen::VectorXd alpha_target(g * m);
    for (Eigen::Index k = 0; k < g; ++k)
        for (Eigen::Index l = 0; l < m; ++l) alpha_target(k * m + l) = th.sigma_alpha(k, l);

    const Eigen::MatrixXd cov_pi = stats::covariance(rep.scaled_pi_errors);
    const Eigen::MatrixXd cov_rho = stats::covariance(rep.scaled_rho_errors);
    const Eigen::MatrixXd cov_alpha = stats::covariance(rep.scaled_alpha_errors);
    const Eigen::VectorXd var_alpha = cov_alpha.diagonal();
    const double rr = static_cast<double>(rep.replicate_count);

    crit.add("failure_rate", true, rep.failures <= 0.01 * reps,
             static_cast<double>(rep.failures) / reps, 0.01);
    crit.add("cov_pi_relative_frobenius", true,
             stats::relative_frobenius(cov_pi, th.sigma_pi) <= 0.15,
             stats::relative_frobenius(cov_pi, th.sigma_pi), 0.15);
    crit.add("cov_rho_relative_frobenius", true,
             stats::relative_frobenius(cov_rho, th.sigma_rho) <= 0.15,
             stats::relative_frobenius(cov_rho, th.sigma_rho), 0.15);
    const double alpha_rel = stats::relative_frobenius(var_alpha, alpha_target);
    crit.add("var_alpha_relative_error", true, alpha_rel <= 0.15, alpha_rel, 0.15);
    for (const auto& [name, samples] :
         {std::pair<const char*, const Eigen::MatrixXd*>{"mean_pi_zscore", &rep.scaled_pi_errors},
          {"mean_rho_zscore", &rep.scaled_rho_errors},
          {"mean_alpha_zscore", &rep.scaled_alpha_errors}}) {
        const double z = max_mean_zscore(*samples);
        crit.add(name, true, z <= 4.0, z, 4.0);
    }
    const double corr = g * m > 1 ? max_abs_offdiag(stats::correlation(rep.scaled_alpha_errors)) : 0.0;
    crit.add("alpha_max_abs_correlation", true, corr < 4.0 / std::sqrt(rr), corr, 4.0 / std::sqrt(rr));
    const Eigen::VectorXd skew = stats::skewness(rep.scaled_alpha_errors);
    const Eigen::VectorXd kurt = stats::excess_kurtosis(rep.scaled_alpha_errors);
    const double skew_band = 5.0 * std::sqrt(6.0 / rr), kurt_band = 5.0 * std::sqrt(24.0 / rr);
    crit.add("alpha_skewness", false, skew.cwiseAbs().maxCoeff() <= skew_band,
             skew.cwiseAbs().maxCoeff(), skew_band);
    crit.add("alpha_excess_kurtosis", false, kurt.cwiseAbs().maxCoeff() <= kurt_band,
             kurt.cwiseAbs().maxCoeff(), kurt_band);

    return {{"replicates_used", rep.replicate_count},
            {"failures", rep.failures},
            {"sigma_pi", io::matrix_to_json(th.sigma_pi)},
            {"empirical_cov_pi", io::matrix_to_json(cov_pi)},
            {"sigma_rho", io::matrix_to_json(th.sigma_rho)},
            {"empirical_cov_rho", io::matrix_to_json(cov_rho)},
            {"sigma_alpha", vec_json(alpha_target)},
            {"empirical_var_alpha", vec_json(var_alpha)},
            {"alpha_correlation", io::matrix_to_json(stats::correlation(rep.scaled_alpha_errors))},
            {"alpha_skewness", vec_json(skew)},
            {"alpha_excess_kurtosis", vec_json(kurt)}};
}

Json lan(const Json& cfg, std::uint64_t seed, int threads, Criteria& crit, Json& params) {
    check_keys(cfg, {"check", "seed", "theta", "sizes", "replicates", "scale"}, "lan config");
    const LbmParams theta = get_theta(cfg);
    const std::vector<long> sizes = get_sizes(cfg, "sizes", {100, 400});
    const int reps = static_cast<int>(get_positive_int(cfg, "replicates", 500));
    const double scale = get_double(cfg, "scale", 1.0);
    if (!(scale >= 0.0)) throw Error(ErrorCode::Config, "scale must be non-negative");
    params = {{"theta", io::params_to_json(theta)}, {"sizes", sizes}, {"replicates", reps}, {"scale", scale}};

    Json per_size = Json::array();
    std::vector<double> medians;
    double max_alpha = 0.0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const LanReport rep = lan_check(theta, sizes[i], sizes[i], reps, scale, derive_seed(seed, 1, i), threads);
        medians.push_back(rep.median_abs_remainder);
        max_alpha = std::max(max_alpha, rep.max_abs_alpha_remainder);
        per_size.push_back({{"n", sizes[i]},
                            {"d", sizes[i]},
                            {"median_abs_remainder", rep.median_abs_remainder},
                            {"median_abs_alpha_remainder", rep.median_abs_alpha_remainder},
                            {"max_abs_alpha_remainder", rep.max_abs_alpha_remainder}});
    }
    bool decreasing = true;
    for (std::size_t i = 1; i < medians.size(); ++i) decreasing = decreasing && medians[i] < medians[i - 1];
    crit.add("median_remainder_decreasing", true, decreasing,
             medians.size() > 1 ? medians.back() / medians.front() : 0.0, 1.0);
    crit.add("alpha_remainder_exact", theta.family.kind == Family::Kind::Gaussian, max_alpha <= 1e-8,
             max_alpha, 1e-8);
    return {{"per_size", per_size}};
}

Json vem_gap(const Json& cfg, std::uint64_t seed, int threads, Criteria& crit, Json& params) {
    check_keys(cfg, {"check", "seed", "theta", "sizes", "replicates", "slack", "fit"}, "vem-gap config");
    const LbmParams theta = get_theta(cfg);
    const std::vector<long> sizes = get_sizes(cfg, "sizes", {50, 100, 200});
    const int reps = static_cast<int>(get_positive_int(cfg, "replicates", 300));
    const double slack = get_double(cfg, "slack", 0.2);
    const FitConfig fc = get_fit_config(cfg, 1);
    params = {{"theta", io::params_to_json(theta)}, {"sizes", sizes}, {"replicates", reps},
              {"slack", slack}, {"fit", fit_config_json(fc)}};

    const std::size_t sym = enumerate_symmetries(theta).size();
    crit.add("trivial_symmetry_group", true, sym == 1, static_cast<double>(sym), 1.0);

    const char* names[] = {"pi", "rho", "alpha"};
    std::vector<Eigen::Vector3d> medians;
    Json per_size = Json::array();
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const ReplicationReport rep =
            run_estimator_comparison(theta, sizes[i], sizes[i], reps, fc, derive_seed(seed, 2, i), threads);
        if (rep.replicate_count == 0) throw Error(ErrorCode::DegenerateResponsibilities, "no usable replicate");
        Eigen::Vector3d med;
        for (int c = 0; c < 3; ++c) med(c) = stats::median(Eigen::VectorXd(rep.var_vs_mle_gaps.col(c)));
        medians.push_back(med);
        per_size.push_back({{"n", sizes[i]},
                            {"d", sizes[i]},
                            {"replicates_used", rep.replicate_count},
                            {"mle_failures", rep.failures},
                            {"fit_failures", rep.fit_failures},
                            {"median_gap_pi", med(0)},
                            {"median_gap_rho", med(1)},
                            {"median_gap_alpha", med(2)},
                            {"mean_row_error_rate", rep.row_error_rate.mean()},
                            {"mean_col_error_rate", rep.col_error_rate.mean()}});
    }
    for (int c = 0; c < 3; ++c) {
        double worst_ratio = 0.0;
        for (std::size_t i = 1; i < medians.size(); ++i)
            worst_ratio = std::max(worst_ratio, medians[i - 1](c) > 0.0
                                                    ? medians[i](c) / medians[i - 1](c)
                                                    : (medians[i](c) > 0.0 ? INFINITY : 0.0));
        crit.add(std::string("median_gap_") + names[c] + "_nonincreasing", true,
                 worst_ratio <= 1.0 + slack, worst_ratio, 1.0 + slack);
    }
    return {{"symmetry_count", sym}, {"per_size", per_size}};
}

Json concentration(const Json& cfg, std::uint64_t seed, int threads, Criteria& crit, Json& params) {
    check_keys(cfg, {"check", "seed", "theta", "box", "n", "d", "c", "replicates", "eps_grid",
                     "assignments_per_replicate", "m_cap", "kappa"},
               "concentration config");
    const LbmParams theta = get_theta(cfg);
    const AlphaBox box = get_box(cfg);
    const long n = get_positive_int(cfg, "n", 50), d = get_positive_int(cfg, "d", 50);
    const double c = get_double(cfg, "c", 0.4);
    const int reps = static_cast<int>(get_positive_int(cfg, "replicates", 5000));
    ConcentrationConfig cc;
    cc.eps_grid = get_double_list(cfg, "eps_grid", {0.1, 0.2, 0.3});
    cc.assignments_per_replicate = static_cast<int>(get_positive_int(cfg, "assignments_per_replicate", 20));
    cc.m_cap = get_double(cfg, "m_cap", 1.0);
    cc.kappa = get_double(cfg, "kappa", 1.0);
    params = {{"theta", io::params_to_json(theta)}, {"box", {box.lo, box.hi}}, {"n", n}, {"d", d},
              {"c", c}, {"replicates", reps}, {"eps_grid", cc.eps_grid},
              {"assignments_per_replicate", cc.assignments_per_replicate},
              {"m_cap", cc.m_cap}, {"kappa", cc.kappa}};

    const ConcentrationReport rep = concentration_audit(theta, box, n, d, c, reps, cc, seed, threads);
    Json rows = Json::array();
    for (std::size_t i = 0; i < rep.eps.size(); ++i) {
        const double eps = rep.eps[i];
        const double block_allow = rep.block_bound[i] + 3.0 * binomial_se(rep.block_bound[i], reps);
        const double z_allow = rep.z_bound[i] + 3.0 * binomial_se(rep.z_bound[i], reps);
        const std::string tag = "eps=" + io::format_double(eps);
        crit.add("block_deviation_dominated[" + tag + "]", true, rep.block_freq[i] <= block_allow,
                 rep.block_freq[i], block_allow);
        crit.add("z_tail_dominated[" + tag + "]", true, rep.z_freq[i] <= z_allow, rep.z_freq[i], z_allow);
        rows.push_back({{"eps", eps},
                        {"block_freq", rep.block_freq[i]},
                        {"block_log_bound", rep.block_log_bound[i]},
                        {"block_bound", rep.block_bound[i]},
                        {"z_threshold", rep.z_threshold[i]},
                        {"z_freq", rep.z_freq[i]},
                        {"z_bound", rep.z_bound[i]}});
    }
    crit.add("z_mean_dominated", true, rep.z_mean <= rep.z_mean_bound, rep.z_mean, rep.z_mean_bound);
    return {{"sigma_bar_sq", rep.subexp.sigma_bar_sq},
            {"kappa", rep.subexp.kappa},
            {"z_mean", rep.z_mean},
            {"z_mean_bound", rep.z_mean_bound},
            {"grid", rows}};
}

void assumption_criterion(const LbmParams& theta, double c, Criteria& crit) {
    const AssumptionReport a = check_assumptions(theta, c, AlphaBox{});
    crit.add("theta_satisfies_h1", false, a.h1_ok, a.h1_ok ? 1.0 : 0.0, 1.0);
}

Json regularity(const Json& cfg, std::uint64_t seed, int threads, Criteria& crit, Json& params) {
    check_keys(cfg, {"check", "seed", "theta", "n", "d", "c", "replicates"}, "regularity config");
    const LbmParams theta = get_theta(cfg);
    const long n = get_positive_int(cfg, "n", 60), d = get_positive_int(cfg, "d", 60);
    const double c = get_double(cfg, "c", 0.3);
    const int reps = static_cast<int>(get_positive_int(cfg, "replicates", 10000));
    params = {{"theta", io::params_to_json(theta)}, {"n", n}, {"d", d}, {"c", c}, {"replicates", reps}};
    assumption_criterion(theta, c, crit);
    const RegularityReport rep = regularity_experiment(theta, n, d, c, reps, seed, threads);
    const double allow = rep.bound + 3.0 * binomial_se(std::min(1.0, rep.bound), reps);
    crit.add("irregular_frequency_dominated", true, rep.freq <= allow, rep.freq, allow);
    return {{"irregular", rep.irregular}, {"freq", rep.freq}, {"bound", rep.bound}};
}

Json separability(const Json& cfg, std::uint64_t seed, int threads, Criteria& crit, Json& params) {
    check_keys(cfg, {"check", "seed", "theta", "n", "d", "c", "radius", "contexts", "samples_per_context"},
               "separability config");
    const LbmParams theta = get_theta(cfg);
    const long n = get_positive_int(cfg, "n", 60), d = get_positive_int(cfg, "d", 60);
    const double c = get_double(cfg, "c", 0.3), radius = get_double(cfg, "radius", 0.1);
    const int contexts = static_cast<int>(get_positive_int(cfg, "contexts", 10));
    const int per = static_cast<int>(get_positive_int(cfg, "samples_per_context", 100));
    params = {{"theta", io::params_to_json(theta)}, {"n", n}, {"d", d}, {"c", c}, {"radius", radius},
              {"contexts", contexts}, {"samples_per_context", per}};
    assumption_criterion(theta, c, crit);
    const SeparabilityReport rep = separability_experiment(theta, n, d, c, radius, contexts, per, seed, threads);
    crit.add("separability_violations", true, rep.violations == 0, rep.violations, 0.0);
    return {{"samples", rep.samples}, {"violations", rep.violations}, {"min_margin", rep.min_margin},
            {"delta", rep.delta}};
}

Json oracle(const Json& cfg, std::uint64_t seed, int threads, Criteria& crit, Json& params) {
    check_keys(cfg, {"check", "seed", "instances", "q_per_instance", "n", "d", "g", "m"}, "oracle config");
    const int instances = static_cast<int>(get_positive_int(cfg, "instances", 50));
    const int qn = static_cast<int>(get_positive_int(cfg, "q_per_instance", 100));
    const long n = get_positive_int(cfg, "n", 6), d = get_positive_int(cfg, "d", 6);
    const long g = get_positive_int(cfg, "g", 2), m = get_positive_int(cfg, "m", 2);
    params = {{"instances", instances}, {"q_per_instance", qn}, {"n", n}, {"d", d}, {"g", g}, {"m", m}};
    const OracleReport rep = oracle_experiment(instances, qn, n, d, g, m, seed, threads);
    crit.add("elbo_below_oracle", true, rep.q_violations == 0, rep.max_q_excess, 0.0);
    crit.add("fitted_elbo_below_oracle", true, rep.fit_violations == 0, rep.max_fit_excess, 1e-8);
    crit.add("single_column_elbo_equals_oracle", true, rep.max_single_column_gap <= 1e-8,
             rep.max_single_column_gap, 1e-8);
    return {{"q_checks", rep.q_checks},
            {"q_violations", rep.q_violations},
            {"max_q_excess", rep.max_q_excess},
            {"fit_violations", rep.fit_violations},
            {"max_fit_excess", rep.max_fit_excess},
            {"max_single_column_gap", rep.max_single_column_gap}};
}

}  // namespace

Json verify_report(const Json& config, std::uint64_t seed, int threads) {
    if (!config.is_object() || !config.contains("check") || !config["check"].is_string())
        throw Error(ErrorCode::Config, "verify config needs a string 'check'");
    const std::string check = config["check"].get<std::string>();
    using Runner = Json (*)(const Json&, std::uint64_t, int, Criteria&, Json&);
    const std::pair<const char*, Runner> runners[] = {
        {"normality", normality},       {"lan", lan},
        {"vem-gap", vem_gap},           {"concentration", concentration},
        {"regularity", regularity},     {"separability", separability},
        {"oracle", oracle},
    };
    Runner runner = nullptr;
    for (const auto& [name, fn] : runners)
        if (check == name) runner = fn;
    if (!runner) throw Error(ErrorCode::Config, "unknown check '" + check + "'");

    Criteria crit;
    Json params;
    Json statistics = runner(config, seed, std::max(1, threads), crit, params);
    Json report;
    report["check"] = check;
    report["seed"] = seed;
    report["parameters"] = params;
    report["pass"] = crit.pass();
    report["criteria"] = crit.list();
    report["statistics"] = statistics;
    return report;
}

}  // namespace lbm::cli
