#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "config.hpp"
#include "lbm/assignments.hpp"
#include "lbm/asymptotics.hpp"
#include "lbm/cli.hpp"

namespace lbm::cli {

namespace fs = std::filesystem;

namespace {

std::uint64_t resolve_seed(const RunOptions& opts, const Json& cfg) {
    if (opts.seed) return *opts.seed;
    if (!cfg.contains("seed")) return 0;
    if (!cfg["seed"].is_number_unsigned()) throw Error(ErrorCode::Config, "'seed' must be a non-negative integer");
    return cfg["seed"].get<std::uint64_t>();
}

fs::path resolve_path(const RunOptions& opts, const Json& cfg, const char* key) {
    if (!cfg[key].is_string()) throw Error(ErrorCode::Config, std::string("'") + key + "' must be a path string");
    fs::path p = cfg[key].get<std::string>();
    if (p.is_relative()) p = opts.config_path.parent_path() / p;
    return p;
}

void prepare_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Io: return kExitIo;
        case ErrorCode::DegenerateResponsibilities: return kExitDegenerateFit;
        default: return kExitConfig;
    }
}

template <class Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        std::cerr << "lbm: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "lbm: internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

Json json_perm(const PermPair& p) {
    std::vector<int> s(p.s), t(p.t);
    for (auto& v : s) ++v;
    for (auto& v : t) ++v;
    return {{"s", s}, {"t", t}};
}

Json json_gaps(const Eigen::Vector3d& g) { return {{"pi", g(0)}, {"rho", g(1)}, {"alpha", g(2)}}; }

}  // namespace

int cmd_simulate(const RunOptions& opts) {
    return guarded([&] {
        const Json cfg = io::read_json(opts.config_path);
        check_keys(cfg, {"seed", "theta", "family", "g", "m", "n", "d"}, "simulate config");
        const std::uint64_t seed = resolve_seed(opts, cfg);
        const long n = get_positive_int(cfg, "n", 0), d = get_positive_int(cfg, "d", 0);
        if (n < 1 || d < 1) throw Error(ErrorCode::Config, "simulate needs positive 'n' and 'd'");
        LbmParams theta;
        if (cfg.contains("theta")) {
            if (cfg.contains("family") || cfg.contains("g") || cfg.contains("m"))
                throw Error(ErrorCode::Config, "give either 'theta' or 'family', 'g' and 'm'");
            theta = get_theta(cfg);
        } else {
            if (!cfg.contains("family")) throw Error(ErrorCode::Config, "simulate needs 'theta' or 'family'");
            const long g = get_positive_int(cfg, "g", 0), m = get_positive_int(cfg, "m", 0);
            if (g < 1 || m < 1) throw Error(ErrorCode::Config, "simulate needs positive 'g' and 'm'");
            Rng rng = make_rng(seed, 1, 0);
            theta = random_params(io::family_from_json(cfg["family"]), g, m, rng);
        }
        Rng rng = make_rng(seed, 2, 0);
        const auto [x, a] = sample_lbm(theta, n, d, rng);
        prepare_out_dir(opts.out_dir);
        io::write_csv(opts.out_dir / "X.csv", x);
        io::write_labels(opts.out_dir / "labels.csv", a);
        io::write_json(opts.out_dir / "theta.json", io::params_to_json(theta));
        return static_cast<int>(kExitOk);
    });
}

int cmd_fit(const RunOptions& opts) {
    return guarded([&] {
        const Json cfg = io::read_json(opts.config_path);
        check_keys(cfg, {"seed", "data", "family", "g", "m", "theta", "labels", "fit"}, "fit config");
        const std::uint64_t seed = resolve_seed(opts, cfg);
        if (!cfg.contains("data")) throw Error(ErrorCode::Config, "fit needs 'data'");
        const long g = get_positive_int(cfg, "g", 0), m = get_positive_int(cfg, "m", 0);
        if (g < 1 || m < 1) throw Error(ErrorCode::Config, "fit needs positive 'g' and 'm'");
        const FitConfig fc = get_fit_config(cfg, opts.threads);

        std::optional<LbmParams> theta;
        if (cfg.contains("theta")) theta = io::params_from_json(io::read_json(resolve_path(opts, cfg, "theta")));
        Family family;
        if (cfg.contains("family")) {
            family = io::family_from_json(cfg["family"]);
            if (theta && !(theta->family == family))
                throw Error(ErrorCode::Config, "'family' disagrees with the theta document");
        } else if (theta) {
            family = theta->family;
        } else {
            throw Error(ErrorCode::Config, "fit needs 'family' or 'theta'");
        }
        if (theta && (theta->g() != g || theta->m() != m))
            throw Error(ErrorCode::Config, "theta shape disagrees with 'g' and 'm'");

        const DataMatrix x = io::read_csv(resolve_path(opts, cfg, "data"));
        std::optional<Assignment> labels;
        if (cfg.contains("labels")) {
            labels = io::read_labels(resolve_path(opts, cfg, "labels"));
            if (labels->n() != x.rows() || labels->d() != x.cols())
                throw Error(ErrorCode::Config, "labels do not match the data shape");
            validate_assignment(*labels, g, m);
        }

        const FitResult fit = fit_vem(x, g, m, family, fc, seed);
        prepare_out_dir(opts.out_dir);
        Json doc = io::fit_to_json(fit);
        doc["seed"] = seed;
        doc["config"] = fit_config_json(fc);
        io::write_json(opts.out_dir / "fit.json", doc);

        if (theta) {
            const Alignment al = align_to_reference(fit.params, *theta, x.rows(), x.cols(), &fit.q,
                                                    labels ? &*labels : nullptr);
            const LbmParams aligned = permute(fit.params, al.perm);
            Json err;
            err["perm"] = json_perm(al.perm);
            err["scaled_gaps"] = json_gaps(al.gaps);
            err["identity_scaled_gaps"] = json_gaps(al.identity_gaps);
            err["max_abs_error"] = {{"pi", (aligned.pi - theta->pi).cwiseAbs().maxCoeff()},
                                    {"rho", (aligned.rho - theta->rho).cwiseAbs().maxCoeff()},
                                    {"alpha", (aligned.alpha - theta->alpha).cwiseAbs().maxCoeff()}};
            err["aligned_params"] = io::params_to_json(aligned);
            if (labels) {
                const EquivDistance dist = distance_up_to_equiv(fit.q.map_labels(), *labels, g, m);
                err["label_perm"] = json_perm(dist.best);
                err["label_distance"] = {{"rows", dist.dist_z}, {"cols", dist.dist_w}};
            }
            io::write_json(opts.out_dir / "aligned-errors.json", err);
        }
        return static_cast<int>(kExitOk);
    });
}

int cmd_verify(const RunOptions& opts) {
    return guarded([&] {
        const Json cfg = io::read_json(opts.config_path);
        const Json report = verify_report(cfg, resolve_seed(opts, cfg), opts.threads);
        prepare_out_dir(opts.out_dir);
        io::write_json(opts.out_dir / "report.json", report);
        for (const auto& c : report["criteria"])
            std::cout << (c["pass"].get<bool>() ? "PASS " : "FAIL ")
                      << (c["hard"].get<bool>() ? "" : "(soft) ") << c["name"].get<std::string>() << '\n';
        return static_cast<int>(report["pass"].get<bool>() ? kExitOk : kExitCriterionFailed);
    });
}

int run(int argc, char** argv) {
    CLI::App app{"Latent block model simulation, fitting and verification"};
    app.require_subcommand(1);
    RunOptions opts;
    std::uint64_t seed = 0;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "JSON configuration file")->required();
        sub->add_option("--seed", seed, "Master seed (overrides the config)");
        sub->add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", opts.out_dir, "Output directory");
    };
    CLI::App* simulate = app.add_subcommand("simulate", "Draw a data matrix and labels");
    CLI::App* fit = app.add_subcommand("fit", "Fit the variational estimator");
    CLI::App* verify = app.add_subcommand("verify", "Run one verification check");
    for (CLI::App* sub : {simulate, fit, verify}) add_common(sub);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }
    for (CLI::App* sub : {simulate, fit, verify})
        if (sub->count("--seed")) opts.seed = seed;
    if (*simulate) return cmd_simulate(opts);
    if (*fit) return cmd_fit(opts);
    return cmd_verify(opts);
}

}  // namespace lbm::cli
