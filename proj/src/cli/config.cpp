#include "config.hpp"

namespace lbm::cli {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::Config, what); }

}  // namespace

long get_positive_int(const Json& j, const char* key, long fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j[key];
    if (!v.is_number_integer() || v.get<long>() < 1)
        bad(std::string("'") + key + "' must be a positive integer");
    return v.get<long>();
}

double get_double(const Json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) bad(std::string("'") + key + "' must be a number");
    return j[key].get<double>();
}

std::vector<double> get_double_list(const Json& j, const char* key, std::vector<double> fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j[key];
    if (!v.is_array() || v.empty()) bad(std::string("'") + key + "' must be a non-empty array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number() || !(e.get<double>() > 0.0))
            bad(std::string("'") + key + "' entries must be positive numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<long> get_sizes(const Json& j, const char* key, std::vector<long> fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j[key];
    if (!v.is_array() || v.empty()) bad(std::string("'") + key + "' must be a non-empty array");
    std::vector<long> out;
    for (const auto& e : v) {
        if (!e.is_number_integer() || e.get<long>() < 1)
            bad(std::string("'") + key + "' entries must be positive integers");
        out.push_back(e.get<long>());
    }
    return out;
}

LbmParams get_theta(const Json& j) {
    if (!j.contains("theta")) bad("config is missing 'theta'");
    return io::params_from_json(j["theta"]);
}

AlphaBox get_box(const Json& j) {
    if (!j.contains("box")) return AlphaBox{};
    const Json& v = j["box"];
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number() ||
        !(v[0].get<double>() < v[1].get<double>()))
        bad("'box' must be [lo, hi] with lo < hi");
    return {v[0].get<double>(), v[1].get<double>()};
}

FitConfig get_fit_config(const Json& j, int threads) {
    FitConfig fc;
    fc.threads = threads;
    if (!j.contains("fit")) return fc;
    const Json& f = j["fit"];
    check_keys(f, {"max_iter", "tol", "restarts", "init", "smoothing_eps"}, "fit");
    fc.max_iter = static_cast<int>(get_positive_int(f, "max_iter", fc.max_iter));
    fc.restarts = static_cast<int>(get_positive_int(f, "restarts", fc.restarts));
    fc.tol = get_double(f, "tol", fc.tol);
    fc.smoothing_eps = get_double(f, "smoothing_eps", fc.smoothing_eps);
    if (f.contains("init")) {
        if (!f["init"].is_string()) bad("'fit.init' must be a string");
        const std::string init = f["init"].get<std::string>();
        if (init == "random")
            fc.init = InitKind::Random;
        else if (init == "marginal")
            fc.init = InitKind::Marginal;
        else
            bad("'fit.init' must be \"random\" or \"marginal\"");
    }
    try {
        fc.validate();
    } catch (const Error& e) {
        bad(e.what());
    }
    return fc;
}

Json fit_config_json(const FitConfig& fc) {
    return {{"max_iter", fc.max_iter},
            {"tol", fc.tol},
            {"restarts", fc.restarts},
            {"init", fc.init == InitKind::Marginal ? "marginal" : "random"},
            {"smoothing_eps", fc.smoothing_eps}};
}

}  // namespace lbm::cli
