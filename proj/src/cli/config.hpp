#pragma once

// Typed accessors for experiment configs. Every accessor throws
// Error(ErrorCode::Config) when a key has the wrong type or range.

#include <string>
#include <vector>

#include "lbm/io.hpp"
#include "lbm/varem.hpp"

namespace lbm::cli {

using io::check_keys;
using io::Json;

long get_positive_int(const Json& j, const char* key, long fallback);
double get_double(const Json& j, const char* key, double fallback);
std::vector<double> get_double_list(const Json& j, const char* key, std::vector<double> fallback);
std::vector<long> get_sizes(const Json& j, const char* key, std::vector<long> fallback);
/// Required inline parameter document under "theta".
LbmParams get_theta(const Json& j);
AlphaBox get_box(const Json& j);
/// Optional "fit" block: max_iter, tol, restarts, init ("random" | "marginal"), smoothing_eps.
FitConfig get_fit_config(const Json& j, int threads);
Json fit_config_json(const FitConfig& fc);

}  // namespace lbm::cli
