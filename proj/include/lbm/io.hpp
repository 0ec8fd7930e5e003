#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "lbm/model.hpp"
#include "lbm/simulate.hpp"
#include "lbm/varem.hpp"

namespace lbm::io {

using Json = nlohmann::ordered_json;

// Parameter documents:
//   {"family": {"kind": "gaussian", "variance": 1}, "pi": [...], "rho": [...],
//    "alpha": [[...], ...]}
// Bernoulli and Poisson families carry no variance key.
Json family_to_json(const Family& f);
Family family_from_json(const Json& j);
Json params_to_json(const LbmParams& p);
/// Throws Config on schema errors and InvalidArgument on invalid values.
LbmParams params_from_json(const Json& j);

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j, const char* what);

/// FitResult document: parameters, ELBO trace, responsibilities and MAP labels.
Json fit_to_json(const FitResult& fit);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

// CSV: comma separated, LF line ends, no header.
void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_csv(const std::filesystem::path& path);

/// Two lines: row labels, then column labels, both 1-based.
void write_labels(const std::filesystem::path& path, const Assignment& a);
Assignment read_labels(const std::filesystem::path& path);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

/// Throws Config when `j` is not an object or has a key outside `allowed`.
void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where);

}  // namespace lbm::io
