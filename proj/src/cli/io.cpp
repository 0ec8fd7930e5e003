#include "lbm/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace lbm::io {

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::Config, what); }

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    return in;
}

std::vector<double> parse_csv_line(const std::string& line, const std::filesystem::path& path,
                                   std::size_t lineno) {
    std::vector<double> out;
    const char* p = line.data();
    const char* end = p + line.size();
    while (true) {
        double v = 0.0;
        const auto [next, ec] = std::from_chars(p, end, v);
        if (ec != std::errc())
            throw Error(ErrorCode::Io, path.string() + ":" + std::to_string(lineno) + ": bad number");
        out.push_back(v);
        p = next;
        if (p == end) break;
        if (*p != ',')
            throw Error(ErrorCode::Io, path.string() + ":" + std::to_string(lineno) + ": expected ','");
        ++p;
    }
    return out;
}

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        rows.push_back(parse_csv_line(line, path, lineno));
    }
    return rows;
}

std::vector<int> to_labels(const std::vector<double>& row, const std::filesystem::path& path) {
    std::vector<int> out;
    out.reserve(row.size());
    for (double v : row) {
        if (v < 1.0 || v != static_cast<double>(static_cast<int>(v)))
            throw Error(ErrorCode::Io, path.string() + ": labels must be positive integers");
        out.push_back(static_cast<int>(v) - 1);
    }
    return out;
}

Eigen::VectorXd vector_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.empty()) config_error(std::string(what) + " must be a non-empty array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) config_error(std::string(what) + " entries must be numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

}  // namespace

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) config_error(where + " must be a JSON object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || item.key() == a;
        if (!ok) config_error("unknown key '" + item.key() + "' in " + where);
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Json family_to_json(const Family& f) {
    Json j;
    j["kind"] = family_name(f);
    if (f.kind == Family::Kind::Gaussian) j["variance"] = f.variance;
    return j;
}

Family family_from_json(const Json& j) {
    check_keys(j, {"kind", "variance"}, "family");
    if (!j.contains("kind") || !j["kind"].is_string()) config_error("family.kind must be a string");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "gaussian") {
        double v = 1.0;
        if (j.contains("variance")) {
            if (!j["variance"].is_number()) config_error("family.variance must be a number");
            v = j["variance"].get<double>();
        }
        return Family::gaussian(v);
    }
    if (j.contains("variance")) config_error("family.variance applies to the gaussian family only");
    if (kind == "bernoulli") return Family::bernoulli();
    if (kind == "poisson") return Family::poisson();
    config_error("unknown family kind '" + kind + "'");
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
        config_error(std::string(what) + " must be a non-empty array of arrays");
    const std::size_t cols = j[0].size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) config_error(std::string(what) + " rows differ in length");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) config_error(std::string(what) + " entries must be numbers");
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
        }
    }
    return m;
}

Json params_to_json(const LbmParams& p) {
    Json j;
    j["family"] = family_to_json(p.family);
    j["pi"] = std::vector<double>(p.pi.data(), p.pi.data() + p.pi.size());
    j["rho"] = std::vector<double>(p.rho.data(), p.rho.data() + p.rho.size());
    j["alpha"] = matrix_to_json(p.alpha);
    return j;
}

LbmParams params_from_json(const Json& j) {
    check_keys(j, {"family", "pi", "rho", "alpha"}, "theta");
    for (const char* key : {"family", "pi", "rho", "alpha"})
        if (!j.contains(key)) config_error(std::string("theta is missing '") + key + "'");
    LbmParams p{family_from_json(j["family"]), vector_from_json(j["pi"], "theta.pi"),
                vector_from_json(j["rho"], "theta.rho"), matrix_from_json(j["alpha"], "theta.alpha")};
    p.validate();
    return p;
}

Json fit_to_json(const FitResult& fit) {
    Json j;
    j["params"] = params_to_json(fit.params);
    j["elbo"] = fit.elbo_trace.back();
    j["elbo_trace"] = fit.elbo_trace;
    j["converged"] = fit.converged;
    j["iterations"] = fit.iterations;
    j["best_restart"] = fit.best_restart;
    Json restarts = Json::array();
    for (double e : fit.restart_elbos) restarts.push_back(std::isnan(e) ? Json(nullptr) : Json(e));
    j["restart_elbos"] = restarts;
    j["failed_restarts"] = fit.failed_restarts;
    const Assignment a = fit.q.map_labels();
    std::vector<int> z(a.z), w(a.w);
    for (auto& v : z) ++v;
    for (auto& v : w) ++v;
    j["labels"] = {{"z", z}, {"w", w}};
    j["tau"] = matrix_to_json(fit.q.tau);
    j["nu"] = matrix_to_json(fit.q.nu);
    return j;
}

void write_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    std::ofstream out = open_out(path);
    std::string line;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        line.clear();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) line += ',';
            line += format_double(m(i, j));
        }
        line += '\n';
        out << line;
    }
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

Eigen::MatrixXd read_csv(const std::filesystem::path& path) {
    const auto rows = read_rows(path);
    if (rows.empty()) throw Error(ErrorCode::Io, path.string() + ": empty file");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
            throw Error(ErrorCode::Io, path.string() + ": ragged rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

void write_labels(const std::filesystem::path& path, const Assignment& a) {
    std::ofstream out = open_out(path);
    for (const auto* labels : {&a.z, &a.w}) {
        std::string line;
        for (std::size_t i = 0; i < labels->size(); ++i) {
            if (i) line += ',';
            line += std::to_string((*labels)[i] + 1);
        }
        out << line << '\n';
    }
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

Assignment read_labels(const std::filesystem::path& path) {
    const auto rows = read_rows(path);
    if (rows.size() != 2) throw Error(ErrorCode::Io, path.string() + ": expected two lines of labels");
    return {to_labels(rows[0], path), to_labels(rows[1], path)};
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in = open_in(path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        config_error(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream out = open_out(path);
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

}  // namespace lbm::io
