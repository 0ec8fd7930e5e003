#include "lbm/model.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace lbm {

namespace {

void check_proportions(const Eigen::VectorXd& v, const char* name) {
    if (v.size() < 1) throw Error(ErrorCode::InvalidArgument, std::string(name) + " is empty");
    if (!v.allFinite() || (v.array() < 0.0).any())
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " has invalid entries");
    if (std::abs(v.sum() - 1.0) > 1e-12)
        throw Error(ErrorCode::InvalidArgument, std::string(name) + " does not sum to one");
}

}  // namespace

void LbmParams::validate() const {
    check_proportions(pi, "pi");
    check_proportions(rho, "rho");
    if (alpha.rows() != g() || alpha.cols() != m())
        throw Error(ErrorCode::DimensionMismatch, "alpha must be g x m");
    if (!alpha.allFinite()) throw Error(ErrorCode::InvalidArgument, "alpha has non-finite entries");
    if (family.kind == Family::Kind::Gaussian && !(family.variance > 0.0))
        throw Error(ErrorCode::InvalidArgument, "Gaussian variance must be positive");
}

bool is_permutation(const std::vector<int>& p) {
    std::vector<char> seen(p.size(), 0);
    for (int v : p) {
        if (v < 0 || static_cast<std::size_t>(v) >= p.size() || seen[v]) return false;
        seen[v] = 1;
    }
    return true;
}

PermPair PermPair::identity(Eigen::Index g, Eigen::Index m) {
    PermPair p;
    p.s.resize(g);
    p.t.resize(m);
    std::iota(p.s.begin(), p.s.end(), 0);
    std::iota(p.t.begin(), p.t.end(), 0);
    return p;
}

PermPair PermPair::inverse() const {
    PermPair q;
    q.s.resize(s.size());
    q.t.resize(t.size());
    for (std::size_t k = 0; k < s.size(); ++k) q.s[s[k]] = static_cast<int>(k);
    for (std::size_t l = 0; l < t.size(); ++l) q.t[t[l]] = static_cast<int>(l);
    return q;
}

PermPair PermPair::compose(const PermPair& other) const {
    if (s.size() != other.s.size() || t.size() != other.t.size())
        throw Error(ErrorCode::DimensionMismatch, "compose: sizes differ");
    // permute(permute(p, other), this) == permute(p, other.compose-with-this):
    // entry k of the result reads other.s[this.s[k]].
    PermPair r;
    r.s.resize(s.size());
    r.t.resize(t.size());
    for (std::size_t k = 0; k < s.size(); ++k) r.s[k] = other.s[s[k]];
    for (std::size_t l = 0; l < t.size(); ++l) r.t[l] = other.t[t[l]];
    return r;
}

bool PermPair::is_identity() const {
    for (std::size_t k = 0; k < s.size(); ++k)
        if (s[k] != static_cast<int>(k)) return false;
    for (std::size_t l = 0; l < t.size(); ++l)
        if (t[l] != static_cast<int>(l)) return false;
    return true;
}

LbmParams permute(const LbmParams& params, const PermPair& p) {
    const Eigen::Index g = params.g(), m = params.m();
    if (static_cast<Eigen::Index>(p.s.size()) != g || static_cast<Eigen::Index>(p.t.size()) != m ||
        params.alpha.rows() != g || params.alpha.cols() != m)
        throw Error(ErrorCode::DimensionMismatch, "permutation does not match (g, m)");
    if (!is_permutation(p.s) || !is_permutation(p.t))
        throw Error(ErrorCode::InvalidArgument, "not a permutation");
    LbmParams out{params.family, Eigen::VectorXd(g), Eigen::VectorXd(m), Eigen::MatrixXd(g, m)};
    for (Eigen::Index k = 0; k < g; ++k) out.pi(k) = params.pi(p.s[k]);
    for (Eigen::Index l = 0; l < m; ++l) out.rho(l) = params.rho(p.t[l]);
    for (Eigen::Index k = 0; k < g; ++k)
        for (Eigen::Index l = 0; l < m; ++l) out.alpha(k, l) = params.alpha(p.s[k], p.t[l]);
    return out;
}

bool params_close(const LbmParams& a, const LbmParams& b, double tol) {
    if (!(a.family == b.family) || a.g() != b.g() || a.m() != b.m()) return false;
    return (a.pi - b.pi).cwiseAbs().maxCoeff() <= tol &&
           (a.rho - b.rho).cwiseAbs().maxCoeff() <= tol &&
           (a.alpha - b.alpha).cwiseAbs().maxCoeff() <= tol;
}

double class_distinctness(const Family& family, const Eigen::MatrixXd& alpha) {
    const Eigen::Index g = alpha.rows(), m = alpha.cols();
    double col_term = std::numeric_limits<double>::infinity();
    for (Eigen::Index l = 0; l < m; ++l)
        for (Eigen::Index lp = 0; lp < m; ++lp) {
            if (l == lp) continue;
            double worst = 0.0;
            for (Eigen::Index k = 0; k < g; ++k)
                worst = std::max(worst, kl(family, alpha(k, l), alpha(k, lp)));
            col_term = std::min(col_term, worst);
        }
    double row_term = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < g; ++k)
        for (Eigen::Index kp = 0; kp < g; ++kp) {
            if (k == kp) continue;
            double worst = 0.0;
            for (Eigen::Index l = 0; l < m; ++l)
                worst = std::max(worst, kl(family, alpha(k, l), alpha(kp, l)));
            row_term = std::min(row_term, worst);
        }
    return std::min(col_term, row_term);
}

namespace detail {

std::size_t factorial_capped(Eigen::Index k, std::size_t cap) {
    std::size_t f = 1;
    for (Eigen::Index i = 2; i <= k; ++i) {
        f *= static_cast<std::size_t>(i);
        if (f > cap) return cap + 1;
    }
    return f;
}

}  // namespace detail

std::size_t perm_pair_count(Eigen::Index g, Eigen::Index m, std::size_t cap) {
    const std::size_t fg = detail::factorial_capped(g, cap);
    const std::size_t fm = detail::factorial_capped(m, cap);
    if (fg > cap || fm > cap || fg * fm > cap)
        throw Error(ErrorCode::TooLarge, "g! * m! exceeds the permutation cap");
    return fg * fm;
}

std::vector<PermPair> enumerate_symmetries(const LbmParams& params, double tol, std::size_t cap) {
    std::vector<PermPair> out;
    for_each_perm_pair(params.g(), params.m(), cap, [&](const PermPair& p) {
        if (params_close(permute(params, p), params, tol)) out.push_back(p);
    });
    return out;
}

std::optional<PermPair> equivalent_params(const LbmParams& a, const LbmParams& b, double tol,
                                          std::size_t cap) {
    if (!(a.family == b.family) || a.g() != b.g() || a.m() != b.m())
        throw Error(ErrorCode::DimensionMismatch, "equivalent_params: shapes differ");
    std::optional<PermPair> found;
    for_each_perm_pair(a.g(), a.m(), cap, [&](const PermPair& p) {
        if (!found && params_close(permute(a, p), b, tol)) found = p;
    });
    return found;
}

AssumptionReport check_assumptions(const LbmParams& params, double c, const AlphaBox& box) {
    AssumptionReport r;
    r.c_used = c;
    const auto in_band = [c](const Eigen::VectorXd& v) {
        return (v.array() >= c).all() && (v.array() <= 1.0 - c).all();
    };
    bool alpha_ok = true;
    for (Eigen::Index i = 0; i < params.alpha.size(); ++i)
        alpha_ok = alpha_ok && box.contains(params.alpha.data()[i]);
    r.h1_ok = in_band(params.pi) && in_band(params.rho) && alpha_ok;
    r.h2_note = "interior condition concerns the parameter space, not a single point";
    r.h3_ok = true;
    r.delta = class_distinctness(params);
    r.h4_ok = r.delta > 1e-9;
    return r;
}

}  // namespace lbm
