#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lbm/expfam.hpp"

namespace lbm {

/// Full parameter set theta = (pi, rho, alpha) of a latent block model with
/// g row groups and m column groups. alpha holds natural parameters.
struct LbmParams {
    Family family;
    Eigen::VectorXd pi;
    Eigen::VectorXd rho;
    Eigen::MatrixXd alpha;

    Eigen::Index g() const { return pi.size(); }
    Eigen::Index m() const { return rho.size(); }

    /// Throws InvalidArgument unless proportions sum to one (1e-12), entries are
    /// finite and the alpha shape is g x m.
    void validate() const;
};

/// Label permutations: s acts on row groups, t on column groups (0-based).
struct PermPair {
    std::vector<int> s;
    std::vector<int> t;

    static PermPair identity(Eigen::Index g, Eigen::Index m);
    PermPair inverse() const;
    /// (this o other): applying `other` first, then `this`.
    PermPair compose(const PermPair& other) const;
    bool is_identity() const;

    bool operator==(const PermPair&) const = default;
};

bool is_permutation(const std::vector<int>& p);

/// Relabel: pi'[k] = pi[s[k]], rho'[l] = rho[t[l]], alpha'[k][l] = alpha[s[k]][t[l]].
LbmParams permute(const LbmParams& params, const PermPair& p);

/// Entrywise absolute comparison of pi, rho and alpha.
bool params_close(const LbmParams& a, const LbmParams& b, double tol);

/// min { min_{l != l'} max_k KL(a_kl, a_kl'), min_{k != k'} max_l KL(a_kl, a_k'l) }.
/// Both minima run over ordered pairs. +inf when g = m = 1.
double class_distinctness(const Family& family, const Eigen::MatrixXd& alpha);
inline double class_distinctness(const LbmParams& p) { return class_distinctness(p.family, p.alpha); }

/// Default cap on g! * m! for exhaustive permutation searches.
inline constexpr std::size_t kPermutationCap = 518400;  // 6! * 6!

/// Calls fn(const PermPair&) for every pair in lexicographic order, identity first.
/// Throws TooLarge if g! * m! exceeds cap.
template <class Fn>
void for_each_perm_pair(Eigen::Index g, Eigen::Index m, std::size_t cap, Fn&& fn);

std::size_t perm_pair_count(Eigen::Index g, Eigen::Index m, std::size_t cap = kPermutationCap);

/// All (s, t), identity included, with permute(params, (s, t)) == params within tol.
std::vector<PermPair> enumerate_symmetries(const LbmParams& params, double tol = 1e-9,
                                           std::size_t cap = kPermutationCap);

/// Some (s, t) with permute(a, (s, t)) == b within tol, if one exists.
std::optional<PermPair> equivalent_params(const LbmParams& a, const LbmParams& b,
                                          double tol = 1e-9,
                                          std::size_t cap = kPermutationCap);

struct AssumptionReport {
    bool h1_ok = false;   // proportions in [c, 1-c], alpha inside the box
    std::string h2_note;  // interior condition, not checkable from one point
    bool h3_ok = true;    // injectivity holds for the built-in families
    bool h4_ok = false;   // distinct rows and columns of alpha
    double c_used = 0.0;
    double delta = 0.0;
};

AssumptionReport check_assumptions(const LbmParams& params, double c, const AlphaBox& box);

// --- implementation of the template above ---

namespace detail {
std::size_t factorial_capped(Eigen::Index k, std::size_t cap);
}

template <class Fn>
void for_each_perm_pair(Eigen::Index g, Eigen::Index m, std::size_t cap, Fn&& fn) {
    perm_pair_count(g, m, cap);
    PermPair p = PermPair::identity(g, m);
    std::vector<int> s = p.s;
    do {
        std::vector<int> t = p.t;
        do {
            fn(PermPair{s, t});
        } while (std::next_permutation(t.begin(), t.end()));
    } while (std::next_permutation(s.begin(), s.end()));
}

}  // namespace lbm
