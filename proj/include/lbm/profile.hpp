#pragma once

#include <Eigen/Dense>

#include "lbm/expfam.hpp"
#include "lbm/model.hpp"
#include "lbm/simulate.hpp"

namespace lbm {

/// Data together with the reference labels and parameters that all contrasts
/// are measured against. s_star == psi_prime(alpha*) entrywise.
struct ContrastContext {
    DataMatrix x;
    Assignment a_star;
    LbmParams params_star;
    Eigen::MatrixXd s_star;
};

ContrastContext make_context(DataMatrix x, Assignment a_star, LbmParams params_star);

/// Conditional log-likelihood ratio log p(x | z, w; theta) - log p(x | z*, w*; theta*).
/// Depends on theta only through alpha.
double f_nd(const ContrastContext& ctx, const LbmParams& params, const Assignment& a);

/// Conditional expectation of f_nd given the reference labels:
/// -nd sum R_g(k, k') R_m(l, l') KL(alpha*_kl, alpha_k'l'). Never positive.
double g_expected(const ContrastContext& ctx, const LbmParams& params, const Assignment& a);

/// psi'^{-1} of the block means of x. Throws EmptyGroup or MeanOnBoundary.
Eigen::MatrixXd alpha_hat(const ContrastContext& ctx, const Assignment& a);

/// psi'^{-1} of x_bar, where x_bar(k, l) averages S* over the reference labels
/// of block (k, l). A block drawn from one reference block (k*, l*) gets
/// alpha*(k*, l*) exactly. Throws EmptyGroup.
Eigen::MatrixXd alpha_bar(const ContrastContext& ctx, const Assignment& a);

/// x_bar itself: [R_g^T S* R_m]_kl / (pi_hat_k rho_hat_l).
Eigen::MatrixXd x_bar(const ContrastContext& ctx, const Assignment& a);

struct ProfileMaximizers {
    Eigen::MatrixXd alpha_hat;
    Eigen::MatrixXd alpha_bar;
};

ProfileMaximizers profile_maximizers(const ContrastContext& ctx, const Assignment& a);

/// Lambda(a) = f_nd at alpha_hat(a).
double lambda_profile(const ContrastContext& ctx, const Assignment& a);
/// Lambda~(a) = g_expected at alpha_bar(a); zero at the reference labels.
double lambda_tilde(const ContrastContext& ctx, const Assignment& a);

/// -(c delta(alpha*) / 4) (d dist_z + n dist_w) with distances taken up to relabeling.
double separability_bound(const ContrastContext& ctx, const Assignment& a, double c);

/// M_c ||z - z*||_0 with M_c = 2 log((1 - c) / c). Throws NotRegular unless both
/// label vectors are c-regular.
double entropy_ratio_bound(const std::vector<int>& z, const std::vector<int>& z_star,
                           Eigen::Index g, double c);
/// n |H(pi_hat(z)) - H(pi_hat(z*))|, the quantity bounded above.
double entropy_ratio_lhs(const std::vector<int>& z, const std::vector<int>& z_star,
                         Eigen::Index g);

/// log of g^{n+1} m^{d+1} exp(-nd c^2 eps^2 / (8 (sigma_bar^2 + eps / kappa))).
double log_bernstein_block_bound(Eigen::Index g, Eigen::Index m, double n, double d, double c,
                                 double eps, const SubexpParams& subexp);
/// The bound itself; overflows to +inf for small eps, which is still a valid bound.
double bernstein_block_bound(Eigen::Index g, Eigen::Index m, double n, double d, double c,
                             double eps, const SubexpParams& subexp);

struct SubexpSupBound {
    double tail;        // bound on P(Z - M V0 sqrt(n) >= t)
    double mean_bound;  // M V0 sqrt(n) >= E[Z]
};

SubexpSupBound subexp_sup_bound(double n_vars, double m_cap, double v0_sq, double b, double t);

}  // namespace lbm
