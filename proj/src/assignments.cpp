#include "lbm/assignments.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace lbm {

namespace {

void check_same_shape(const Assignment& a, const Assignment& b) {
    if (a.z.size() != b.z.size() || a.w.size() != b.w.size())
        throw Error(ErrorCode::DimensionMismatch, "assignments have different sizes");
}

Eigen::MatrixXd count_table(const std::vector<int>& ref, const std::vector<int>& lab,
                            Eigen::Index groups) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(groups, groups);
    for (std::size_t i = 0; i < ref.size(); ++i) c(ref[i], lab[i]) += 1.0;
    return c;
}

// Hungarian algorithm (shortest augmenting path, O(n^3)) on a cost matrix.
std::vector<int> hungarian_min(const Eigen::MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> assign(n);
    for (int j = 1; j <= n; ++j) assign[p[j] - 1] = j - 1;
    return assign;
}

}  // namespace

Assignment permute_assignment(const Assignment& a, const PermPair& p) {
    if (!is_permutation(p.s) || !is_permutation(p.t))
        throw Error(ErrorCode::InvalidArgument, "not a permutation");
    const PermPair inv = p.inverse();
    Assignment out = a;
    for (auto& k : out.z) {
        if (k < 0 || static_cast<std::size_t>(k) >= inv.s.size())
            throw Error(ErrorCode::DimensionMismatch, "row label exceeds permutation size");
        k = inv.s[k];
    }
    for (auto& l : out.w) {
        if (l < 0 || static_cast<std::size_t>(l) >= inv.t.size())
            throw Error(ErrorCode::DimensionMismatch, "column label exceeds permutation size");
        l = inv.t[l];
    }
    return out;
}

ConfusionPair confusion(const Assignment& a, const Assignment& a_star, Eigen::Index g,
                        Eigen::Index m) {
    check_same_shape(a, a_star);
    validate_assignment(a, g, m);
    validate_assignment(a_star, g, m);
    return {count_table(a_star.z, a.z, g) / static_cast<double>(a.n()),
            count_table(a_star.w, a.w, m) / static_cast<double>(a.d())};
}

Eigen::MatrixXd soft_confusion(const Eigen::MatrixXd& resp, const std::vector<int>& ref,
                               Eigen::Index groups) {
    if (resp.rows() != static_cast<Eigen::Index>(ref.size()) || resp.cols() != groups)
        throw Error(ErrorCode::DimensionMismatch, "soft_confusion: shape mismatch");
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(groups, groups);
    for (std::size_t i = 0; i < ref.size(); ++i) c.row(ref[i]) += resp.row(static_cast<Eigen::Index>(i));
    return c / static_cast<double>(ref.size());
}

std::vector<int> max_trace_permutation(const Eigen::MatrixXd& score) {
    const Eigen::Index k = score.rows();
    if (score.cols() != k) throw Error(ErrorCode::DimensionMismatch, "score must be square");
    std::vector<int> s(k);
    std::iota(s.begin(), s.end(), 0);
    if (k > 6) return hungarian_min(-score);
    std::vector<int> best = s;
    double best_val = -std::numeric_limits<double>::infinity();
    do {
        double val = 0.0;
        for (Eigen::Index i = 0; i < k; ++i) val += score(i, s[i]);
        if (val > best_val) {
            best_val = val;
            best = s;
        }
    } while (std::next_permutation(s.begin(), s.end()));
    return best;
}

long hamming_one_hot(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw Error(ErrorCode::DimensionMismatch, "label vectors differ in size");
    long diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] != b[i]) ? 2 : 0;
    return diff;
}

EquivDistance distance_up_to_equiv(const Assignment& a, const Assignment& a_star,
                                   Eigen::Index g, Eigen::Index m) {
    check_same_shape(a, a_star);
    validate_assignment(a, g, m);
    validate_assignment(a_star, g, m);
    // permute_assignment(a, (s, t)) agrees with z*_i = k exactly when z_i = s(k),
    // so the number of agreeing rows is sum_k C(k, s(k)).
    const Eigen::MatrixXd cz = count_table(a_star.z, a.z, g);
    const Eigen::MatrixXd cw = count_table(a_star.w, a.w, m);
    EquivDistance r;
    r.best.s = max_trace_permutation(cz);
    r.best.t = max_trace_permutation(cw);
    long agree_z = 0, agree_w = 0;
    for (Eigen::Index k = 0; k < g; ++k) agree_z += static_cast<long>(cz(k, r.best.s[k]));
    for (Eigen::Index l = 0; l < m; ++l) agree_w += static_cast<long>(cw(l, r.best.t[l]));
    r.dist_z = 2 * (static_cast<long>(a.n()) - agree_z);
    r.dist_w = 2 * (static_cast<long>(a.d()) - agree_w);
    return r;
}

bool in_local_ball(const Assignment& a, const Assignment& a_star, Eigen::Index g,
                   Eigen::Index m, double r) {
    const EquivDistance dist = distance_up_to_equiv(a, a_star, g, m);
    return static_cast<double>(dist.dist_z) <= r * static_cast<double>(a.n()) &&
           static_cast<double>(dist.dist_w) <= r * static_cast<double>(a.d());
}

}  // namespace lbm
