#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "hfsl/core/rng.hpp"
#include "hfsl/eval/metrics.hpp"

namespace hfsl::eval {

struct UpliftCurve {
    std::vector<double> q;      // targeting fractions, strictly increasing, last == 1
    std::vector<double> u;      // treated minus control outcome rate in the prefix
    std::vector<bool> defined;  // false where the prefix lacks an arm (u is 0 there)
    double auuc = 0.0;
    double end_uplift = 0.0;    // u(1)
};

// q = 1/points, 2/points, ..., 1.
inline std::vector<double> default_grid(std::size_t points = 100) {
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i) g[i] = static_cast<double>(i + 1) / static_cast<double>(points);
    return g;
}

inline void validate_grid(std::span<const double> grid) {
    if (grid.empty()) throw ValidationError("uplift grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0 && grid[i] <= 1.0)) throw ValidationError("uplift grid values must lie in (0, 1]");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw ValidationError("uplift grid must be strictly increasing");
    }
    if (grid.back() != 1.0) throw ValidationError("uplift grid must end at 1");
}

// Trapezoid over the defined points divided by the q-range they cover.
// Computed relative to the last defined value, so a flat curve returns
// that value exactly.
inline double auuc_from_points(std::span<const double> q, std::span<const double> u, const std::vector<bool>& defined) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (defined[i]) idx.push_back(i);
    }
    if (idx.empty()) throw EvaluationInfeasible("uplift curve has no defined points");
    const double ref = u[idx.back()];
    if (idx.size() == 1) return ref;
    double area = 0.0;
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
        const auto a = idx[k];
        const auto b = idx[k + 1];
        area += (q[b] - q[a]) * 0.5 * ((u[a] - ref) + (u[b] - ref));
    }
    return ref + area / (q[idx.back()] - q[idx.front()]);
}

// Rows ranked by tau descending (stable in row order). A prefix never splits
// a group of equal scores: it is extended to the end of the group, so the
// order inside a tie group cannot affect the curve.
inline UpliftCurve uplift_curve(std::span<const double> tau, std::span<const int> t, std::span<const int> y,
                                std::span<const double> grid) {
    const std::size_t n = tau.size();
    if (t.size() != n || y.size() != n) throw DimensionError("uplift_curve: length mismatch");
    validate_grid(grid);
    std::size_t n_treated = 0;
    for (int v : t) n_treated += v == 1 ? 1 : 0;
    if (n == 0 || n_treated == 0 || n_treated == n) {
        throw EvaluationInfeasible("uplift_curve: evaluation rows lack a treatment arm");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return tau[a] > tau[b]; });

    // Prefix sums over ranked positions: treated count/positives, control count/positives.
    std::vector<double> n1(n + 1, 0.0), y1(n + 1, 0.0), n0(n + 1, 0.0), y0(n + 1, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        const auto i = order[p];
        const bool treated = t[i] == 1;
        n1[p + 1] = n1[p] + (treated ? 1.0 : 0.0);
        y1[p + 1] = y1[p] + (treated ? static_cast<double>(y[i]) : 0.0);
        n0[p + 1] = n0[p] + (treated ? 0.0 : 1.0);
        y0[p + 1] = y0[p] + (treated ? 0.0 : static_cast<double>(y[i]));
    }
    // group_end[p]: one past the last ranked position tied with position p.
    std::vector<std::size_t> group_end(n);
    for (std::size_t p = n; p-- > 0;) {
        group_end[p] = (p + 1 < n && tau[order[p + 1]] == tau[order[p]]) ? group_end[p + 1] : p + 1;
    }

    UpliftCurve c;
    c.q.assign(grid.begin(), grid.end());
    c.u.assign(grid.size(), 0.0);
    c.defined.assign(grid.size(), false);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        auto k = static_cast<std::size_t>(std::ceil(grid[g] * static_cast<double>(n) - 1e-9));
        k = std::clamp<std::size_t>(k, 1, n);
        k = group_end[k - 1];
        if (n1[k] > 0.0 && n0[k] > 0.0) {
            c.u[g] = y1[k] / n1[k] - y0[k] / n0[k];
            c.defined[g] = true;
        }
    }
    c.end_uplift = c.u.back();
    c.auuc = auuc_from_points(c.q, c.u, c.defined);
    return c;
}

// AUUC of uniformly random rankings of the same rows.
inline MeanStd random_ranking_auuc(std::span<const int> t, std::span<const int> y, std::size_t reps, Rng& rng,
                                   std::span<const double> grid) {
    if (reps < 1) throw ValidationError("random_ranking_auuc: reps must be >= 1");
    std::vector<double> values;
    values.reserve(reps);
    std::vector<double> scores(t.size());
    for (std::size_t r = 0; r < reps; ++r) {
        const auto perm = rng.permutation(t.size());
        for (std::size_t i = 0; i < perm.size(); ++i) scores[i] = static_cast<double>(perm[i]);
        values.push_back(uplift_curve(scores, t, y, grid).auuc);
    }
    return mean_std(values);
}

}  // namespace hfsl::eval
