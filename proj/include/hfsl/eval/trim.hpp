#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "hfsl/core/error.hpp"

namespace hfsl::eval {

// Closed propensity interval [lo, hi] a row must fall in to be evaluated.
struct TrimBounds {
    double lo = 0.0;
    double hi = 1.0;
    bool keeps(double e) const { return lo <= e && e <= hi; }
};

struct TrimResult {
    std::vector<std::size_t> keep;
    double trim_rate = 0.0;  // |trimmed| / n
    TrimBounds bounds;
};

namespace detail {

inline TrimResult apply_bounds(std::span<const double> e, TrimBounds bounds) {
    TrimResult r;
    r.bounds = bounds;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (bounds.keeps(e[i])) r.keep.push_back(i);
    }
    if (r.keep.empty()) throw EvaluationInfeasible("positivity trimming removed every row");
    r.trim_rate = static_cast<double>(e.size() - r.keep.size()) / static_cast<double>(e.size());
    return r;
}

}  // namespace detail

// Keep i iff alpha <= e_i <= 1 - alpha.
inline TrimResult trim_positivity(std::span<const double> e, double alpha) {
    if (!(alpha >= 0.0 && alpha < 0.5)) throw ValidationError("trim alpha must be in [0, 0.5)");
    if (e.empty()) throw EvaluationInfeasible("trim_positivity: no rows");
    return detail::apply_bounds(e, {alpha, 1.0 - alpha});
}

inline TrimResult trim_bounds(std::span<const double> e, TrimBounds bounds) {
    if (e.empty()) throw EvaluationInfeasible("trim_bounds: no rows");
    return detail::apply_bounds(e, bounds);
}

// Drops round(fraction * n) rows with the most extreme propensities, split
// evenly between the two tails (the odd row goes to the upper tail). The
// returned bounds are the smallest and largest kept propensities, so other
// row sets can be trimmed consistently.
inline TrimResult trim_quantile(std::span<const double> e, double fraction) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw ValidationError("trim fraction must be in [0, 1)");
    const std::size_t n = e.size();
    if (n == 0) throw EvaluationInfeasible("trim_quantile: no rows");
    const auto n_trim = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (n_trim >= n) throw EvaluationInfeasible("trim_quantile: would remove every row");
    const std::size_t low = n_trim / 2;
    const std::size_t high = n_trim - low;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return e[a] < e[b]; });

    TrimResult r;
    r.keep.assign(order.begin() + static_cast<std::ptrdiff_t>(low), order.end() - static_cast<std::ptrdiff_t>(high));
    std::sort(r.keep.begin(), r.keep.end());
    r.trim_rate = static_cast<double>(n_trim) / static_cast<double>(n);
    r.bounds = {e[order[low]], e[order[n - high - 1]]};
    return r;
}

}  // namespace hfsl::eval
