#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "hfsl/core/error.hpp"

namespace hfsl::eval {

// Probability that a random positive outranks a random negative, ties
// counting one half. Mid-rank (Mann-Whitney) formulation, O(n log n).
inline double auroc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DimensionError("auroc: length mismatch");
    double n_pos = 0.0, n_neg = 0.0;
    for (int l : labels) {
        if (l == 1) {
            n_pos += 1.0;
        } else if (l == 0) {
            n_neg += 1.0;
        } else {
            throw ValidationError("auroc: labels must be 0/1");
        }
    }
    if (n_pos == 0.0 || n_neg == 0.0) throw EvaluationInfeasible("auroc: labels contain a single class");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        // Ranks i+1 .. j+1 share their average.
        const double mid = 0.5 * static_cast<double>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]] == 1) pos_rank_sum += mid;
        }
        i = j + 1;
    }
    return (pos_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

// Population standard deviation.
inline MeanStd mean_std(std::span<const double> v) {
    if (v.empty()) return {};
    double s = 0.0;
    for (double x : v) s += x;
    const double m = s / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}

// Spearman rank correlation (mid-ranks for ties).
inline double spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw DimensionError("spearman: need two equal-length samples");
    auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> order(v.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        std::size_t i = 0;
        while (i < order.size()) {
            std::size_t j = i;
            while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
            for (std::size_t k = i; k <= j; ++k) r[order[k]] = 0.5 * static_cast<double>(i + j);
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const auto ma = mean_std(ra);
    const auto mb = mean_std(rb);
    double cov = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) cov += (ra[i] - ma.mean) * (rb[i] - mb.mean);
    cov /= static_cast<double>(ra.size());
    return cov / (ma.std * mb.std);
}

}  // namespace hfsl::eval
