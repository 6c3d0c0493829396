#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "hfsl/core/error.hpp"

namespace hfsl::nn {

inline constexpr double kProbClamp = 1e-7;

// Branches on sign so exp() never overflows. The result is kept strictly
// inside (0, 1): past |x| ~ 37 the exact value rounds to 1 (or underflows
// to 0 past ~745), so it is pinned to the nearest representable interior value.
inline double sigmoid(double x) {
    double s;
    if (x >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        s = e / (1.0 + e);
    }
    return std::clamp(s, std::numeric_limits<double>::denorm_min(), 1.0 - std::numeric_limits<double>::epsilon() / 2);
}

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// BCE of a logit: -y log s(x) - (1-y) log(1-s(x)) = softplus(x) - y x.
inline double bce_with_logit(int y, double logit) {
    return softplus(logit) - static_cast<double>(y) * logit;
}

// Mean binary cross-entropy over the batch; p is clamped to
// [kProbClamp, 1 - kProbClamp] before the logs.
inline double bce_loss(std::span<const int> y, std::span<const double> p) {
    if (y.size() != p.size()) throw DimensionError("bce_loss: label/probability length mismatch");
    if (y.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double q = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
        total += y[i] ? -std::log(q) : -std::log1p(-q);
    }
    return total / static_cast<double>(y.size());
}

}  // namespace hfsl::nn
