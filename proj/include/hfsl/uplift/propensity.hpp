#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "hfsl/nn/logistic.hpp"
#include "hfsl/uplift/model.hpp"

namespace hfsl::uplift {

inline constexpr double kPropensityClamp = 0.01;

class DegenerateTreatmentError : public DegenerateLabelsError {
public:
    using DegenerateLabelsError::DegenerateLabelsError;
};

// Logistic model of P(T=1 | x), clamped to [clamp, 1 - clamp].
struct PropensityModel {
    nn::LogisticModel fit;
    double clamp = kPropensityClamp;

    std::vector<double> predict(const nn::Matrix& x) const {
        auto p = fit.predict_proba(x);
        for (auto& v : p) v = std::clamp(v, clamp, 1.0 - clamp);
        return p;
    }
};

inline PropensityModel fit_propensity(const nn::Matrix& x, std::span<const int> t,
                                      const nn::LogisticConfig& config = {}) {
    try {
        return PropensityModel{nn::train_logistic(x, t, config), kPropensityClamp};
    } catch (const DegenerateLabelsError&) {
        throw DegenerateTreatmentError("fit_propensity: training data contains a single treatment arm");
    }
}

// Doubly robust pseudo-effect per row. Diagnostic only; never used in training.
inline std::vector<double> dr_pseudo_effect(std::span<const double> mu1, std::span<const double> mu0,
                                            std::span<const double> e, std::span<const int> t,
                                            std::span<const int> y) {
    const std::size_t n = mu1.size();
    if (mu0.size() != n || e.size() != n || t.size() != n || y.size() != n) {
        throw DimensionError("dr_pseudo_effect: length mismatch");
    }
    const auto mu_t = factual_prob(mu1, mu0, t);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(e[i] > 0.0 && e[i] < 1.0)) {
            throw ContractError("dr_pseudo_effect: propensity must be clamped away from 0 and 1");
        }
        const double weight = (static_cast<double>(t[i]) - e[i]) / (e[i] * (1.0 - e[i]));
        out[i] = (mu1[i] - mu0[i]) + weight * (static_cast<double>(y[i]) - mu_t[i]);
    }
    return out;
}

}  // namespace hfsl::uplift
