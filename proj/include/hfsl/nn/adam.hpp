#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hfsl/nn/params.hpp"

namespace hfsl::nn {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
    std::uint64_t step_count = 0;

    template <ParameterSet P>
    static AdamState for_params(const P& params, AdamConfig config = {}) {
        AdamState s;
        s.config = config;
        for (auto t : params.tensors()) {
            s.first_moment.emplace_back(t.size(), 0.0);
            s.second_moment.emplace_back(t.size(), 0.0);
        }
        return s;
    }
};

// One bias-corrected Adam update of `params` in place.
template <ParameterSet P>
void adam_step(P& params, const P& grads, AdamState& state) {
    require_same_shape(params, grads, "adam_step");
    auto pt = params.tensors();
    const auto gt = grads.tensors();
    if (state.first_moment.size() != pt.size()) {
        throw DimensionError("adam_step: optimizer state belongs to a different parameter set");
    }
    for (std::size_t i = 0; i < pt.size(); ++i) {
        if (state.first_moment[i].size() != pt[i].size()) {
            throw DimensionError("adam_step: moment shape mismatch at tensor " + std::to_string(i));
        }
    }
    state.step_count += 1;
    const auto& c = state.config;
    const double t = static_cast<double>(state.step_count);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < pt.size(); ++i) {
        auto& m = state.first_moment[i];
        auto& v = state.second_moment[i];
        for (std::size_t j = 0; j < pt[i].size(); ++j) {
            const double g = gt[i][j];
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
            const double m_hat = m[j] / correction1;
            const double v_hat = v[j] / correction2;
            pt[i][j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
    }
}

}  // namespace hfsl::nn
