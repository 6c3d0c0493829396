#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "hfsl/nn/loss.hpp"
#include "hfsl/nn/matrix.hpp"

namespace hfsl::nn {

struct LogisticConfig {
    double l2 = 1e-4;  // on weights only; the bias is unpenalized
    int max_iterations = 2000;
    double step_size = 0.1;
    double gradient_tolerance = 1e-6;
};

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;
    int iterations = 0;
    bool converged = false;

    double logit(std::span<const double> x) const {
        double acc = bias;
        for (std::size_t j = 0; j < weights.size(); ++j) acc += weights[j] * x[j];
        return acc;
    }

    std::vector<double> predict_proba(const Matrix& x) const {
        require_cols(x, weights.size(), "logistic predict");
        std::vector<double> p(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) p[r] = sigmoid(logit(x.row(r)));
        return p;
    }
};

namespace detail {

inline double logistic_objective(const Matrix& x, std::span<const int> y, const std::vector<double>& w,
                                  double b, double l2) {
    double total = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double z = b;
        auto xr = x.row(r);
        for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * xr[j];
        total += bce_with_logit(y[r], z);
    }
    double penalty = 0.0;
    for (double v : w) penalty += v * v;
    return total / static_cast<double>(x.rows()) + 0.5 * l2 * penalty;
}

}  // namespace detail

// Full-batch gradient descent on mean BCE + (l2/2)|w|^2. A step that would
// raise the objective is rejected and the step size halved.
inline LogisticModel train_logistic(const Matrix& x, std::span<const int> y, const LogisticConfig& config = {}) {
    if (x.rows() != y.size()) throw DimensionError("train_logistic: row/label mismatch");
    std::size_t positives = 0;
    for (int v : y) {
        if (v != 0 && v != 1) throw ValidationError("train_logistic: labels must be 0/1");
        positives += static_cast<std::size_t>(v);
    }
    if (positives == 0 || positives == y.size()) {
        throw DegenerateLabelsError("train_logistic: labels contain a single class");
    }
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const double inv_n = 1.0 / static_cast<double>(n);

    LogisticModel model;
    model.weights.assign(d, 0.0);
    double step = config.step_size;
    double objective = detail::logistic_objective(x, y, model.weights, model.bias, config.l2);
    std::vector<double> gw(d);
    std::vector<double> cand(d);

    for (int it = 0; it < config.max_iterations; ++it) {
        std::fill(gw.begin(), gw.end(), 0.0);
        double gb = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            auto xr = x.row(r);
            const double residual = sigmoid(model.logit(xr)) - static_cast<double>(y[r]);
            for (std::size_t j = 0; j < d; ++j) gw[j] += residual * xr[j];
            gb += residual;
        }
        double norm2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            gw[j] = gw[j] * inv_n + config.l2 * model.weights[j];
            norm2 += gw[j] * gw[j];
        }
        gb *= inv_n;
        norm2 += gb * gb;
        model.iterations = it;
        if (std::sqrt(norm2) < config.gradient_tolerance) {
            model.converged = true;
            return model;
        }
        while (true) {
            for (std::size_t j = 0; j < d; ++j) cand[j] = model.weights[j] - step * gw[j];
            const double cand_b = model.bias - step * gb;
            const double cand_obj = detail::logistic_objective(x, y, cand, cand_b, config.l2);
            if (cand_obj <= objective) {
                model.weights = cand;
                model.bias = cand_b;
                objective = cand_obj;
                break;
            }
            step *= 0.5;
            if (step < 1e-12) {
                // No descent possible at machine precision: stationary for our purposes.
                model.converged = true;
                return model;
            }
        }
    }
    model.iterations = config.max_iterations;
    return model;
}

}  // namespace hfsl::nn
