#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "hfsl/core/rng.hpp"
#include "hfsl/nn/matrix.hpp"
#include "hfsl/nn/params.hpp"

namespace hfsl::nn {

inline constexpr std::size_t kHiddenWidth = 64;
inline constexpr std::size_t kCutWidth = 32;

struct DenseLayer {
    Matrix weights;  // out x in
    std::vector<double> bias;

    DenseLayer() = default;
    DenseLayer(std::size_t in, std::size_t out) : weights(out, in), bias(out, 0.0) {}

    std::size_t in() const noexcept { return weights.cols(); }
    std::size_t out() const noexcept { return weights.rows(); }

    // Glorot-uniform weights, zero bias.
    void init_glorot(Rng& rng) {
        const double limit = std::sqrt(6.0 / static_cast<double>(in() + out()));
        for (double& w : weights.values()) w = rng.uniform(-limit, limit);
        std::fill(bias.begin(), bias.end(), 0.0);
    }

    std::vector<std::span<double>> tensors() { return {weights.values(), std::span<double>(bias)}; }
    std::vector<std::span<const double>> tensors() const {
        return {weights.values(), std::span<const double>(bias)};
    }
};

// Y = X W^T + b.
inline Matrix dense_forward(const DenseLayer& layer, const Matrix& x) {
    require_cols(x, layer.in(), "dense_forward");
    Matrix y(x.rows(), layer.out());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto xr = x.row(r);
        auto yr = y.row(r);
        for (std::size_t o = 0; o < layer.out(); ++o) {
            auto w = layer.weights.row(o);
            double acc = layer.bias[o];
            for (std::size_t i = 0; i < xr.size(); ++i) acc += w[i] * xr[i];
            yr[o] = acc;
        }
    }
    return y;
}

struct DenseGrad {
    DenseLayer params;
    Matrix grad_input;
};

// Gradients of a dense layer given dL/dY; grad_input only when requested.
inline DenseGrad dense_backward(const DenseLayer& layer, const Matrix& x, const Matrix& grad_out,
                                bool want_input_grad = true) {
    DenseGrad g{DenseLayer(layer.in(), layer.out()), Matrix()};
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto xr = x.row(r);
        auto gr = grad_out.row(r);
        for (std::size_t o = 0; o < layer.out(); ++o) {
            const double go = gr[o];
            if (go == 0.0) continue;
            auto gw = g.params.weights.row(o);
            for (std::size_t i = 0; i < xr.size(); ++i) gw[i] += go * xr[i];
            g.params.bias[o] += go;
        }
    }
    if (want_input_grad) {
        g.grad_input = Matrix(x.rows(), layer.in());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            auto gr = grad_out.row(r);
            auto gi = g.grad_input.row(r);
            for (std::size_t o = 0; o < layer.out(); ++o) {
                const double go = gr[o];
                if (go == 0.0) continue;
                auto w = layer.weights.row(o);
                for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go * w[i];
            }
        }
    }
    return g;
}

inline Matrix relu(Matrix m) {
    for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
    return m;
}

// grad * 1[pre > 0]
inline Matrix relu_backward(const Matrix& pre, Matrix grad) {
    auto p = pre.values();
    auto g = grad.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(p[i] > 0.0)) g[i] = 0.0;
    }
    return grad;
}

// Client-side feature extractor: d -> 64 -> 32, ReLU after each layer.
struct TrunkParams {
    DenseLayer hidden;
    DenseLayer cut;

    TrunkParams() = default;
    explicit TrunkParams(std::size_t input_dim)
        : hidden(input_dim, kHiddenWidth), cut(kHiddenWidth, kCutWidth) {}

    static TrunkParams glorot(std::size_t input_dim, Rng& rng) {
        TrunkParams t(input_dim);
        t.hidden.init_glorot(rng);
        t.cut.init_glorot(rng);
        return t;
    }

    std::size_t input_dim() const noexcept { return hidden.in(); }

    std::vector<std::span<double>> tensors() {
        auto a = hidden.tensors();
        auto b = cut.tensors();
        a.insert(a.end(), b.begin(), b.end());
        return a;
    }
    std::vector<std::span<const double>> tensors() const {
        auto a = hidden.tensors();
        auto b = cut.tensors();
        a.insert(a.end(), b.begin(), b.end());
        return a;
    }
};

// One logit from the 32-dim cut representation.
struct HeadParams {
    std::vector<double> weights = std::vector<double>(kCutWidth, 0.0);
    double bias = 0.0;

    static HeadParams glorot(Rng& rng) {
        HeadParams h;
        const double limit = std::sqrt(6.0 / static_cast<double>(kCutWidth + 1));
        for (double& w : h.weights) w = rng.uniform(-limit, limit);
        return h;
    }

    std::vector<std::span<double>> tensors() {
        return {std::span<double>(weights), std::span<double>(&bias, 1)};
    }
    std::vector<std::span<const double>> tensors() const {
        return {std::span<const double>(weights), std::span<const double>(&bias, 1)};
    }
};

// Treated (phi_1) and control (phi_0) heads, always updated together.
struct Heads {
    HeadParams treated;
    HeadParams control;

    static Heads glorot(Rng& rng) {
        Heads h;
        h.treated = HeadParams::glorot(rng);
        h.control = HeadParams::glorot(rng);
        return h;
    }

    std::vector<std::span<double>> tensors() {
        auto a = treated.tensors();
        auto b = control.tensors();
        a.insert(a.end(), b.begin(), b.end());
        return a;
    }
    std::vector<std::span<const double>> tensors() const {
        auto a = treated.tensors();
        auto b = control.tensors();
        a.insert(a.end(), b.begin(), b.end());
        return a;
    }
};

static_assert(ParameterSet<DenseLayer>);
static_assert(ParameterSet<TrunkParams>);
static_assert(ParameterSet<HeadParams>);
static_assert(ParameterSet<Heads>);

}  // namespace hfsl::nn
