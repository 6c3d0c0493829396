#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hfsl/nn/layers.hpp"
#include "hfsl/nn/loss.hpp"

namespace hfsl::nn {

// Everything trunk_backward needs from the forward pass. The checksum pins
// the parameter state the pass was computed with.
struct TrunkPass {
    Matrix input;
    Matrix hidden_pre;
    Matrix hidden;
    Matrix cut_pre;
    Matrix z;
    std::uint64_t params_checksum = 0;
};

inline TrunkPass forward_trunk(const TrunkParams& trunk, const Matrix& x) {
    require_cols(x, trunk.input_dim(), "forward_trunk");
    if (x.rows() == 0) throw DimensionError("forward_trunk: empty batch");
    TrunkPass pass;
    pass.input = x;
    pass.hidden_pre = dense_forward(trunk.hidden, x);
    pass.hidden = relu(pass.hidden_pre);
    pass.cut_pre = dense_forward(trunk.cut, pass.hidden);
    pass.z = relu(pass.cut_pre);
    pass.params_checksum = checksum(trunk);
    return pass;
}

inline std::vector<double> forward_head(const HeadParams& head, const Matrix& z) {
    require_cols(z, kCutWidth, "forward_head");
    std::vector<double> logits(z.rows());
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto zr = z.row(r);
        double acc = head.bias;
        for (std::size_t j = 0; j < kCutWidth; ++j) acc += head.weights[j] * zr[j];
        logits[r] = acc;
    }
    return logits;
}

inline void require_binary(std::span<const int> v, const char* what) {
    for (int x : v) {
        if (x != 0 && x != 1) throw ValidationError(std::string(what) + ": values must be 0/1");
    }
}

// Server side of the factual objective: mean BCE of the head selected by
// each sample's treatment, its head gradients and dL/dz.
struct HeadBackward {
    Heads grads;
    Matrix grad_z;
    double loss = 0.0;
};

inline HeadBackward head_backward(const Heads& heads, const Matrix& z, std::span<const int> t,
                                  std::span<const int> y) {
    require_cols(z, kCutWidth, "head_backward");
    if (t.size() != z.rows() || y.size() != z.rows()) {
        throw DimensionError("head_backward: batch length mismatch");
    }
    require_binary(t, "treatment");
    require_binary(y, "outcome");
    const auto logit1 = forward_head(heads.treated, z);
    const auto logit0 = forward_head(heads.control, z);
    const double inv_b = 1.0 / static_cast<double>(z.rows());

    HeadBackward out{zeros_like(heads), Matrix(z.rows(), kCutWidth), 0.0};
    double total = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        const bool treated = t[i] == 1;
        const double logit = treated ? logit1[i] : logit0[i];
        total += bce_with_logit(y[i], logit);
        const double g = (sigmoid(logit) - static_cast<double>(y[i])) * inv_b;
        const HeadParams& h = treated ? heads.treated : heads.control;
        HeadParams& gh = treated ? out.grads.treated : out.grads.control;
        auto zr = z.row(i);
        auto gz = out.grad_z.row(i);
        for (std::size_t j = 0; j < kCutWidth; ++j) {
            gh.weights[j] += g * zr[j];
            gz[j] = g * h.weights[j];
        }
        gh.bias += g;
    }
    out.loss = total * inv_b;
    return out;
}

// Client side: dL/dtheta from dL/dz. Throws if the trunk changed since the
// forward pass.
inline TrunkParams trunk_backward(const TrunkParams& trunk, const TrunkPass& pass,
                                  const Matrix& grad_z) {
    if (checksum(trunk) != pass.params_checksum) {
        throw ContractError("trunk_backward: cache was produced by different trunk parameters");
    }
    if (grad_z.rows() != pass.z.rows() || grad_z.cols() != kCutWidth) {
        throw DimensionError("trunk_backward: grad_z shape mismatch");
    }
    Matrix g_cut_pre = relu_backward(pass.cut_pre, grad_z);
    auto cut = dense_backward(trunk.cut, pass.hidden, g_cut_pre, true);
    Matrix g_hidden_pre = relu_backward(pass.hidden_pre, std::move(cut.grad_input));
    auto hidden = dense_backward(trunk.hidden, pass.input, g_hidden_pre, false);
    TrunkParams grads;
    grads.hidden = std::move(hidden.params);
    grads.cut = std::move(cut.params);
    return grads;
}

struct ModelGradients {
    TrunkParams trunk;
    Heads heads;
    Matrix grad_z;
    double loss = 0.0;
};

// Full two-head gradient, composed from the same server and client halves
// the split protocols use.
inline ModelGradients backprop(const TrunkParams& trunk, const Heads& heads, const TrunkPass& pass,
                               std::span<const int> t, std::span<const int> y) {
    auto hb = head_backward(heads, pass.z, t, y);
    auto tg = trunk_backward(trunk, pass, hb.grad_z);
    return {std::move(tg), std::move(hb.grads), std::move(hb.grad_z), hb.loss};
}

// Mean factual loss without gradients.
inline double factual_loss(const TrunkParams& trunk, const Heads& heads, const Matrix& x,
                           std::span<const int> t, std::span<const int> y) {
    const auto pass = forward_trunk(trunk, x);
    const auto l1 = forward_head(heads.treated, pass.z);
    const auto l0 = forward_head(heads.control, pass.z);
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) total += bce_with_logit(y[i], t[i] ? l1[i] : l0[i]);
    return total / static_cast<double>(x.rows());
}

}  // namespace hfsl::nn
