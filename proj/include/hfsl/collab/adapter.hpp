#pragma once

#include "hfsl/core/rng.hpp"
#include "hfsl/nn/layers.hpp"

namespace hfsl::collab {

// Client-local residual correction at the cut layer:
//   z~ = z + outer(ReLU(inner(z)))
// Never leaves the client.
struct AdapterParams {
    nn::DenseLayer inner{nn::kCutWidth, nn::kCutWidth};
    nn::DenseLayer outer{nn::kCutWidth, nn::kCutWidth};

    // Glorot inner layer, all-zero outer layer: the adapter starts as the
    // identity map but still receives gradient on its first step.
    static AdapterParams init(Rng& rng) {
        AdapterParams a;
        a.inner.init_glorot(rng);
        return a;
    }

    std::vector<std::span<double>> tensors() {
        auto a = inner.tensors();
        auto b = outer.tensors();
        a.insert(a.end(), b.begin(), b.end());
        return a;
    }
    std::vector<std::span<const double>> tensors() const {
        auto a = inner.tensors();
        auto b = outer.tensors();
        a.insert(a.end(), b.begin(), b.end());
        return a;
    }
};
static_assert(nn::ParameterSet<AdapterParams>);

struct AdapterPass {
    nn::Matrix input;
    nn::Matrix inner_pre;
    nn::Matrix inner;
    nn::Matrix out;  // z~
};

inline AdapterPass adapter_forward(const AdapterParams& a, const nn::Matrix& z) {
    nn::require_cols(z, nn::kCutWidth, "apply_adapter");
    AdapterPass p;
    p.input = z;
    p.inner_pre = nn::dense_forward(a.inner, z);
    p.inner = nn::relu(p.inner_pre);
    p.out = nn::dense_forward(a.outer, p.inner);
    auto o = p.out.values();
    auto zi = z.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += zi[i];
    return p;
}

inline nn::Matrix apply_adapter(const nn::Matrix& z, const AdapterParams& a) {
    return adapter_forward(a, z).out;
}

struct AdapterGrad {
    AdapterParams params;
    nn::Matrix grad_z;
};

// Gradient through both the residual path and the adapter branch.
inline AdapterGrad adapter_backward(const AdapterParams& a, const AdapterPass& pass, const nn::Matrix& grad_out) {
    auto outer = nn::dense_backward(a.outer, pass.inner, grad_out, true);
    nn::Matrix g_inner_pre = nn::relu_backward(pass.inner_pre, std::move(outer.grad_input));
    auto inner = nn::dense_backward(a.inner, pass.input, g_inner_pre, true);
    AdapterGrad g;
    g.params.inner = std::move(inner.params);
    g.params.outer = std::move(outer.params);
    g.grad_z = std::move(inner.grad_input);
    auto gz = g.grad_z.values();
    auto go = grad_out.values();
    for (std::size_t i = 0; i < gz.size(); ++i) gz[i] += go[i];
    return g;
}

}  // namespace hfsl::collab
