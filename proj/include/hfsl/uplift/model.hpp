#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hfsl/collab/adapter.hpp"
#include "hfsl/nn/backprop.hpp"

namespace hfsl::uplift {

// Shared trunk plus treated/control heads, with an optional client adapter.
struct TwoHeadModel {
    nn::TrunkParams trunk;
    nn::Heads heads;
    std::optional<collab::AdapterParams> adapter;

    static TwoHeadModel init(std::size_t input_dim, Rng& rng) {
        TwoHeadModel m;
        m.trunk = nn::TrunkParams::glorot(input_dim, rng);
        m.heads = nn::Heads::glorot(rng);
        return m;
    }

    std::size_t input_dim() const noexcept { return trunk.input_dim(); }
};

struct MuPair {
    std::vector<double> treated;  // mu1
    std::vector<double> control;  // mu0
};

// Cut representation as the server would see it (adapter applied when present).
inline nn::Matrix cut_representation(const TwoHeadModel& model, const nn::Matrix& x) {
    auto z = nn::forward_trunk(model.trunk, x).z;
    if (model.adapter) z = collab::apply_adapter(z, *model.adapter);
    return z;
}

inline MuPair predict_mu(const TwoHeadModel& model, const nn::Matrix& x) {
    nn::require_cols(x, model.input_dim(), "predict_mu");
    MuPair out;
    if (x.rows() == 0) return out;
    const auto z = cut_representation(model, x);
    out.treated = nn::forward_head(model.heads.treated, z);
    out.control = nn::forward_head(model.heads.control, z);
    for (auto& v : out.treated) v = nn::sigmoid(v);
    for (auto& v : out.control) v = nn::sigmoid(v);
    return out;
}

inline std::vector<double> factual_prob(std::span<const double> mu1, std::span<const double> mu0,
                                        std::span<const int> t) {
    if (mu1.size() != mu0.size() || mu1.size() != t.size()) {
        throw DimensionError("factual_prob: length mismatch");
    }
    std::vector<double> p(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = t[i] ? mu1[i] : mu0[i];
    return p;
}

inline std::vector<double> uplift_score(std::span<const double> mu1, std::span<const double> mu0) {
    if (mu1.size() != mu0.size()) throw DimensionError("uplift_score: length mismatch");
    std::vector<double> tau(mu1.size());
    for (std::size_t i = 0; i < tau.size(); ++i) tau[i] = mu1[i] - mu0[i];
    return tau;
}

}  // namespace hfsl::uplift
