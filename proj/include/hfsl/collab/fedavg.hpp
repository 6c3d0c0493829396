#pragma once

#include <span>
#include <vector>

#include "hfsl/nn/params.hpp"

namespace hfsl::collab {

// Coordinate-wise sum_k (n_k / sum_j n_j) * w_k, accumulated in client order.
template <nn::ParameterSet P>
P fedavg_aggregate(std::span<const P> sets, std::span<const std::size_t> sizes) {
    if (sets.empty()) throw ValidationError("fedavg_aggregate: no parameter sets");
    if (sets.size() != sizes.size()) throw DimensionError("fedavg_aggregate: sets/sizes length mismatch");
    std::size_t total = 0;
    for (auto n : sizes) {
        if (n == 0) throw ValidationError("fedavg_aggregate: client size must be > 0");
        total += n;
    }
    for (const auto& s : sets) nn::require_same_shape(sets.front(), s, "fedavg_aggregate");

    P out = nn::zeros_like(sets.front());
    auto acc = out.tensors();
    for (std::size_t k = 0; k < sets.size(); ++k) {
        const double w = static_cast<double>(sizes[k]) / static_cast<double>(total);
        const auto src = sets[k].tensors();
        for (std::size_t i = 0; i < acc.size(); ++i) {
            for (std::size_t j = 0; j < acc[i].size(); ++j) acc[i][j] += w * src[i][j];
        }
    }
    return out;
}

template <nn::ParameterSet P>
P fedavg_aggregate(const std::vector<P>& sets, const std::vector<std::size_t>& sizes) {
    return fedavg_aggregate(std::span<const P>(sets), std::span<const std::size_t>(sizes));
}

}  // namespace hfsl::collab
