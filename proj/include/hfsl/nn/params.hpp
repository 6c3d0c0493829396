#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <vector>

#include "hfsl/core/error.hpp"

namespace hfsl::nn {

// A parameter set exposes its tensors as flat spans, in a fixed order.
// Gradients are stored in the same type as the parameters they belong to.
template <class P>
concept ParameterSet = std::copyable<P> && requires(P& p, const P& cp) {
    { p.tensors() } -> std::same_as<std::vector<std::span<double>>>;
    { cp.tensors() } -> std::same_as<std::vector<std::span<const double>>>;
};

template <ParameterSet P>
std::size_t parameter_count(const P& p) {
    std::size_t n = 0;
    for (auto t : p.tensors()) n += t.size();
    return n;
}

template <ParameterSet P>
void require_same_shape(const P& a, const P& b, const char* what) {
    const auto ta = a.tensors();
    const auto tb = b.tensors();
    if (ta.size() != tb.size()) throw DimensionError(std::string(what) + ": tensor count mismatch");
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (ta[i].size() != tb[i].size()) {
            throw DimensionError(std::string(what) + ": tensor " + std::to_string(i) +
                                 " size mismatch");
        }
    }
}

template <ParameterSet P>
P zeros_like(P p) {
    for (auto t : p.tensors()) std::fill(t.begin(), t.end(), 0.0);
    return p;
}

// FNV-1a over the raw bit patterns; identifies an exact parameter state.
template <ParameterSet P>
std::uint64_t checksum(const P& p) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto t : p.tensors()) {
        for (double v : t) {
            auto bits = std::bit_cast<std::uint64_t>(v);
            for (int i = 0; i < 8; ++i) {
                h ^= (bits >> (8 * i)) & 0xFFu;
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

template <ParameterSet P>
double max_abs_diff(const P& a, const P& b) {
    require_same_shape(a, b, "max_abs_diff");
    const auto ta = a.tensors();
    const auto tb = b.tensors();
    double m = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        for (std::size_t j = 0; j < ta[i].size(); ++j) m = std::max(m, std::abs(ta[i][j] - tb[i][j]));
    }
    return m;
}

template <ParameterSet P>
std::vector<double> flatten(const P& p) {
    std::vector<double> out;
    out.reserve(parameter_count(p));
    for (auto t : p.tensors()) out.insert(out.end(), t.begin(), t.end());
    return out;
}

template <ParameterSet P>
bool bit_identical(const P& a, const P& b) {
    const auto fa = flatten(a);
    const auto fb = flatten(b);
    if (fa.size() != fb.size()) return false;
    for (std::size_t i = 0; i < fa.size(); ++i) {
        if (std::bit_cast<std::uint64_t>(fa[i]) != std::bit_cast<std::uint64_t>(fb[i])) return false;
    }
    return true;
}

}  // namespace hfsl::nn
