#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "hfsl/core/rng.hpp"
#include "hfsl/data/table.hpp"

namespace hfsl::data {

struct SplitFractions {
    double train = 0.70;
    double valid = 0.15;
    double test = 0.15;

    void validate() const {
        if (!(train > 0.0) || !(valid > 0.0) || !(test > 0.0)) {
            throw ValidationError("split fractions must all be positive");
        }
        if (std::abs(train + valid + test - 1.0) > 1e-9) {
            throw ValidationError("split fractions must sum to 1");
        }
    }
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
};

namespace detail {

// Per-class allocation: rounded fractions, then nudged so every split gets
// at least one row and the total is exact.
inline std::array<std::size_t, 3> allocate(std::size_t n, const SplitFractions& f) {
    std::array<long long, 3> c{std::llround(f.train * static_cast<double>(n)),
                               std::llround(f.valid * static_cast<double>(n)), 0};
    c[2] = static_cast<long long>(n) - c[0] - c[1];
    auto largest = [&] {
        return static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
    };
    for (int guard = 0; guard < 16; ++guard) {
        bool changed = false;
        for (auto& v : c) {
            if (v < 1) {
                const auto big = largest();
                c[big] -= 1 - v;
                v = 1;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return {static_cast<std::size_t>(c[0]), static_cast<std::size_t>(c[1]), static_cast<std::size_t>(c[2])};
}

}  // namespace detail

// Shuffles each outcome class separately and allocates it by the fractions.
// Index sets come back sorted.
inline SplitIndices stratified_split(std::span<const int> outcome, const SplitFractions& fractions, Rng& rng) {
    fractions.validate();
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < outcome.size(); ++i) {
        if (outcome[i] != 0 && outcome[i] != 1) throw ValidationError("outcome must be 0/1");
        by_class[static_cast<std::size_t>(outcome[i])].push_back(i);
    }
    SplitIndices out;
    // Negatives first, then positives: a fixed order keeps the rng stream stable.
    for (auto& rows : by_class) {
        if (rows.size() < 3) {
            throw StratificationError("each outcome class needs at least 3 rows, got " +
                                      std::to_string(rows.size()));
        }
        rng.shuffle(rows);
        const auto counts = detail::allocate(rows.size(), fractions);
        auto it = rows.begin();
        out.train.insert(out.train.end(), it, it + static_cast<std::ptrdiff_t>(counts[0]));
        it += static_cast<std::ptrdiff_t>(counts[0]);
        out.valid.insert(out.valid.end(), it, it + static_cast<std::ptrdiff_t>(counts[1]));
        it += static_cast<std::ptrdiff_t>(counts[1]);
        out.test.insert(out.test.end(), it, rows.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.valid.begin(), out.valid.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

inline SplitIndices stratified_split(const DataTable& table, const SplitFractions& fractions, Rng& rng) {
    return stratified_split(std::span<const int>(table.outcome), fractions, rng);
}

}  // namespace hfsl::data
