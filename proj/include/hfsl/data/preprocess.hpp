#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hfsl/data/table.hpp"
#include "hfsl/nn/matrix.hpp"

namespace hfsl::data {

inline constexpr double kStdFloor = 1e-8;

// Imputation and standardization statistics, fit on training rows only.
struct PreprocessStats {
    std::vector<double> median;
    std::vector<double> mean;
    std::vector<double> std;
    // Features with no observed training value; they fall back to median 0.
    std::vector<bool> fallback;

    std::size_t cols() const noexcept { return median.size(); }
    bool any_fallback() const { return std::find(fallback.begin(), fallback.end(), true) != fallback.end(); }
    bool degenerate(std::size_t c) const { return std[c] <= kStdFloor; }
};

inline PreprocessStats fit_preprocess(const DataTable& table, std::span<const std::size_t> train) {
    if (train.empty()) throw ValidationError("fit_preprocess: empty training split");
    const std::size_t d = table.cols();
    PreprocessStats s{std::vector<double>(d), std::vector<double>(d), std::vector<double>(d),
                      std::vector<bool>(d, false)};
    std::vector<double> values;
    for (std::size_t c = 0; c < d; ++c) {
        values.clear();
        for (auto r : train) {
            const double v = table.feature(r, c);
            if (!is_missing(v)) values.push_back(v);
        }
        double median = 0.0;
        if (values.empty()) {
            s.fallback[c] = true;
        } else {
            std::sort(values.begin(), values.end());
            const std::size_t k = values.size();
            median = k % 2 ? values[k / 2] : 0.5 * (values[k / 2 - 1] + values[k / 2]);
        }
        s.median[c] = median;

        double sum = 0.0;
        for (auto r : train) {
            const double v = table.feature(r, c);
            sum += is_missing(v) ? median : v;
        }
        const double mean = sum / static_cast<double>(train.size());
        double ss = 0.0;
        for (auto r : train) {
            const double v = table.feature(r, c);
            const double x = (is_missing(v) ? median : v) - mean;
            ss += x * x;
        }
        s.mean[c] = mean;
        s.std[c] = std::max(std::sqrt(ss / static_cast<double>(train.size())), kStdFloor);
    }
    return s;
}

// Imputes with the stored median then standardizes. Degenerate (constant)
// features map to 0. Rejects tables already marked as preprocessed.
inline nn::Matrix apply_preprocess(const PreprocessStats& stats, const DataTable& table,
                                   std::span<const std::size_t> rows) {
    if (table.preprocessed) throw ContractError("apply_preprocess: table is already preprocessed");
    if (table.cols() != stats.cols()) {
        throw DimensionError("apply_preprocess: table has " + std::to_string(table.cols()) +
                             " features, stats have " + std::to_string(stats.cols()));
    }
    nn::Matrix out(rows.size(), stats.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < stats.cols(); ++c) {
            if (stats.degenerate(c)) {
                out(i, c) = 0.0;
                continue;
            }
            double v = table.feature(rows[i], c);
            if (is_missing(v)) v = stats.median[c];
            out(i, c) = (v - stats.mean[c]) / stats.std[c];
        }
    }
    return out;
}

// Whole table through the stats, flagged as preprocessed.
inline DataTable preprocessed_table(const PreprocessStats& stats, const DataTable& table) {
    std::vector<std::size_t> rows(table.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    const auto m = apply_preprocess(stats, table, rows);
    DataTable out = table;
    out.features.assign(m.values().begin(), m.values().end());
    out.preprocessed = true;
    return out;
}

inline std::vector<std::size_t> all_rows(const DataTable& table) {
    std::vector<std::size_t> idx(table.rows());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
}

}  // namespace hfsl::data
