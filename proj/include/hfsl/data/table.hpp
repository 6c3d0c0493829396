#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hfsl/core/error.hpp"

namespace hfsl::data {

// Missing feature marker. Only DataTable may contain it; imputation removes
// it before anything reaches nn::Matrix.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

// Raw tabular data in the unified (X, T, Y, client_id) schema.
struct DataTable {
    std::vector<std::string> feature_names;
    std::vector<double> features;  // row-major, rows() x cols()
    std::vector<int> treatment;
    std::vector<int> outcome;
    std::vector<std::string> client_id;
    // Set once features have been imputed and standardized; standardizing
    // is not idempotent, so apply_preprocess refuses such tables.
    bool preprocessed = false;

    std::size_t rows() const noexcept { return treatment.size(); }
    std::size_t cols() const noexcept { return feature_names.size(); }

    double feature(std::size_t r, std::size_t c) const { return features[r * cols() + c]; }
    double& feature(std::size_t r, std::size_t c) { return features[r * cols() + c]; }

    std::size_t missing_count() const {
        std::size_t n = 0;
        for (double v : features) n += is_missing(v) ? 1 : 0;
        return n;
    }

    void validate() const {
        if (rows() == 0) throw ValidationError("table has no rows");
        if (cols() == 0) throw ValidationError("table has no feature columns");
        if (features.size() != rows() * cols()) throw ValidationError("feature block size mismatch");
        if (outcome.size() != rows() || client_id.size() != rows()) {
            throw ValidationError("column lengths differ");
        }
        for (std::size_t r = 0; r < rows(); ++r) {
            if (treatment[r] != 0 && treatment[r] != 1) {
                throw ValidationError("row " + std::to_string(r) + ": treatment must be 0 or 1");
            }
            if (outcome[r] != 0 && outcome[r] != 1) {
                throw ValidationError("row " + std::to_string(r) + ": outcome must be 0 or 1");
            }
        }
    }

    // Tables are compared with missing == missing.
    friend bool operator==(const DataTable& a, const DataTable& b) {
        if (a.feature_names != b.feature_names || a.treatment != b.treatment ||
            a.outcome != b.outcome || a.client_id != b.client_id ||
            a.features.size() != b.features.size()) {
            return false;
        }
        for (std::size_t i = 0; i < a.features.size(); ++i) {
            const double x = a.features[i];
            const double y = b.features[i];
            if (is_missing(x) != is_missing(y)) return false;
            if (!is_missing(x) && x != y) return false;
        }
        return true;
    }
};

}  // namespace hfsl::data
