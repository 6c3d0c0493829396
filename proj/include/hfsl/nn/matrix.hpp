#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "hfsl/core/error.hpp"

namespace hfsl::nn {

// Dense row-major matrix of doubles. Carries features, activations,
// gradients and weights; never holds missing values.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                                 " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
        }
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r ? rows.begin()->size() : 0;
        Matrix m(r, c);
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != c) throw DimensionError("ragged initializer");
            std::copy(row.begin(), row.end(), m.row(i++).begin());
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    Matrix select_rows(std::span<const std::size_t> idx) const {
        Matrix out(idx.size(), cols_);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] >= rows_) throw DimensionError("row index out of range");
            std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(idx[i] * cols_), cols_,
                        out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
        }
        return out;
    }

    // Stacks b below a; an empty matrix acts as the identity.
    static Matrix vstack(const Matrix& a, const Matrix& b) {
        if (a.empty()) return b;
        if (b.empty()) return a;
        if (a.cols_ != b.cols_) throw DimensionError("vstack column mismatch");
        Matrix out(a.rows_ + b.rows_, a.cols_);
        std::copy(a.data_.begin(), a.data_.end(), out.data_.begin());
        std::copy(b.data_.begin(), b.data_.end(),
                  out.data_.begin() + static_cast<std::ptrdiff_t>(a.data_.size()));
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void require_cols(const Matrix& m, std::size_t cols, const char* what) {
    if (m.cols() != cols) {
        throw DimensionError(std::string(what) + ": expected " + std::to_string(cols) +
                             " columns, got " + std::to_string(m.cols()));
    }
}

}  // namespace hfsl::nn
