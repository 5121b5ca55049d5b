#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace tplas {

/// Read-only row-major view over a rows x cols block of doubles.
class MatrixView {
public:
    MatrixView() = default;
    MatrixView(const double* data, std::size_t rows, std::size_t cols)
        : data_(data), rows_(rows), cols_(cols) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return rows_ * cols_; }
    const double* data() const { return data_; }

    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const { return {data_ + r * cols_, cols_}; }
    std::span<const double> flat() const { return {data_, size()}; }

private:
    const double* data_ = nullptr;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
};

/// Owning row-major dense matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows_ * cols_) {
            throw std::invalid_argument("Matrix: value count does not match shape");
        }
    }
    explicit Matrix(MatrixView view)
        : rows_(view.rows()), cols_(view.cols()), values_(view.flat().begin(), view.flat().end()) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    const std::vector<double>& values() const { return values_; }

    MatrixView view() const { return {values_.data(), rows_, cols_}; }
    MatrixView row_block(std::size_t first, std::size_t count) const {
        return {values_.data() + first * cols_, count, cols_};
    }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

}  // namespace tplas
