#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace glupruner {

// Dense row-major matrix. Tensor2D (f32) carries weights and activations,
// ScoreMatrix (f64) carries importance scores, KeepMatrix carries masks.
template <typename T>
class Matrix {
public:
    using value_type = T;

    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            fail(ErrorCode::Dimension,
                 "matrix data length " + std::to_string(data_.size()) + " does not match " +
                     std::to_string(rows_) + "x" + std::to_string(cols_));
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    const std::vector<T>& values() const noexcept { return data_; }

    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    Matrix transposed() const {
        Matrix out(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r) {
            for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
        }
        return out;
    }

    friend bool operator==(const Matrix& a, const Matrix& b) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using Tensor2D = Matrix<float>;
using ScoreMatrix = Matrix<double>;
using KeepMatrix = Matrix<std::uint8_t>;

std::string shape_string(std::size_t rows, std::size_t cols);

template <typename T>
std::string shape_string(const Matrix<T>& m) {
    return shape_string(m.rows(), m.cols());
}

bool all_finite(const Tensor2D& t);

// Bitwise equality (distinguishes -0.0 from 0.0, unlike operator==).
bool bit_equal(const Tensor2D& a, const Tensor2D& b);

// a (n x k) times b (k x m), f32 inputs with f64 accumulation per output.
Tensor2D matmul(const Tensor2D& a, const Tensor2D& b);

Tensor2D vconcat(const Tensor2D& top, const Tensor2D& bottom);

double frobenius_norm(const Tensor2D& t);

} // namespace glupruner
