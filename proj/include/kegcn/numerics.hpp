#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace kegcn {

using RealVec = std::vector<double>;

/// Dense row-major matrix of doubles. Vectors are 1 x n, scalars 1 x 1.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
    Tensor(std::size_t rows, std::size_t cols, std::vector<double> values);

    static Tensor from_row(std::vector<double> values);
    static Tensor scalar(double value) { return Tensor(1, 1, value); }
    static Tensor identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    bool same_shape(const Tensor& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double& operator[](std::size_t i) { return data_[i]; }
    const double& operator[](std::size_t i) const { return data_[i]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    /// Scalar value of a 1 x 1 tensor.
    double item() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// True when both tensors have the same shape and identical bit patterns.
bool bitwise_equal(const Tensor& a, const Tensor& b);

double max_abs_difference(const Tensor& a, const Tensor& b);

// Quaternion algebra. Quaternion vectors are stored as consecutive (a, b, c, d)
// real coordinates; complex vectors as consecutive (re, im) pairs.

struct Quaternion {
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

    friend bool operator==(const Quaternion&, const Quaternion&) = default;
};

Quaternion hamilton_product(const Quaternion& p, const Quaternion& q);
Quaternion conjugate(const Quaternion& q);
double norm(const Quaternion& q);
double dot(const Quaternion& p, const Quaternion& q);

/// Element-wise Hamilton product of two quaternion vectors (length multiple of 4).
RealVec hamilton_product(std::span<const double> p, std::span<const double> q);

/// Element-wise complex product of two interleaved complex vectors.
RealVec complex_elementwise_product(std::span<const double> a, std::span<const double> b);

/// result[k] = sum_i a[i] * b[(i + k) mod d]
RealVec circular_correlation(std::span<const double> a, std::span<const double> b);

RealVec matvec(const Tensor& m, std::span<const double> x);
Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T without materializing the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& m);

enum class Activation { relu, sigmoid, identity };

Activation parse_activation(std::string_view token);
std::string_view to_string(Activation kind);

double activate(Activation kind, double x);
RealVec activation(Activation kind, std::span<const double> x);

RealVec softmax_row(std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double l1_distance(std::span<const double> a, std::span<const double> b);
double l2_norm_sq(std::span<const double> a);

bool all_finite(std::span<const double> x);

} // namespace kegcn
