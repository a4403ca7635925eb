#include "kegcn/numerics.hpp"

#include "kegcn/errors.hpp"
#include "kegcn/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

namespace kegcn {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows * cols) {
        throw DimensionError("tensor value count " + std::to_string(data_.size()) +
                             " does not match shape " + std::to_string(rows) + "x" +
                             std::to_string(cols));
    }
}

Tensor Tensor::from_row(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor(1, n, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t(n, n);
    for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

double Tensor::item() const {
    if (rows_ != 1 || cols_ != 1) {
        throw DimensionError("item() requires a 1x1 tensor");
    }
    return data_[0];
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.same_shape(b) &&
           (a.size() == 0 ||
            std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0);
}

double max_abs_difference(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw DimensionError("max_abs_difference: shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

Quaternion hamilton_product(const Quaternion& p, const Quaternion& q) {
    return {
        p.a * q.a - p.b * q.b - p.c * q.c - p.d * q.d,
        p.a * q.b + p.b * q.a + p.c * q.d - p.d * q.c,
        p.a * q.c - p.b * q.d + p.c * q.a + p.d * q.b,
        p.a * q.d + p.b * q.c - p.c * q.b + p.d * q.a,
    };
}

Quaternion conjugate(const Quaternion& q) { return {q.a, -q.b, -q.c, -q.d}; }

double norm(const Quaternion& q) { return std::sqrt(dot(q, q)); }

double dot(const Quaternion& p, const Quaternion& q) {
    return p.a * q.a + p.b * q.b + p.c * q.c + p.d * q.d;
}

namespace {

void require_same_length(std::span<const double> a, std::span<const double> b, const char* op) {
    if (a.size() != b.size()) {
        throw DimensionError(std::string(op) + ": length mismatch (" + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()) + ")");
    }
}

Quaternion load_quaternion(std::span<const double> v, std::size_t i) {
    return {v[4 * i], v[4 * i + 1], v[4 * i + 2], v[4 * i + 3]};
}

} // namespace

RealVec hamilton_product(std::span<const double> p, std::span<const double> q) {
    require_same_length(p, q, "hamilton_product");
    if (p.size() % 4 != 0) throw DimensionError("hamilton_product: length not a multiple of 4");
    RealVec out(p.size());
    for (std::size_t i = 0; i < p.size() / 4; ++i) {
        const Quaternion r = hamilton_product(load_quaternion(p, i), load_quaternion(q, i));
        out[4 * i] = r.a;
        out[4 * i + 1] = r.b;
        out[4 * i + 2] = r.c;
        out[4 * i + 3] = r.d;
    }
    return out;
}

RealVec complex_elementwise_product(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "complex_elementwise_product");
    if (a.size() % 2 != 0) throw DimensionError("complex_elementwise_product: odd length");
    RealVec out(a.size());
    for (std::size_t i = 0; i < a.size(); i += 2) {
        out[i] = a[i] * b[i] - a[i + 1] * b[i + 1];
        out[i + 1] = a[i] * b[i + 1] + a[i + 1] * b[i];
    }
    return out;
}

RealVec circular_correlation(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "circular_correlation");
    const std::size_t d = a.size();
    RealVec out(d, 0.0);
    for (std::size_t k = 0; k < d; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) acc += a[i] * b[(i + k) % d];
        out[k] = acc;
    }
    return out;
}

RealVec matvec(const Tensor& m, std::span<const double> x) {
    if (m.cols() != x.size()) {
        throw DimensionError("matvec: matrix has " + std::to_string(m.cols()) +
                             " columns, vector has " + std::to_string(x.size()) + " entries");
    }
    RealVec out(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) out[r] = dot(m.row(r), x);
    return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions differ");
    Tensor out(a.rows(), b.cols());
    const std::size_t inner = a.cols();
    const std::size_t m = b.cols();
    parallel_for(a.rows(), a.rows() * inner * m, [&](std::size_t i) {
        double* dst = out.row(i).data();
        for (std::size_t k = 0; k < inner; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* src = b.row(k).data();
            for (std::size_t j = 0; j < m; ++j) dst[j] += aik * src[j];
        }
    });
    return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.cols()) throw DimensionError("matmul_nt: inner dimensions differ");
    Tensor out(a.rows(), b.rows());
    parallel_for(a.rows(), a.rows() * a.cols() * b.rows(), [&](std::size_t i) {
        const auto lhs = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(lhs, b.row(j));
    });
    return out;
}

Tensor transpose(const Tensor& m) {
    Tensor out(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
    return out;
}

Activation parse_activation(std::string_view token) {
    if (token == "relu") return Activation::relu;
    if (token == "sigmoid") return Activation::sigmoid;
    if (token == "identity") return Activation::identity;
    throw ValidationError("unknown activation '" + std::string(token) + "'");
}

std::string_view to_string(Activation kind) {
    switch (kind) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
    }
    return "identity";
}

double activate(Activation kind, double x) {
    switch (kind) {
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::sigmoid:
        // Split on sign so exp never overflows.
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        else {
            const double e = std::exp(x);
            return e / (1.0 + e);
        }
    case Activation::identity: return x;
    }
    return x;
}

RealVec activation(Activation kind, std::span<const double> x) {
    RealVec out(x.size());
    std::transform(x.begin(), x.end(), out.begin(), [kind](double v) { return activate(kind, v); });
    return out;
}

RealVec softmax_row(std::span<const double> x) {
    if (x.empty()) throw DimensionError("softmax_row: empty input");
    const double peak = *std::max_element(x.begin(), x.end());
    RealVec out(x.size());
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(x[i] - peak);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "dot");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b, "l1_distance");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc;
}

double l2_norm_sq(std::span<const double> a) {
    double acc = 0.0;
    for (double v : a) acc += v * v;
    return acc;
}

bool all_finite(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

} // namespace kegcn
