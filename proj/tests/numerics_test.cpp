#include "kegcn/errors.hpp"
#include "kegcn/numerics.hpp"
#include "kegcn/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace kegcn {
namespace {

void expect_near(const RealVec& got, const RealVec& want, double tol = 1e-12) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

void expect_quat(const Quaternion& q, double a, double b, double c, double d) {
    EXPECT_DOUBLE_EQ(q.a, a);
    EXPECT_DOUBLE_EQ(q.b, b);
    EXPECT_DOUBLE_EQ(q.c, c);
    EXPECT_DOUBLE_EQ(q.d, d);
}

TEST(Hamilton, IdentityLeavesOperandUnchanged) {
    expect_quat(hamilton_product({1, 0, 0, 0}, {0.3, -1.2, 2.0, 5.5}), 0.3, -1.2, 2.0, 5.5);
}

TEST(Hamilton, BasisTable) {
    const Quaternion i{0, 1, 0, 0}, j{0, 0, 1, 0}, k{0, 0, 0, 1};
    expect_quat(hamilton_product(i, j), 0, 0, 0, 1);
    expect_quat(hamilton_product(j, k), 0, 1, 0, 0);
    expect_quat(hamilton_product(k, i), 0, 0, 1, 0);
    expect_quat(hamilton_product(j, i), 0, 0, 0, -1);
    expect_quat(hamilton_product(i, i), -1, 0, 0, 0);
}

TEST(Hamilton, HandExpansion) {
    // (1 + i)(1 + j) = 1 + i + j + k
    expect_quat(hamilton_product({1, 1, 0, 0}, {1, 0, 1, 0}), 1, 1, 1, 1);
}

TEST(Hamilton, NormIsMultiplicative) {
    RandomSource source(3);
    for (int trial = 0; trial < 200; ++trial) {
        Quaternion p{source.normal(), source.normal(), source.normal(), source.normal()};
        Quaternion q{source.normal(), source.normal(), source.normal(), source.normal()};
        EXPECT_NEAR(norm(hamilton_product(p, q)), norm(p) * norm(q), 1e-12);
    }
}

TEST(Hamilton, VectorFormIsBlockwise) {
    const RealVec p = {1, 1, 0, 0, 0, 1, 0, 0};
    const RealVec q = {1, 0, 1, 0, 0, 0, 1, 0};
    expect_near(hamilton_product(p, q), {1, 1, 1, 1, 0, 0, 0, 1});
    EXPECT_THROW(hamilton_product(RealVec{1, 2, 3}, RealVec{1, 2, 3}), DimensionError);
}

TEST(ComplexProduct, Examples) {
    expect_near(complex_elementwise_product(RealVec{1, 0}, RealVec{0, 1}), {0, 1});
    expect_near(complex_elementwise_product(RealVec{1, 1}, RealVec{1, -1}), {2, 0});
    EXPECT_TRUE(complex_elementwise_product(RealVec{}, RealVec{}).empty());
    EXPECT_THROW(complex_elementwise_product(RealVec{1, 0}, RealVec{1, 0, 0, 1}), DimensionError);
}

TEST(CircularCorrelation, Examples) {
    expect_near(circular_correlation(RealVec{1, 0}, RealVec{0, 1}), {0, 1});
    expect_near(circular_correlation(RealVec{1, 0, 0}, RealVec{2.5, -1, 7}), {2.5, -1, 7});
    expect_near(circular_correlation(RealVec{1, 1}, RealVec{1, 1}), {2, 2});
}

TEST(CircularCorrelation, DeltaAtShiftSelectsRotation) {
    // a = e_s picks b[(s + k) mod d]
    const RealVec b = {1, 2, 3, 4, 5};
    for (std::size_t s = 0; s < b.size(); ++s) {
        RealVec a(b.size(), 0.0);
        a[s] = 1.0;
        const RealVec c = circular_correlation(a, b);
        for (std::size_t k = 0; k < b.size(); ++k) EXPECT_EQ(c[k], b[(s + k) % b.size()]);
    }
}

TEST(Matvec, Examples) {
    expect_near(matvec(Tensor::identity(2), RealVec{3, 4}), {3, 4});
    expect_near(matvec(Tensor(2, 2, {1, 2, 3, 4}), RealVec{1, 1}), {3, 7});
    expect_near(matvec(Tensor(1, 2), RealVec{5, 6}), {0});
    EXPECT_THROW(matvec(Tensor(2, 3), RealVec{1, 1}), DimensionError);
}

TEST(Matmul, TransposedVariantAgrees) {
    RandomSource source(5);
    const Tensor a = truncated_normal_fill(4, 3, source);
    const Tensor b = truncated_normal_fill(5, 3, source);
    EXPECT_LE(max_abs_difference(matmul_nt(a, b), matmul(a, transpose(b))), 1e-14);
}

TEST(Activation, Examples) {
    expect_near(activation(Activation::relu, RealVec{-1, 0, 2}), {0, 0, 2});
    EXPECT_DOUBLE_EQ(activate(Activation::sigmoid, 0.0), 0.5);
    expect_near(activation(Activation::identity, RealVec{-3, 4}), {-3, 4});
    EXPECT_EQ(parse_activation("relu"), Activation::relu);
    EXPECT_THROW(parse_activation("tanh"), ValidationError);
}

TEST(Softmax, Examples) {
    expect_near(softmax_row(RealVec{0, 0}), {0.5, 0.5});
    expect_near(softmax_row(RealVec{1000, 1000}), {0.5, 0.5});
    expect_near(softmax_row(RealVec{std::log(1.0), std::log(3.0)}), {0.25, 0.75});
}

TEST(Softmax, RowsSumToOne) {
    RandomSource source(9);
    for (int trial = 0; trial < 100; ++trial) {
        RealVec x(7);
        for (double& v : x) v = 50.0 * source.normal();
        const RealVec p = softmax_row(x);
        double s = 0.0;
        for (double v : p) {
            EXPECT_GE(v, 0.0);
            s += v;
        }
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Distances, Examples) {
    EXPECT_EQ(l1_distance(RealVec{1, 2}, RealVec{1, 2}), 0.0);
    EXPECT_EQ(l1_distance(RealVec{1, 0}, RealVec{0, 2}), 3.0);
    EXPECT_EQ(l2_norm_sq(RealVec{3, 4}), 25.0);
}

TEST(Tensor, ShapeContract) {
    EXPECT_THROW(Tensor(2, 2, RealVec{1, 2, 3}), DimensionError);
    EXPECT_TRUE(bitwise_equal(Tensor(2, 1, {1, 2}), Tensor(2, 1, {1, 2})));
    EXPECT_FALSE(bitwise_equal(Tensor(2, 1, {1, 2}), Tensor(1, 2, {1, 2})));
    EXPECT_FALSE(bitwise_equal(Tensor(1, 1, {0.0}), Tensor(1, 1, {-0.0})));
}

} // namespace
} // namespace kegcn
