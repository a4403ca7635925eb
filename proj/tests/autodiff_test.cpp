#include "kegcn/autodiff.hpp"
#include "kegcn/errors.hpp"
#include "kegcn/random.hpp"
#include "kegcn/tasks.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

namespace kegcn::ad {
namespace {

Tensor random_tensor(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
    RandomSource s(seed);
    Tensor t(r, c);
    for (double& x : t.values()) x = scale * s.normal();
    return t;
}

// Reduces any tensor-valued expression to a scalar with fixed random weights
// so that every output coordinate contributes to the checked gradient.
Var weigh(Var x, std::uint64_t seed) {
    Tape& tape = *x.tape();
    return sum(mul(x, tape.constant(random_tensor(x.rows(), x.cols(), seed))));
}

using Unary = std::function<Var(Var)>;
using Binary = std::function<Var(Var, Var)>;

double check_unary(const Unary& f, const Tensor& x) {
    const TapeFunction fn = [&](Tape&, std::span<const Var> v) { return weigh(f(v[0]), 99); };
    return finite_diff_check(fn, std::vector<Tensor>{x}).max_error;
}

double check_binary(const Binary& f, const Tensor& a, const Tensor& b) {
    const TapeFunction fn = [&](Tape&, std::span<const Var> v) { return weigh(f(v[0], v[1]), 98); };
    return finite_diff_check(fn, std::vector<Tensor>{a, b}).max_error;
}

constexpr double kTol = 1e-7;

TEST(Primitives, ElementwiseGradients) {
    const Tensor a = random_tensor(3, 4, 1), b = random_tensor(3, 4, 2);
    EXPECT_LE(check_binary([](Var x, Var y) { return add(x, y); }, a, b), kTol);
    EXPECT_LE(check_binary([](Var x, Var y) { return sub(x, y); }, a, b), kTol);
    EXPECT_LE(check_binary([](Var x, Var y) { return mul(x, y); }, a, b), kTol);
    EXPECT_LE(check_unary([](Var x) { return scale(x, -2.5); }, a), kTol);
    EXPECT_LE(check_unary([](Var x) { return shift(x, 0.7); }, a), kTol);
    EXPECT_LE(check_unary([](Var x) { return neg(x); }, a), kTol);
    EXPECT_LE(check_unary([](Var x) { return relu(x); }, a), kTol);
    EXPECT_LE(check_unary([](Var x) { return sigmoid(x); }, a), kTol);
    EXPECT_LE(check_unary([](Var x) { return log(shift(mul(x, x), 0.5)); }, a), kTol);
    EXPECT_LE(check_unary([](Var x) { return clamp(x, -0.3, 0.4); }, a), kTol);
}

TEST(Primitives, RowwiseGradients) {
    const Tensor a = random_tensor(3, 8, 3), b = random_tensor(3, 8, 4), w = random_tensor(3, 1, 5);
    EXPECT_LE(check_binary([](Var x, Var y) { return row_dot(x, y); }, a, b), kTol);
    EXPECT_LE(check_binary([](Var x, Var y) { return row_scale(x, y); }, a, w), kTol);
    EXPECT_LE(check_unary([](Var x) { return l2_norm_sq(x); }, a), kTol);
    EXPECT_LE(check_unary([](Var x) { return l1(x); }, a), kTol);
    EXPECT_LE(check_unary([](Var x) { return softmax_row(x); }, a), kTol);
    EXPECT_LE(check_binary([](Var x, Var y) { return complex_product(x, y); }, a, b), kTol);
    EXPECT_LE(check_binary([](Var x, Var y) { return hamilton_product(x, y); }, a, b), kTol);
    EXPECT_LE(check_binary([](Var x, Var y) { return circular_correlation(x, y); }, a, b), kTol);
    EXPECT_LE(check_unary([](Var x) { return conjugate(x, 2); }, a), kTol);
    EXPECT_LE(check_unary([](Var x) { return conjugate(x, 4); }, a), kTol);
    EXPECT_LE(check_unary([](Var x) { return unit_blocks(x, 2); }, a), kTol);
    EXPECT_LE(check_unary([](Var x) { return unit_blocks(x, 4); }, a), kTol);
    EXPECT_LE(check_binary([](Var x, Var y) { return unit_blocks_vjp(x, y, 4); }, a, b), kTol);
    EXPECT_LE(check_binary([](Var x, Var y) { return concat(x, y); }, a, b), kTol);
    EXPECT_LE(check_unary([](Var x) { return slice(x, 2, 5); }, a), kTol);
}

TEST(Primitives, MatrixGradients) {
    const Tensor m = random_tensor(4, 3, 6), x = random_tensor(1, 3, 7), b = random_tensor(3, 5, 8),
                 c = random_tensor(6, 3, 9);
    EXPECT_LE(check_binary([](Var p, Var q) { return matvec(p, q); }, m, x), kTol);
    EXPECT_LE(check_binary([](Var p, Var q) { return matmul(p, q); }, m, b), kTol);
    EXPECT_LE(check_binary([](Var p, Var q) { return matmul_nt(p, q); }, m, c), kTol);
    EXPECT_LE(check_unary([](Var p) { return sum(p); }, m), kTol);
}

TEST(Primitives, GatherScatterGradients) {
    const Tensor a = random_tensor(4, 3, 10);
    const IndexList idx = make_index({0, 3, 3, 1, 0});
    EXPECT_LE(check_unary([&](Var x) { return gather(x, idx); }, a), kTol);
    const Tensor e = random_tensor(5, 3, 11);
    EXPECT_LE(check_unary([&](Var x) { return scatter_add(x, idx, 6); }, e), kTol);
}

TEST(Primitives, ShapeMismatchThrows) {
    Tape tape;
    const Var a = tape.leaf(Tensor(2, 3)), b = tape.leaf(Tensor(3, 2));
    EXPECT_THROW(add(a, b), DimensionError);
    EXPECT_THROW(matmul(a, a), DimensionError);
    EXPECT_THROW(hamilton_product(a, a), DimensionError);
    EXPECT_THROW(gather(a, make_index({2})), DimensionError);
}

TEST(Backward, RequiresScalarLoss) {
    Tape tape;
    const Var a = tape.leaf(Tensor(2, 2, 1.0));
    EXPECT_THROW(tape.backward(a), ContractError);
}

TEST(Backward, UnusedLeafGetsZeros) {
    Tape tape;
    const Var a = tape.leaf(Tensor(1, 2, 1.0));
    const Var b = tape.leaf(Tensor(2, 3, 1.0));
    const Gradients g = tape.backward(sum(mul(a, a)));
    EXPECT_EQ(g.wrt(b), Tensor(2, 3));
    EXPECT_EQ(g.wrt(a), Tensor(1, 2, 2.0));
}

TEST(Backward, ConstantsReceiveNothing) {
    Tape tape;
    const Var a = tape.constant(Tensor(1, 2, 3.0));
    const Var b = tape.leaf(Tensor(1, 2, 1.0));
    const Gradients g = tape.backward(sum(mul(a, b)));
    EXPECT_FALSE(g.touched(a));
    EXPECT_EQ(g.wrt(b), Tensor(1, 2, 3.0));
}

TEST(Backward, FanOutAccumulates) {
    Tape tape;
    const Var x = tape.leaf(Tensor::scalar(3.0));
    const Var y = add(mul(x, x), scale(x, 4.0)); // x^2 + 4x
    EXPECT_DOUBLE_EQ(tape.backward(y).wrt(x).item(), 10.0);
}

TEST(Replay, ReproducesEveryNodeBitwise) {
    Tape tape;
    const Var a = tape.leaf(random_tensor(4, 8, 12));
    const Var b = tape.constant(random_tensor(4, 8, 13));
    const Var c = softmax_row(hamilton_product(relu(a), unit_blocks(b, 4)));
    (void)sum(l1(sub(c, circular_correlation(a, b))));
    const std::vector<Tensor> values = tape.replay();
    ASSERT_EQ(values.size(), tape.size());
    for (std::size_t i = 0; i < values.size(); ++i) EXPECT_TRUE(bitwise_equal(values[i], tape.value(i))) << i;
}

TEST(FiniteDiff, QuadraticIsExact) {
    const TapeFunction fn = [](Tape& tape, std::span<const Var> v) {
        const Var q = matmul_nt(v[0], tape.constant(Tensor(1, 3, {1.0, -2.0, 0.5})));
        return add(sum(mul(v[0], v[0])), scale(sum(q), 3.0));
    };
    const GradCheckReport r = finite_diff_check(fn, std::vector<Tensor>{random_tensor(1, 3, 14)});
    EXPECT_LE(r.max_error, 1e-9);
    EXPECT_EQ(r.coordinates, 3u);
}

TEST(FiniteDiff, ConstantFunctionHasZeroGradients) {
    const TapeFunction fn = [](Tape& tape, std::span<const Var>) { return tape.constant(Tensor::scalar(5.0)); };
    const GradCheckReport r = finite_diff_check(fn, std::vector<Tensor>{random_tensor(2, 2, 15)});
    EXPECT_EQ(r.max_error, 0.0);
    EXPECT_EQ(r.max_abs_error, 0.0);
}

TEST(FiniteDiff, TransEAlignmentLossOnToyGraph) {
    // 5 entities per side, embeddings stand in for final-layer outputs.
    const std::vector<EntityPair> pos = {{0, 1}, {2, 3}, {4, 0}};
    RandomSource source(16);
    const std::vector<EntityPair> neg = sample_negatives(pos, 5, 5, 5, source);
    const TapeFunction fn = [&](Tape&, std::span<const Var> v) {
        return alignment_loss(v[0], v[1], pos, neg, 3.0);
    };
    const std::vector<Tensor> point = {random_tensor(5, 4, 17), random_tensor(5, 4, 18)};
    const GradCheckReport r = finite_diff_check(fn, point);
    ASSERT_GT(r.kink_margin, 1e-4);
    EXPECT_LE(r.max_error, 1e-6);
}

TEST(GradientError, FloorsSmallMagnitudes) {
    EXPECT_NEAR(gradient_error(1.0, 1.1, 1e-2), 0.1 / 1.1, 1e-14);
    EXPECT_NEAR(gradient_error(0.0, 1e-6, 1e-2), 1e-4, 1e-16);
}

TEST(KinkMargin, ReportsDistanceToRelu) {
    Tape tape;
    (void)relu(tape.leaf(Tensor(1, 3, {0.5, -0.01, 2.0})));
    EXPECT_DOUBLE_EQ(tape.min_kink_margin(), 0.01);
}

} // namespace
} // namespace kegcn::ad
