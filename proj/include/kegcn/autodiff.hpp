#pragma once

// Reverse-mode differentiation over matrix-valued primitives.
//
// Every node holds a dense row-major Tensor. Row-wise primitives (row_dot, l1,
// l2_norm_sq, softmax_row, complex/quaternion products, circular correlation,
// unit_blocks) treat each row independently, which lets one tape node process
// a whole batch of triples at once.

#include "kegcn/numerics.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

namespace kegcn::ad {

enum class Op : std::uint8_t {
    leaf,
    constant,
    add,
    sub,
    scale,
    shift,
    mul,
    row_scale,
    row_dot,
    matvec,
    matmul,
    matmul_nt,
    sum,
    l2_norm_sq,
    l1,
    relu,
    sigmoid,
    log,
    clamp,
    softmax_row,
    complex_product,
    hamilton_product,
    circular_correlation,
    conjugate,
    concat,
    slice,
    unit_blocks,
    unit_blocks_vjp,
    gather,
    scatter_add,
};

const char* to_string(Op op);

using IndexList = std::shared_ptr<const std::vector<std::uint32_t>>;

IndexList make_index(std::vector<std::uint32_t> indices);

/// Non-tensor operands of a primitive.
struct Attributes {
    double scalar = 0.0;  // scale factor, shift amount, clamp lower bound
    double scalar2 = 0.0; // clamp upper bound
    std::size_t first = 0;  // slice begin, block width, or scatter output rows
    std::size_t second = 0; // slice end
    IndexList index;        // gather / scatter_add rows
};

/// Block norms below this are treated as degenerate by unit_blocks: the block
/// is reset to the identity element (1, 0, ...) and passes no gradient.
inline constexpr double kUnitBlockThreshold = 1e-12;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;

    Tape* tape() const noexcept { return tape_; }
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }
    const Tensor& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Result of Tape::backward: d(loss)/d(node) for every node the loss depends on.
class Gradients {
public:
    /// Gradient of the loss w.r.t. v; all zeros when the loss does not depend on v.
    Tensor wrt(Var v) const;
    bool touched(Var v) const { return v.id() < grads_.size() && !grads_[v.id()].empty(); }

private:
    friend class Tape;
    std::vector<Tensor> grads_;
    std::vector<std::pair<std::size_t, std::size_t>> shapes_;
};

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Differentiable input.
    Var leaf(Tensor value);
    /// Input that never receives a gradient.
    Var constant(Tensor value);

    /// Evaluates `op` eagerly and appends the node. Throws DimensionError on
    /// shape mismatch.
    Var record(Op op, std::initializer_list<Var> inputs, Attributes attrs = {});

    std::size_t size() const noexcept { return nodes_.size(); }
    const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
    Op op(std::size_t id) const { return nodes_.at(id).op; }

    /// Reverse accumulation from a 1 x 1 loss. Throws ContractError otherwise.
    Gradients backward(Var loss) const;

    /// Recomputes every node from the leaves and constants in append order.
    std::vector<Tensor> replay() const;

    /// Smallest distance of any relu / l1 / clamp input to its kink. Finite
    /// difference checks are only meaningful when this exceeds the step.
    double min_kink_margin() const;

private:
    struct Node {
        Op op = Op::leaf;
        std::array<std::size_t, 2> inputs{};
        std::uint8_t arity = 0;
        bool requires_grad = false;
        Attributes attrs;
        Tensor value;
    };

    Var push(Node node);

    std::vector<Node> nodes_;
};

// Primitive constructors. All operands must live on the same tape.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double factor);
Var neg(Var a);
Var shift(Var a, double amount);
Var mul(Var a, Var b);
/// a (n x c) with row i multiplied by w(i, 0); w is n x 1.
Var row_scale(Var a, Var w);
/// Row-wise inner products, n x 1.
Var row_dot(Var a, Var b);
/// m (r x c) times x (1 x c), giving 1 x r.
Var matvec(Var m, Var x);
Var matmul(Var a, Var b);
/// a * b^T.
Var matmul_nt(Var a, Var b);
/// Sum of all entries, 1 x 1.
Var sum(Var a);
/// Row-wise squared L2 norms, n x 1.
Var l2_norm_sq(Var a);
/// Row-wise L1 norms, n x 1.
Var l1(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var log(Var a);
Var clamp(Var a, double lo, double hi);
Var softmax_row(Var a);
Var complex_product(Var a, Var b);
Var hamilton_product(Var a, Var b);
Var circular_correlation(Var a, Var b);
/// Negates the imaginary coordinates of every `block`-wide group (2 or 4).
Var conjugate(Var a, std::size_t block);
/// Column-wise concatenation.
Var concat(Var a, Var b);
/// Columns [begin, end).
Var slice(Var a, std::size_t begin, std::size_t end);
/// Scales every `block`-wide group to unit norm.
Var unit_blocks(Var a, std::size_t block);
/// Jacobian of unit_blocks at r applied to g, per block: (g - (r^ . g) r^) / |r|.
Var unit_blocks_vjp(Var r, Var g, std::size_t block);
/// Rows a[index[e]].
Var gather(Var a, IndexList index);
/// out[index[e]] += a[e] into an `rows`-row result.
Var scatter_add(Var a, IndexList index, std::size_t rows);
Var activate(Activation kind, Var a);

// Finite-difference verification.

using TapeFunction = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckReport {
    double max_error = 0.0;     // worst scaled error, see gradient_error
    double max_abs_error = 0.0; // worst |analytic - numeric|
    std::size_t coordinates = 0;
    double kink_margin = 0.0;   // Tape::min_kink_margin at the base point
};

/// |analytic - numeric| / max(|analytic|, |numeric|, floor). Relative error for
/// large components, absolute error / floor near zero.
double gradient_error(double analytic, double numeric, double floor);

/// Builds fn on a fresh tape with leaves at `point`, backpropagates, and
/// compares every coordinate against central differences with step eps.
GradCheckReport finite_diff_check(const TapeFunction& fn, std::span<const Tensor> point,
                                  double eps = 1e-5, double floor = 1e-2);

/// Central-difference gradient of a scalar function of one vector.
RealVec numeric_gradient(const std::function<double(std::span<const double>)>& fn,
                         std::span<const double> point, double eps = 1e-5);

} // namespace kegcn::ad
