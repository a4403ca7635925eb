#include "kegcn/autodiff.hpp"

#include "kegcn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace kegcn::ad {

const char* to_string(Op op) {
    switch (op) {
    case Op::leaf: return "leaf";
    case Op::constant: return "constant";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::scale: return "scale";
    case Op::shift: return "shift";
    case Op::mul: return "mul";
    case Op::row_scale: return "row_scale";
    case Op::row_dot: return "row_dot";
    case Op::matvec: return "matvec";
    case Op::matmul: return "matmul";
    case Op::matmul_nt: return "matmul_nt";
    case Op::sum: return "sum";
    case Op::l2_norm_sq: return "l2_norm_sq";
    case Op::l1: return "l1";
    case Op::relu: return "relu";
    case Op::sigmoid: return "sigmoid";
    case Op::log: return "log";
    case Op::clamp: return "clamp";
    case Op::softmax_row: return "softmax_row";
    case Op::complex_product: return "complex_product";
    case Op::hamilton_product: return "hamilton_product";
    case Op::circular_correlation: return "circular_correlation";
    case Op::conjugate: return "conjugate";
    case Op::concat: return "concat";
    case Op::slice: return "slice";
    case Op::unit_blocks: return "unit_blocks";
    case Op::unit_blocks_vjp: return "unit_blocks_vjp";
    case Op::gather: return "gather";
    case Op::scatter_add: return "scatter_add";
    }
    return "?";
}

IndexList make_index(std::vector<std::uint32_t> indices) {
    return std::make_shared<const std::vector<std::uint32_t>>(std::move(indices));
}

const Tensor& Var::value() const {
    if (tape_ == nullptr) throw ContractError("Var: uninitialized handle");
    return tape_->value(id_);
}

Tensor Gradients::wrt(Var v) const {
    if (v.id() >= shapes_.size()) throw ContractError("Gradients::wrt: variable not on this tape");
    if (!grads_[v.id()].empty()) return grads_[v.id()];
    return Tensor(shapes_[v.id()].first, shapes_[v.id()].second);
}

namespace {

[[noreturn]] void shape_error(Op op, const std::string& detail) {
    throw DimensionError(std::string(to_string(op)) + ": " + detail);
}

std::string shape_of(const Tensor& t) {
    return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

void require_same_shape(Op op, const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) shape_error(op, "shape mismatch " + shape_of(a) + " vs " + shape_of(b));
}

void require_column(Op op, const Tensor& w, std::size_t rows) {
    if (w.cols() != 1 || w.rows() != rows)
        shape_error(op, "expected " + std::to_string(rows) + "x1 weights, got " + shape_of(w));
}

void require_blocks(Op op, const Tensor& a, std::size_t block) {
    if (block == 0 || a.cols() % block != 0)
        shape_error(op, "width " + std::to_string(a.cols()) + " not a multiple of block " +
                            std::to_string(block));
}

void require_indices(Op op, const IndexList& index, std::size_t bound) {
    if (!index) shape_error(op, "missing index list");
    for (std::uint32_t i : *index)
        if (i >= bound) shape_error(op, "index " + std::to_string(i) + " out of range");
}

template <class F>
Tensor map_unary(const Tensor& a, F f) {
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

template <class F>
Tensor map_binary(const Tensor& a, const Tensor& b, F f) {
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
}

// Row-wise complex product on interleaved (re, im) pairs.
void complex_rows(const Tensor& a, const Tensor& b, Tensor& out, bool conj_a, bool accumulate) {
    for (std::size_t i = 0; i < a.size(); i += 2) {
        const double ar = a[i], ai = conj_a ? -a[i + 1] : a[i + 1];
        const double br = b[i], bi = b[i + 1];
        const double re = ar * br - ai * bi;
        const double im = ar * bi + ai * br;
        if (accumulate) {
            out[i] += re;
            out[i + 1] += im;
        } else {
            out[i] = re;
            out[i + 1] = im;
        }
    }
}

Quaternion quat_at(const Tensor& t, std::size_t i) { return {t[i], t[i + 1], t[i + 2], t[i + 3]}; }

void hamilton_rows(const Tensor& p, const Tensor& q, Tensor& out, bool conj_p, bool conj_q,
                   bool accumulate) {
    for (std::size_t i = 0; i < p.size(); i += 4) {
        Quaternion a = quat_at(p, i), b = quat_at(q, i);
        if (conj_p) a = conjugate(a);
        if (conj_q) b = conjugate(b);
        const Quaternion r = hamilton_product(a, b);
        if (accumulate) {
            out[i] += r.a;
            out[i + 1] += r.b;
            out[i + 2] += r.c;
            out[i + 3] += r.d;
        } else {
            out[i] = r.a;
            out[i + 1] = r.b;
            out[i + 2] = r.c;
            out[i + 3] = r.d;
        }
    }
}

double block_dot(const double* x, const double* y, std::size_t k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) acc += x[j] * y[j];
    return acc;
}

// out += (s - (r^ . s) r^) / |r| per block, where r^ = r / |r|.
void unit_jacobian_apply(const Tensor& r, const Tensor& s, Tensor& out, std::size_t k) {
    for (std::size_t i = 0; i < r.size(); i += k) {
        const double* rb = &r[i];
        const double n = std::sqrt(block_dot(rb, rb, k));
        if (n < kUnitBlockThreshold) continue;
        const double proj = block_dot(rb, &s[i], k) / (n * n);
        for (std::size_t j = 0; j < k; ++j) out[i + j] += (s[i + j] - proj * rb[j]) / n;
    }
}

Tensor forward(Op op, const Tensor* const* in, const Attributes& at) {
    switch (op) {
    case Op::leaf:
    case Op::constant: return {};
    case Op::add: return map_binary(*in[0], *in[1], [](double x, double y) { return x + y; });
    case Op::sub: return map_binary(*in[0], *in[1], [](double x, double y) { return x - y; });
    case Op::scale: {
        const double k = at.scalar;
        return map_unary(*in[0], [k](double x) { return k * x; });
    }
    case Op::shift: {
        const double c = at.scalar;
        return map_unary(*in[0], [c](double x) { return x + c; });
    }
    case Op::mul: return map_binary(*in[0], *in[1], [](double x, double y) { return x * y; });
    case Op::row_scale: {
        const Tensor& a = *in[0];
        const Tensor& w = *in[1];
        Tensor out(a.rows(), a.cols());
        for (std::size_t r = 0; r < a.rows(); ++r)
            for (std::size_t c = 0; c < a.cols(); ++c) out(r, c) = a(r, c) * w[r];
        return out;
    }
    case Op::row_dot: {
        const Tensor& a = *in[0];
        const Tensor& b = *in[1];
        Tensor out(a.rows(), 1);
        for (std::size_t r = 0; r < a.rows(); ++r) out[r] = dot(a.row(r), b.row(r));
        return out;
    }
    case Op::matvec: return Tensor::from_row(kegcn::matvec(*in[0], in[1]->row(0)));
    case Op::matmul: return kegcn::matmul(*in[0], *in[1]);
    case Op::matmul_nt: return kegcn::matmul_nt(*in[0], *in[1]);
    case Op::sum: {
        double acc = 0.0;
        for (double v : in[0]->values()) acc += v;
        return Tensor::scalar(acc);
    }
    case Op::l2_norm_sq: {
        const Tensor& a = *in[0];
        Tensor out(a.rows(), 1);
        for (std::size_t r = 0; r < a.rows(); ++r) out[r] = kegcn::l2_norm_sq(a.row(r));
        return out;
    }
    case Op::l1: {
        const Tensor& a = *in[0];
        Tensor out(a.rows(), 1);
        for (std::size_t r = 0; r < a.rows(); ++r) {
            double acc = 0.0;
            for (double v : a.row(r)) acc += std::abs(v);
            out[r] = acc;
        }
        return out;
    }
    case Op::relu: return map_unary(*in[0], [](double x) { return activate(Activation::relu, x); });
    case Op::sigmoid:
        return map_unary(*in[0], [](double x) { return activate(Activation::sigmoid, x); });
    case Op::log: return map_unary(*in[0], [](double x) { return std::log(x); });
    case Op::clamp: {
        const double lo = at.scalar, hi = at.scalar2;
        return map_unary(*in[0], [lo, hi](double x) { return std::clamp(x, lo, hi); });
    }
    case Op::softmax_row: {
        const Tensor& a = *in[0];
        Tensor out(a.rows(), a.cols());
        for (std::size_t r = 0; r < a.rows(); ++r) {
            const RealVec p = kegcn::softmax_row(a.row(r));
            std::copy(p.begin(), p.end(), out.row(r).begin());
        }
        return out;
    }
    case Op::complex_product: {
        Tensor out(in[0]->rows(), in[0]->cols());
        complex_rows(*in[0], *in[1], out, false, false);
        return out;
    }
    case Op::hamilton_product: {
        Tensor out(in[0]->rows(), in[0]->cols());
        hamilton_rows(*in[0], *in[1], out, false, false, false);
        return out;
    }
    case Op::circular_correlation: {
        const Tensor& a = *in[0];
        const Tensor& b = *in[1];
        Tensor out(a.rows(), a.cols());
        for (std::size_t r = 0; r < a.rows(); ++r) {
            const RealVec c = kegcn::circular_correlation(a.row(r), b.row(r));
            std::copy(c.begin(), c.end(), out.row(r).begin());
        }
        return out;
    }
    case Op::conjugate: {
        Tensor out = *in[0];
        for (std::size_t i = 0; i < out.size(); ++i)
            if (i % at.first != 0) out[i] = -out[i];
        return out;
    }
    case Op::concat: {
        const Tensor& a = *in[0];
        const Tensor& b = *in[1];
        Tensor out(a.rows(), a.cols() + b.cols());
        for (std::size_t r = 0; r < a.rows(); ++r) {
            std::copy(a.row(r).begin(), a.row(r).end(), out.row(r).begin());
            std::copy(b.row(r).begin(), b.row(r).end(), out.row(r).begin() + a.cols());
        }
        return out;
    }
    case Op::slice: {
        const Tensor& a = *in[0];
        Tensor out(a.rows(), at.second - at.first);
        for (std::size_t r = 0; r < a.rows(); ++r) {
            const auto src = a.row(r);
            std::copy(src.begin() + at.first, src.begin() + at.second, out.row(r).begin());
        }
        return out;
    }
    case Op::unit_blocks: {
        const Tensor& a = *in[0];
        const std::size_t k = at.first;
        Tensor out(a.rows(), a.cols());
        for (std::size_t i = 0; i < a.size(); i += k) {
            const double n = std::sqrt(block_dot(&a[i], &a[i], k));
            if (n < kUnitBlockThreshold) {
                out[i] = 1.0;
                continue;
            }
            for (std::size_t j = 0; j < k; ++j) out[i + j] = a[i + j] / n;
        }
        return out;
    }
    case Op::unit_blocks_vjp: {
        Tensor out(in[0]->rows(), in[0]->cols());
        unit_jacobian_apply(*in[0], *in[1], out, at.first);
        return out;
    }
    case Op::gather: {
        const Tensor& a = *in[0];
        const auto& idx = *at.index;
        Tensor out(idx.size(), a.cols());
        for (std::size_t e = 0; e < idx.size(); ++e) {
            const auto src = a.row(idx[e]);
            std::copy(src.begin(), src.end(), out.row(e).begin());
        }
        return out;
    }
    case Op::scatter_add: {
        const Tensor& a = *in[0];
        const auto& idx = *at.index;
        Tensor out(at.first, a.cols());
        for (std::size_t e = 0; e < idx.size(); ++e) {
            auto dst = out.row(idx[e]);
            const auto src = a.row(e);
            for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
        }
        return out;
    }
    }
    return {};
}

void validate(Op op, const Tensor* const* in, std::size_t arity, const Attributes& at) {
    const std::size_t expected = [op]() -> std::size_t {
        switch (op) {
        case Op::leaf:
        case Op::constant: return 0;
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::row_scale:
        case Op::row_dot:
        case Op::matvec:
        case Op::matmul:
        case Op::matmul_nt:
        case Op::complex_product:
        case Op::hamilton_product:
        case Op::circular_correlation:
        case Op::concat:
        case Op::unit_blocks_vjp: return 2;
        default: return 1;
        }
    }();
    if (arity != expected) shape_error(op, "expected " + std::to_string(expected) + " inputs");

    switch (op) {
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::row_dot: require_same_shape(op, *in[0], *in[1]); break;
    case Op::row_scale: require_column(op, *in[1], in[0]->rows()); break;
    case Op::matvec:
        if (in[1]->rows() != 1 || in[1]->cols() != in[0]->cols())
            shape_error(op, "matrix " + shape_of(*in[0]) + " vs vector " + shape_of(*in[1]));
        break;
    case Op::matmul:
        if (in[0]->cols() != in[1]->rows())
            shape_error(op, shape_of(*in[0]) + " times " + shape_of(*in[1]));
        break;
    case Op::matmul_nt:
        if (in[0]->cols() != in[1]->cols())
            shape_error(op, shape_of(*in[0]) + " times transpose of " + shape_of(*in[1]));
        break;
    case Op::softmax_row:
        if (in[0]->cols() == 0) shape_error(op, "empty rows");
        break;
    case Op::clamp:
        if (!(at.scalar <= at.scalar2)) shape_error(op, "lower bound exceeds upper bound");
        break;
    case Op::complex_product:
        require_same_shape(op, *in[0], *in[1]);
        require_blocks(op, *in[0], 2);
        break;
    case Op::hamilton_product:
        require_same_shape(op, *in[0], *in[1]);
        require_blocks(op, *in[0], 4);
        break;
    case Op::circular_correlation:
        require_same_shape(op, *in[0], *in[1]);
        if (in[0]->cols() == 0) shape_error(op, "empty rows");
        break;
    case Op::conjugate:
    case Op::unit_blocks: require_blocks(op, *in[0], at.first); break;
    case Op::unit_blocks_vjp:
        require_same_shape(op, *in[0], *in[1]);
        require_blocks(op, *in[0], at.first);
        break;
    case Op::concat:
        if (in[0]->rows() != in[1]->rows())
            shape_error(op, "row mismatch " + shape_of(*in[0]) + " vs " + shape_of(*in[1]));
        break;
    case Op::slice:
        if (at.first > at.second || at.second > in[0]->cols())
            shape_error(op, "column range [" + std::to_string(at.first) + ", " +
                                std::to_string(at.second) + ") outside " + shape_of(*in[0]));
        break;
    case Op::gather: require_indices(op, at.index, in[0]->rows()); break;
    case Op::scatter_add:
        require_indices(op, at.index, at.first);
        if (at.index->size() != in[0]->rows())
            shape_error(op, "index count does not match rows of " + shape_of(*in[0]));
        break;
    default: break;
    }
}

Tensor& accumulator(std::vector<Tensor>& grads, std::size_t id, const Tensor& shape_of_value) {
    Tensor& g = grads[id];
    if (g.empty() && shape_of_value.size() != 0) g = Tensor(shape_of_value.rows(), shape_of_value.cols());
    return g;
}

} // namespace

Var Tape::leaf(Tensor value) {
    Node n;
    n.op = Op::leaf;
    n.requires_grad = true;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::constant(Tensor value) {
    Node n;
    n.op = Op::constant;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Op op, std::initializer_list<Var> inputs, Attributes attrs) {
    if (op == Op::leaf || op == Op::constant)
        throw ContractError("Tape::record: use leaf() or constant() for inputs");
    if (inputs.size() > 2) shape_error(op, "too many inputs");
    Node n;
    n.op = op;
    n.arity = static_cast<std::uint8_t>(inputs.size());
    const Tensor* in[2] = {nullptr, nullptr};
    std::size_t k = 0;
    for (const Var& v : inputs) {
        if (v.tape() != this) throw ContractError("Tape::record: operand from a different tape");
        n.inputs[k] = v.id();
        in[k] = &nodes_[v.id()].value;
        n.requires_grad = n.requires_grad || nodes_[v.id()].requires_grad;
        ++k;
    }
    validate(op, in, n.arity, attrs);
    n.value = forward(op, in, attrs);
    n.attrs = std::move(attrs);
    return push(std::move(n));
}

std::vector<Tensor> Tape::replay() const {
    std::vector<Tensor> values(nodes_.size());
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        const Node& n = nodes_[id];
        if (n.op == Op::leaf || n.op == Op::constant) {
            values[id] = n.value;
            continue;
        }
        const Tensor* in[2] = {nullptr, nullptr};
        for (std::size_t k = 0; k < n.arity; ++k) in[k] = &values[n.inputs[k]];
        values[id] = forward(n.op, in, n.attrs);
    }
    return values;
}

double Tape::min_kink_margin() const {
    double margin = std::numeric_limits<double>::infinity();
    for (const Node& n : nodes_) {
        if (n.op != Op::relu && n.op != Op::l1 && n.op != Op::clamp) continue;
        for (double x : nodes_[n.inputs[0]].value.values()) {
            if (n.op == Op::clamp)
                margin = std::min({margin, std::abs(x - n.attrs.scalar), std::abs(x - n.attrs.scalar2)});
            else
                margin = std::min(margin, std::abs(x));
        }
    }
    return margin;
}

Gradients Tape::backward(Var loss) const {
    if (loss.tape() != this) throw ContractError("backward: loss is not on this tape");
    const Tensor& lv = nodes_[loss.id()].value;
    if (lv.rows() != 1 || lv.cols() != 1)
        throw ContractError("backward: loss must be 1x1, got " + shape_of(lv));

    Gradients result;
    auto& grads = result.grads_;
    grads.resize(nodes_.size());
    result.shapes_.reserve(nodes_.size());
    for (const Node& n : nodes_) result.shapes_.emplace_back(n.value.rows(), n.value.cols());
    grads[loss.id()] = Tensor::scalar(1.0);

    for (std::size_t id = loss.id() + 1; id-- > 0;) {
        const Node& n = nodes_[id];
        if (grads[id].empty() || !n.requires_grad || n.arity == 0) continue;
        const Tensor& s = grads[id];
        const Tensor& out = n.value;
        const Node& n0 = nodes_[n.inputs[0]];
        const Node* n1 = n.arity > 1 ? &nodes_[n.inputs[1]] : nullptr;
        const Tensor& a = n0.value;
        const Tensor& b = n1 ? n1->value : a;
        Tensor* ga = n0.requires_grad ? &accumulator(grads, n.inputs[0], a) : nullptr;
        Tensor* gb = (n1 && n1->requires_grad) ? &accumulator(grads, n.inputs[1], b) : nullptr;

        switch (n.op) {
        case Op::leaf:
        case Op::constant: break;
        case Op::add:
            if (ga) for (std::size_t i = 0; i < s.size(); ++i) (*ga)[i] += s[i];
            if (gb) for (std::size_t i = 0; i < s.size(); ++i) (*gb)[i] += s[i];
            break;
        case Op::sub:
            if (ga) for (std::size_t i = 0; i < s.size(); ++i) (*ga)[i] += s[i];
            if (gb) for (std::size_t i = 0; i < s.size(); ++i) (*gb)[i] -= s[i];
            break;
        case Op::scale:
            for (std::size_t i = 0; i < s.size(); ++i) (*ga)[i] += n.attrs.scalar * s[i];
            break;
        case Op::shift:
            for (std::size_t i = 0; i < s.size(); ++i) (*ga)[i] += s[i];
            break;
        case Op::mul:
            if (ga) for (std::size_t i = 0; i < s.size(); ++i) (*ga)[i] += s[i] * b[i];
            if (gb) for (std::size_t i = 0; i < s.size(); ++i) (*gb)[i] += s[i] * a[i];
            break;
        case Op::row_scale:
            for (std::size_t r = 0; r < a.rows(); ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < a.cols(); ++c) {
                    if (ga) (*ga)(r, c) += s(r, c) * b[r];
                    acc += s(r, c) * a(r, c);
                }
                if (gb) (*gb)[r] += acc;
            }
            break;
        case Op::row_dot:
            for (std::size_t r = 0; r < a.rows(); ++r)
                for (std::size_t c = 0; c < a.cols(); ++c) {
                    if (ga) (*ga)(r, c) += s[r] * b(r, c);
                    if (gb) (*gb)(r, c) += s[r] * a(r, c);
                }
            break;
        case Op::matvec:
            for (std::size_t r = 0; r < a.rows(); ++r)
                for (std::size_t c = 0; c < a.cols(); ++c) {
                    if (ga) (*ga)(r, c) += s[r] * b[c];
                    if (gb) (*gb)[c] += s[r] * a(r, c);
                }
            break;
        case Op::matmul: {
            if (ga) {
                const Tensor d = kegcn::matmul_nt(s, b);
                for (std::size_t i = 0; i < d.size(); ++i) (*ga)[i] += d[i];
            }
            if (gb) {
                const Tensor d = kegcn::matmul(kegcn::transpose(a), s);
                for (std::size_t i = 0; i < d.size(); ++i) (*gb)[i] += d[i];
            }
            break;
        }
        case Op::matmul_nt: {
            if (ga) {
                const Tensor d = kegcn::matmul(s, b);
                for (std::size_t i = 0; i < d.size(); ++i) (*ga)[i] += d[i];
            }
            if (gb) {
                const Tensor d = kegcn::matmul(kegcn::transpose(s), a);
                for (std::size_t i = 0; i < d.size(); ++i) (*gb)[i] += d[i];
            }
            break;
        }
        case Op::sum:
            for (std::size_t i = 0; i < a.size(); ++i) (*ga)[i] += s[0];
            break;
        case Op::l2_norm_sq:
            for (std::size_t r = 0; r < a.rows(); ++r)
                for (std::size_t c = 0; c < a.cols(); ++c) (*ga)(r, c) += 2.0 * a(r, c) * s[r];
            break;
        case Op::l1:
            for (std::size_t r = 0; r < a.rows(); ++r)
                for (std::size_t c = 0; c < a.cols(); ++c) {
                    const double x = a(r, c);
                    const double sign = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                    (*ga)(r, c) += sign * s[r];
                }
            break;
        case Op::relu:
            for (std::size_t i = 0; i < a.size(); ++i)
                if (a[i] > 0.0) (*ga)[i] += s[i];
            break;
        case Op::sigmoid:
            for (std::size_t i = 0; i < a.size(); ++i) (*ga)[i] += s[i] * out[i] * (1.0 - out[i]);
            break;
        case Op::log:
            for (std::size_t i = 0; i < a.size(); ++i) (*ga)[i] += s[i] / a[i];
            break;
        case Op::clamp:
            for (std::size_t i = 0; i < a.size(); ++i)
                if (a[i] >= n.attrs.scalar && a[i] <= n.attrs.scalar2) (*ga)[i] += s[i];
            break;
        case Op::softmax_row:
            for (std::size_t r = 0; r < out.rows(); ++r) {
                const double inner = dot(s.row(r), out.row(r));
                for (std::size_t c = 0; c < out.cols(); ++c)
                    (*ga)(r, c) += out(r, c) * (s(r, c) - inner);
            }
            break;
        case Op::complex_product:
            // d/da = conj(b) * s, d/db = conj(a) * s
            if (ga) complex_rows(b, s, *ga, true, true);
            if (gb) complex_rows(a, s, *gb, true, true);
            break;
        case Op::hamilton_product:
            // d/dp = s (x) conj(q), d/dq = conj(p) (x) s
            if (ga) hamilton_rows(s, b, *ga, false, true, true);
            if (gb) hamilton_rows(a, s, *gb, true, false, true);
            break;
        case Op::circular_correlation: {
            const std::size_t d = a.cols();
            for (std::size_t r = 0; r < a.rows(); ++r) {
                const auto sr = s.row(r), ar = a.row(r), br = b.row(r);
                for (std::size_t k = 0; k < d; ++k) {
                    for (std::size_t i = 0; i < d; ++i) {
                        const std::size_t j = (i + k) % d;
                        if (ga) (*ga)(r, i) += sr[k] * br[j];
                        if (gb) (*gb)(r, j) += sr[k] * ar[i];
                    }
                }
            }
            break;
        }
        case Op::conjugate:
            for (std::size_t i = 0; i < s.size(); ++i)
                (*ga)[i] += (i % n.attrs.first == 0) ? s[i] : -s[i];
            break;
        case Op::concat:
            for (std::size_t r = 0; r < s.rows(); ++r) {
                for (std::size_t c = 0; c < a.cols(); ++c)
                    if (ga) (*ga)(r, c) += s(r, c);
                for (std::size_t c = 0; c < b.cols(); ++c)
                    if (gb) (*gb)(r, c) += s(r, a.cols() + c);
            }
            break;
        case Op::slice:
            for (std::size_t r = 0; r < s.rows(); ++r)
                for (std::size_t c = 0; c < s.cols(); ++c) (*ga)(r, n.attrs.first + c) += s(r, c);
            break;
        case Op::unit_blocks: unit_jacobian_apply(a, s, *ga, n.attrs.first); break;
        case Op::unit_blocks_vjp: {
            const std::size_t k = n.attrs.first;
            if (gb) unit_jacobian_apply(a, s, *gb, k);
            if (ga) {
                // h(r) = g / n - (r . g) r / n^3
                for (std::size_t i = 0; i < a.size(); i += k) {
                    const double* r = &a[i];
                    const double* g = &b[i];
                    const double* sv = &s[i];
                    const double n2 = block_dot(r, r, k);
                    const double nn = std::sqrt(n2);
                    if (nn < kUnitBlockThreshold) continue;
                    const double n3 = n2 * nn;
                    const double n5 = n3 * n2;
                    const double sg = block_dot(sv, g, k);
                    const double sr = block_dot(sv, r, k);
                    const double rg = block_dot(r, g, k);
                    for (std::size_t j = 0; j < k; ++j) {
                        (*ga)[i + j] += -(sg * r[j] + sr * g[j] + rg * sv[j]) / n3 +
                                        3.0 * rg * sr * r[j] / n5;
                    }
                }
            }
            break;
        }
        case Op::gather: {
            const auto& idx = *n.attrs.index;
            for (std::size_t e = 0; e < idx.size(); ++e) {
                auto dst = ga->row(idx[e]);
                const auto src = s.row(e);
                for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
            }
            break;
        }
        case Op::scatter_add: {
            const auto& idx = *n.attrs.index;
            for (std::size_t e = 0; e < idx.size(); ++e) {
                auto dst = ga->row(e);
                const auto src = s.row(idx[e]);
                for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
            }
            break;
        }
        }
    }
    return result;
}

namespace {

Var record_on(Var a, Op op, std::initializer_list<Var> inputs, Attributes attrs = {}) {
    if (!a.valid()) throw ContractError(std::string(to_string(op)) + ": uninitialized operand");
    return a.tape()->record(op, inputs, std::move(attrs));
}

} // namespace

Var add(Var a, Var b) { return record_on(a, Op::add, {a, b}); }
Var sub(Var a, Var b) { return record_on(a, Op::sub, {a, b}); }
Var scale(Var a, double factor) {
    Attributes at;
    at.scalar = factor;
    return record_on(a, Op::scale, {a}, at);
}
Var neg(Var a) { return scale(a, -1.0); }
Var shift(Var a, double amount) {
    Attributes at;
    at.scalar = amount;
    return record_on(a, Op::shift, {a}, at);
}
Var mul(Var a, Var b) { return record_on(a, Op::mul, {a, b}); }
Var row_scale(Var a, Var w) { return record_on(a, Op::row_scale, {a, w}); }
Var row_dot(Var a, Var b) { return record_on(a, Op::row_dot, {a, b}); }
Var matvec(Var m, Var x) { return record_on(m, Op::matvec, {m, x}); }
Var matmul(Var a, Var b) { return record_on(a, Op::matmul, {a, b}); }
Var matmul_nt(Var a, Var b) { return record_on(a, Op::matmul_nt, {a, b}); }
Var sum(Var a) { return record_on(a, Op::sum, {a}); }
Var l2_norm_sq(Var a) { return record_on(a, Op::l2_norm_sq, {a}); }
Var l1(Var a) { return record_on(a, Op::l1, {a}); }
Var relu(Var a) { return record_on(a, Op::relu, {a}); }
Var sigmoid(Var a) { return record_on(a, Op::sigmoid, {a}); }
Var log(Var a) { return record_on(a, Op::log, {a}); }
Var clamp(Var a, double lo, double hi) {
    Attributes at;
    at.scalar = lo;
    at.scalar2 = hi;
    return record_on(a, Op::clamp, {a}, at);
}
Var softmax_row(Var a) { return record_on(a, Op::softmax_row, {a}); }
Var complex_product(Var a, Var b) { return record_on(a, Op::complex_product, {a, b}); }
Var hamilton_product(Var a, Var b) { return record_on(a, Op::hamilton_product, {a, b}); }
Var circular_correlation(Var a, Var b) { return record_on(a, Op::circular_correlation, {a, b}); }
Var conjugate(Var a, std::size_t block) {
    Attributes at;
    at.first = block;
    return record_on(a, Op::conjugate, {a}, at);
}
Var concat(Var a, Var b) { return record_on(a, Op::concat, {a, b}); }
Var slice(Var a, std::size_t begin, std::size_t end) {
    Attributes at;
    at.first = begin;
    at.second = end;
    return record_on(a, Op::slice, {a}, at);
}
Var unit_blocks(Var a, std::size_t block) {
    Attributes at;
    at.first = block;
    return record_on(a, Op::unit_blocks, {a}, at);
}
Var unit_blocks_vjp(Var r, Var g, std::size_t block) {
    Attributes at;
    at.first = block;
    return record_on(r, Op::unit_blocks_vjp, {r, g}, at);
}
Var gather(Var a, IndexList index) {
    Attributes at;
    at.index = std::move(index);
    return record_on(a, Op::gather, {a}, at);
}
Var scatter_add(Var a, IndexList index, std::size_t rows) {
    Attributes at;
    at.index = std::move(index);
    at.first = rows;
    return record_on(a, Op::scatter_add, {a}, at);
}
Var activate(Activation kind, Var a) {
    switch (kind) {
    case Activation::relu: return relu(a);
    case Activation::sigmoid: return sigmoid(a);
    case Activation::identity: return a;
    }
    return a;
}

double gradient_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

GradCheckReport finite_diff_check(const TapeFunction& fn, std::span<const Tensor> point,
                                  double eps, double floor) {
    auto evaluate = [&fn](std::span<const Tensor> at) {
        Tape tape;
        std::vector<Var> leaves;
        leaves.reserve(at.size());
        for (const Tensor& t : at) leaves.push_back(tape.leaf(t));
        return fn(tape, leaves).value().item();
    };

    GradCheckReport report;
    std::vector<Tensor> grads;
    {
        Tape tape;
        std::vector<Var> leaves;
        for (const Tensor& t : point) leaves.push_back(tape.leaf(t));
        const Var loss = fn(tape, leaves);
        const Gradients g = tape.backward(loss);
        for (const Var& v : leaves) grads.push_back(g.wrt(v));
        report.kink_margin = tape.min_kink_margin();
    }

    std::vector<Tensor> probe(point.begin(), point.end());
    for (std::size_t t = 0; t < probe.size(); ++t) {
        for (std::size_t i = 0; i < probe[t].size(); ++i) {
            const double original = probe[t][i];
            probe[t][i] = original + eps;
            const double up = evaluate(probe);
            probe[t][i] = original - eps;
            const double down = evaluate(probe);
            probe[t][i] = original;
            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = grads[t][i];
            report.max_error = std::max(report.max_error, gradient_error(analytic, numeric, floor));
            report.max_abs_error = std::max(report.max_abs_error, std::abs(analytic - numeric));
            ++report.coordinates;
        }
    }
    return report;
}

RealVec numeric_gradient(const std::function<double(std::span<const double>)>& fn,
                         std::span<const double> point, double eps) {
    RealVec x(point.begin(), point.end());
    RealVec grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double original = x[i];
        x[i] = original + eps;
        const double up = fn(x);
        x[i] = original - eps;
        const double down = fn(x);
        x[i] = original;
        grad[i] = (up - down) / (2.0 * eps);
    }
    return grad;
}

} // namespace kegcn::ad
