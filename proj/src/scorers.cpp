#include "kegcn/scorers.hpp"

#include "kegcn/errors.hpp"

#include <cmath>
#include <string>

namespace kegcn {

ScorerKind parse_scorer(std::string_view token) {
    if (token == "transe") return ScorerKind::transe;
    if (token == "distmult") return ScorerKind::distmult;
    if (token == "transh") return ScorerKind::transh;
    if (token == "transd") return ScorerKind::transd;
    if (token == "rotate") return ScorerKind::rotate;
    if (token == "quate") return ScorerKind::quate;
    throw ValidationError("unknown scorer '" + std::string(token) + "'");
}

std::string_view to_string(ScorerKind kind) {
    switch (kind) {
    case ScorerKind::transe: return "transe";
    case ScorerKind::distmult: return "distmult";
    case ScorerKind::transh: return "transh";
    case ScorerKind::transd: return "transd";
    case ScorerKind::rotate: return "rotate";
    case ScorerKind::quate: return "quate";
    }
    return "transe";
}

std::size_t entity_width_factor(ScorerKind kind) {
    switch (kind) {
    case ScorerKind::transd:
    case ScorerKind::rotate: return 2;
    case ScorerKind::quate: return 4;
    default: return 1;
    }
}

Scorer::Scorer(ScorerKind kind, std::size_t base_dim) : kind_(kind), base_dim_(base_dim) {
    if (base_dim == 0) throw ValidationError("scorer base dimension must be positive");
}

Scorer Scorer::for_entity_width(ScorerKind kind, std::size_t entity_width) {
    const std::size_t factor = entity_width_factor(kind);
    if (entity_width == 0 || entity_width % factor != 0) {
        throw ValidationError("entity width " + std::to_string(entity_width) + " is not a positive multiple of " +
                              std::to_string(factor) + " as required by " + std::string(to_string(kind)));
    }
    return Scorer(kind, entity_width / factor);
}

std::size_t Scorer::entity_width() const noexcept { return base_dim_ * entity_width_factor(kind_); }

std::size_t Scorer::relation_width() const noexcept {
    switch (kind_) {
    case ScorerKind::transh:
    case ScorerKind::transd:
    case ScorerKind::rotate: return 2 * base_dim_;
    case ScorerKind::quate: return 4 * base_dim_;
    default: return base_dim_;
    }
}

namespace {

void check_widths(const Scorer& s, const TripleEmbedding& t) {
    if (t.head.size() != s.entity_width() || t.tail.size() != s.entity_width() ||
        t.relation.size() != s.relation_width()) {
        throw DimensionError(std::string(to_string(s.kind())) + ": expected widths (" +
                             std::to_string(s.entity_width()) + ", " + std::to_string(s.relation_width()) +
                             ", " + std::to_string(s.entity_width()) + "), got (" +
                             std::to_string(t.head.size()) + ", " + std::to_string(t.relation.size()) +
                             ", " + std::to_string(t.tail.size()) + ")");
    }
}

std::size_t projection_block(ScorerKind kind) {
    if (kind == ScorerKind::rotate) return 2;
    if (kind == ScorerKind::quate) return 4;
    return 0;
}

RealVec unit_project(std::span<const double> r, std::size_t k) {
    RealVec out(r.size(), 0.0);
    for (std::size_t i = 0; i < r.size(); i += k) {
        double n2 = 0.0;
        for (std::size_t j = 0; j < k; ++j) n2 += r[i + j] * r[i + j];
        const double n = std::sqrt(n2);
        if (n < ad::kUnitBlockThreshold) {
            out[i] = 1.0;
            continue;
        }
        for (std::size_t j = 0; j < k; ++j) out[i + j] = r[i + j] / n;
    }
    return out;
}

// Pulls a gradient w.r.t. the projected relation back to the stored one.
RealVec unit_project_pullback(std::span<const double> r, std::span<const double> g, std::size_t k) {
    RealVec out(r.size(), 0.0);
    for (std::size_t i = 0; i < r.size(); i += k) {
        double n2 = 0.0, rg = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            n2 += r[i + j] * r[i + j];
            rg += r[i + j] * g[i + j];
        }
        const double n = std::sqrt(n2);
        if (n < ad::kUnitBlockThreshold) continue;
        for (std::size_t j = 0; j < k; ++j) out[i + j] = (g[i + j] - rg / n2 * r[i + j]) / n;
    }
    return out;
}

RealVec conj_pairs(std::span<const double> z) {
    RealVec out(z.begin(), z.end());
    for (std::size_t i = 1; i < out.size(); i += 2) out[i] = -out[i];
    return out;
}

RealVec conj_quats(std::span<const double> q) {
    RealVec out(q.begin(), q.end());
    for (std::size_t i = 0; i < out.size(); ++i)
        if (i % 4 != 0) out[i] = -out[i];
    return out;
}

RealVec scaled(std::span<const double> x, double k) {
    RealVec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = k * x[i];
    return out;
}

// Translation residual shared by TransE / TransH / TransD, plus intermediates.
struct TransHParts {
    RealVec diff;     // u - v
    RealVec delta;    // u' + r2 - v'
    double normal_dot_diff = 0.0;  // r1 . (u - v)
    double normal_dot_delta = 0.0; // r1 . delta
};

TransHParts transh_parts(const Scorer& s, const TripleEmbedding& t) {
    const std::size_t d = s.base_dim();
    const auto r1 = t.relation.subspan(0, d);
    const auto r2 = t.relation.subspan(d, d);
    TransHParts p;
    p.diff.resize(d);
    for (std::size_t i = 0; i < d; ++i) p.diff[i] = t.head[i] - t.tail[i];
    p.normal_dot_diff = dot(r1, p.diff);
    p.delta.resize(d);
    for (std::size_t i = 0; i < d; ++i) p.delta[i] = p.diff[i] - p.normal_dot_diff * r1[i] + r2[i];
    p.normal_dot_delta = dot(r1, p.delta);
    return p;
}

struct TransDParts {
    RealVec delta;          // u' + r2 - v'
    double head_proj = 0.0; // u2 . u1
    double tail_proj = 0.0; // v2 . v1
};

TransDParts transd_parts(const Scorer& s, const TripleEmbedding& t) {
    const std::size_t d = s.base_dim();
    const auto u1 = t.head.subspan(0, d), u2 = t.head.subspan(d, d);
    const auto v1 = t.tail.subspan(0, d), v2 = t.tail.subspan(d, d);
    const auto r1 = t.relation.subspan(0, d), r2 = t.relation.subspan(d, d);
    TransDParts p;
    p.head_proj = dot(u2, u1);
    p.tail_proj = dot(v2, v1);
    p.delta.resize(d);
    // u' = u1 + (u2 . u1) r1 and v' = v1 - (v2 . v1) r1, as the scoring rule is written.
    for (std::size_t i = 0; i < d; ++i)
        p.delta[i] = u1[i] + p.head_proj * r1[i] + r2[i] - (v1[i] - p.tail_proj * r1[i]);
    return p;
}

RealVec rotate_residual(const TripleEmbedding& t, std::span<const double> rel_hat) {
    RealVec delta = complex_elementwise_product(t.head, rel_hat);
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= t.tail[i];
    return delta;
}

} // namespace

RealVec effective_relation(const Scorer& s, std::span<const double> relation) {
    const std::size_t k = projection_block(s.kind());
    if (k == 0) return RealVec(relation.begin(), relation.end());
    return unit_project(relation, k);
}

double score(const Scorer& s, const TripleEmbedding& t) {
    check_widths(s, t);
    switch (s.kind()) {
    case ScorerKind::transe: {
        double acc = 0.0;
        for (std::size_t i = 0; i < t.head.size(); ++i) {
            const double x = t.head[i] + t.relation[i] - t.tail[i];
            acc += x * x;
        }
        return -acc;
    }
    case ScorerKind::distmult: {
        double acc = 0.0;
        for (std::size_t i = 0; i < t.head.size(); ++i) acc += t.head[i] * t.relation[i] * t.tail[i];
        return acc;
    }
    case ScorerKind::transh: return -l2_norm_sq(transh_parts(s, t).delta);
    case ScorerKind::transd: return -l2_norm_sq(transd_parts(s, t).delta);
    case ScorerKind::rotate: {
        const RealVec rel_hat = unit_project(t.relation, 2);
        return -l2_norm_sq(rotate_residual(t, rel_hat));
    }
    case ScorerKind::quate: {
        const RealVec rel_hat = unit_project(t.relation, 4);
        return dot(hamilton_product(t.head, rel_hat), t.tail);
    }
    }
    return 0.0;
}

TripleGradients gradients(const Scorer& s, const TripleEmbedding& t) {
    check_widths(s, t);
    TripleGradients g;
    switch (s.kind()) {
    case ScorerKind::transe: {
        RealVec delta(t.head.size());
        for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = t.head[i] + t.relation[i] - t.tail[i];
        g.head = scaled(delta, -2.0);
        g.relation = g.head;
        g.tail = scaled(delta, 2.0);
        break;
    }
    case ScorerKind::distmult: {
        const std::size_t n = t.head.size();
        g.head.resize(n);
        g.relation.resize(n);
        g.tail.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            g.head[i] = t.relation[i] * t.tail[i];
            g.relation[i] = t.head[i] * t.tail[i];
            g.tail[i] = t.head[i] * t.relation[i];
        }
        break;
    }
    case ScorerKind::transh: {
        const std::size_t d = s.base_dim();
        const auto r1 = t.relation.subspan(0, d);
        const TransHParts p = transh_parts(s, t);
        // (I - r1 r1^T) delta, the residual pulled back through the projection.
        RealVec projected(d);
        for (std::size_t i = 0; i < d; ++i) projected[i] = p.delta[i] - p.normal_dot_delta * r1[i];
        g.head = scaled(projected, -2.0);
        g.tail = scaled(projected, 2.0);
        g.relation.resize(2 * d);
        for (std::size_t i = 0; i < d; ++i) {
            g.relation[i] = 2.0 * (p.normal_dot_delta * p.diff[i] + p.normal_dot_diff * p.delta[i]);
            g.relation[d + i] = -2.0 * p.delta[i];
        }
        break;
    }
    case ScorerKind::transd: {
        const std::size_t d = s.base_dim();
        const auto u1 = t.head.subspan(0, d), u2 = t.head.subspan(d, d);
        const auto v1 = t.tail.subspan(0, d), v2 = t.tail.subspan(d, d);
        const auto r1 = t.relation.subspan(0, d);
        const TransDParts p = transd_parts(s, t);
        const RealVec up = scaled(p.delta, -2.0); // df / d(delta)
        const double along = dot(up, r1);
        g.head.resize(2 * d);
        g.tail.resize(2 * d);
        g.relation.resize(2 * d);
        for (std::size_t i = 0; i < d; ++i) {
            g.head[i] = up[i] + along * u2[i];
            g.head[d + i] = along * u1[i];
            g.tail[i] = -up[i] + along * v2[i];
            g.tail[d + i] = along * v1[i];
            g.relation[i] = (p.head_proj + p.tail_proj) * up[i];
            g.relation[d + i] = up[i];
        }
        break;
    }
    case ScorerKind::rotate: {
        const RealVec rel_hat = unit_project(t.relation, 2);
        const RealVec delta = rotate_residual(t, rel_hat);
        const RealVec up = scaled(delta, -2.0);
        g.tail = scaled(delta, 2.0);
        g.head = complex_elementwise_product(conj_pairs(rel_hat), up);
        g.relation = unit_project_pullback(t.relation, complex_elementwise_product(conj_pairs(t.head), up), 2);
        break;
    }
    case ScorerKind::quate: {
        const RealVec rel_hat = unit_project(t.relation, 4);
        g.tail = hamilton_product(t.head, rel_hat);
        g.head = hamilton_product(t.tail, conj_quats(rel_hat));
        g.relation = unit_project_pullback(t.relation, hamilton_product(conj_quats(t.head), t.tail), 4);
        break;
    }
    }
    return g;
}

RealVec grad_head(const Scorer& s, const TripleEmbedding& t) { return gradients(s, t).head; }
RealVec grad_rel(const Scorer& s, const TripleEmbedding& t) { return gradients(s, t).relation; }
RealVec grad_tail(const Scorer& s, const TripleEmbedding& t) { return gradients(s, t).tail; }

namespace {

void check_batch(const Scorer& s, ad::Var u, ad::Var r, ad::Var v) {
    if (u.cols() != s.entity_width() || v.cols() != s.entity_width() || r.cols() != s.relation_width() ||
        u.rows() != v.rows() || u.rows() != r.rows()) {
        throw DimensionError(std::string(to_string(s.kind())) + ": batch shapes do not match scorer widths");
    }
}

} // namespace

GradientExprs message_ops(const Scorer& s, ad::Var u, ad::Var r, ad::Var v) {
    using namespace ad;
    check_batch(s, u, r, v);
    const std::size_t d = s.base_dim();
    switch (s.kind()) {
    case ScorerKind::transe: {
        const Var delta = sub(add(u, r), v);
        const Var up = scale(delta, -2.0);
        return {up, up, scale(delta, 2.0)};
    }
    case ScorerKind::distmult: return {mul(r, v), mul(u, v), mul(u, r)};
    case ScorerKind::transh: {
        const Var r1 = slice(r, 0, d);
        const Var r2 = slice(r, d, 2 * d);
        const Var diff = sub(u, v);
        const Var s_diff = row_dot(r1, diff);
        const Var delta = add(sub(diff, row_scale(r1, s_diff)), r2);
        const Var s_delta = row_dot(r1, delta);
        const Var projected = sub(delta, row_scale(r1, s_delta));
        const Var rel1 = scale(add(row_scale(diff, s_delta), row_scale(delta, s_diff)), 2.0);
        return {scale(projected, -2.0), concat(rel1, scale(delta, -2.0)), scale(projected, 2.0)};
    }
    case ScorerKind::transd: {
        const Var u1 = slice(u, 0, d), u2 = slice(u, d, 2 * d);
        const Var v1 = slice(v, 0, d), v2 = slice(v, d, 2 * d);
        const Var r1 = slice(r, 0, d), r2 = slice(r, d, 2 * d);
        const Var head_proj = row_dot(u2, u1);
        const Var tail_proj = row_dot(v2, v1);
        const Var delta =
            add(sub(add(add(u1, row_scale(r1, head_proj)), r2), v1), row_scale(r1, tail_proj));
        const Var up = scale(delta, -2.0);
        const Var along = row_dot(up, r1);
        const Var head = concat(add(up, row_scale(u2, along)), row_scale(u1, along));
        const Var tail = concat(sub(row_scale(v2, along), up), row_scale(v1, along));
        const Var rel = concat(row_scale(up, add(head_proj, tail_proj)), up);
        return {head, rel, tail};
    }
    case ScorerKind::rotate: {
        const Var rel_hat = unit_blocks(r, 2);
        const Var delta = sub(complex_product(u, rel_hat), v);
        const Var up = scale(delta, -2.0);
        const Var head = complex_product(conjugate(rel_hat, 2), up);
        const Var rel = unit_blocks_vjp(r, complex_product(conjugate(u, 2), up), 2);
        return {head, rel, scale(delta, 2.0)};
    }
    case ScorerKind::quate: {
        const Var rel_hat = unit_blocks(r, 4);
        const Var tail = hamilton_product(u, rel_hat);
        const Var head = hamilton_product(v, conjugate(rel_hat, 4));
        const Var rel = unit_blocks_vjp(r, hamilton_product(conjugate(u, 4), v), 4);
        return {head, rel, tail};
    }
    }
    throw ContractError("message_ops: unknown scorer");
}

ad::Var score_op(const Scorer& s, ad::Var u, ad::Var r, ad::Var v) {
    using namespace ad;
    check_batch(s, u, r, v);
    const std::size_t d = s.base_dim();
    switch (s.kind()) {
    case ScorerKind::transe: return neg(l2_norm_sq(sub(add(u, r), v)));
    case ScorerKind::distmult: return row_dot(mul(u, r), v);
    case ScorerKind::transh: {
        const Var r1 = slice(r, 0, d), r2 = slice(r, d, 2 * d);
        const Var up = sub(u, row_scale(r1, row_dot(r1, u)));
        const Var vp = sub(v, row_scale(r1, row_dot(r1, v)));
        return neg(l2_norm_sq(sub(add(up, r2), vp)));
    }
    case ScorerKind::transd: {
        const Var u1 = slice(u, 0, d), u2 = slice(u, d, 2 * d);
        const Var v1 = slice(v, 0, d), v2 = slice(v, d, 2 * d);
        const Var r1 = slice(r, 0, d), r2 = slice(r, d, 2 * d);
        const Var up = add(u1, row_scale(r1, row_dot(u2, u1)));
        const Var vp = sub(v1, row_scale(r1, row_dot(v2, v1)));
        return neg(l2_norm_sq(sub(add(up, r2), vp)));
    }
    case ScorerKind::rotate:
        return neg(l2_norm_sq(sub(complex_product(u, unit_blocks(r, 2)), v)));
    case ScorerKind::quate: return row_dot(hamilton_product(u, unit_blocks(r, 4)), v);
    }
    throw ContractError("score_op: unknown scorer");
}

} // namespace kegcn
