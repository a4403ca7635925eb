#include "kegcn/propagation.hpp"

#include "kegcn/errors.hpp"
#include "kegcn/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kegcn {

Mode parse_mode(std::string_view token) {
    if (token == "kegcn") return Mode::kegcn;
    if (token == "compgcn-sub") return Mode::compgcn_sub;
    if (token == "compgcn-mult") return Mode::compgcn_mult;
    if (token == "compgcn-corr") return Mode::compgcn_corr;
    if (token == "rgcn") return Mode::rgcn;
    if (token == "wgcn") return Mode::wgcn;
    throw ValidationError("unknown mode '" + std::string(token) + "'");
}

std::string_view to_string(Mode mode) {
    switch (mode) {
    case Mode::kegcn: return "kegcn";
    case Mode::compgcn_sub: return "compgcn-sub";
    case Mode::compgcn_mult: return "compgcn-mult";
    case Mode::compgcn_corr: return "compgcn-corr";
    case Mode::rgcn: return "rgcn";
    case Mode::wgcn: return "wgcn";
    }
    return "kegcn";
}

bool is_compgcn(Mode mode) {
    return mode == Mode::compgcn_sub || mode == Mode::compgcn_mult || mode == Mode::compgcn_corr;
}

bool has_relation_table(Mode mode) { return mode != Mode::rgcn && mode != Mode::wgcn; }

void ModelConfig::validate() const {
    if (layers == 0) throw ValidationError("layers must be at least 1");
    if (dim == 0) throw ValidationError("dim must be positive");
    if (alpha < 0.0 || !std::isfinite(alpha)) throw ValidationError("alpha must be finite and non-negative");
    if (mode == Mode::kegcn) (void)Scorer::for_entity_width(scorer, dim);
}

std::size_t ModelConfig::relation_width() const {
    if (!has_relation_table(mode)) return 0;
    if (mode == Mode::kegcn) return Scorer::for_entity_width(scorer, dim).relation_width();
    return dim;
}

std::size_t ModelConfig::layer_output(std::size_t layer) const {
    return layer + 1 == layers && output_width != 0 ? output_width : dim;
}

LayerSpec layer_spec(const ModelConfig& cfg, std::size_t layer) {
    LayerSpec s;
    s.mode = cfg.mode;
    s.scorer = cfg.scorer;
    s.in_width = cfg.layer_input(layer);
    s.out_width = cfg.layer_output(layer);
    s.relation_width = cfg.relation_width();
    s.alpha = cfg.alpha;
    s.normalize = cfg.normalize;
    const bool last = layer + 1 == cfg.layers;
    s.entity_activation = last ? cfg.final_activation : cfg.hidden_activation;
    s.relation_activation = is_compgcn(cfg.mode) || last ? Activation::identity : cfg.hidden_activation;
    return s;
}

namespace {

template <class P, class T, class F>
void visit_params(P& p, F&& fn) {
    if (!p.weight.empty()) fn(std::string("weight"), p.weight);
    for (std::size_t r = 0; r < p.relation_weights.size(); ++r)
        fn("relation_weight." + std::to_string(r), p.relation_weights[r]);
    if (!p.relation_scale.empty()) fn(std::string("relation_scale"), p.relation_scale);
    if (!p.self_weight.empty()) fn(std::string("self_weight"), p.self_weight);
    if (!p.relation_transform.empty()) fn(std::string("relation_transform"), p.relation_transform);
}

} // namespace

void for_each_param(LayerParams& p, const std::function<void(const std::string&, Tensor&)>& fn) {
    visit_params<LayerParams, Tensor>(p, fn);
}

void for_each_param(const LayerParams& p,
                    const std::function<void(const std::string&, const Tensor&)>& fn) {
    visit_params<const LayerParams, const Tensor>(p, fn);
}

LayerParams init_layer(const LayerSpec& spec, const ModelConfig& cfg, std::size_t num_relations,
                       RandomSource& source) {
    LayerParams p;
    if (cfg.uses_relation_weights()) {
        for (std::size_t r = 0; r < num_relations; ++r)
            p.relation_weights.push_back(truncated_normal_fill(spec.out_width, spec.in_width, source));
    } else {
        p.weight = truncated_normal_fill(spec.out_width, spec.in_width, source);
    }
    if (spec.mode == Mode::wgcn) {
        p.relation_scale = Tensor(num_relations, 1, 1.0);
        if (p.weight.empty()) p.weight = truncated_normal_fill(spec.out_width, spec.in_width, source);
    } else {
        p.self_weight = truncated_normal_fill(spec.out_width, spec.in_width, source);
    }
    if (has_relation_table(spec.mode))
        p.relation_transform = truncated_normal_fill(spec.relation_width, spec.relation_width, source);
    return p;
}

std::vector<LayerParams> init_params(const ModelConfig& cfg, std::size_t num_relations,
                                     RandomSource& source) {
    cfg.validate();
    std::vector<LayerParams> out;
    for (std::size_t l = 0; l < cfg.layers; ++l)
        out.push_back(init_layer(layer_spec(cfg, l), cfg, num_relations, source));
    return out;
}

EmbeddingState init_state(const ModelConfig& cfg, std::size_t num_entities,
                          std::size_t num_relations, RandomSource& source) {
    cfg.validate();
    if (num_entities == 0) throw ValidationError("graph has no entities");
    EmbeddingState s;
    s.entities = truncated_normal_fill(num_entities, cfg.dim, source);
    if (has_relation_table(cfg.mode) && num_relations > 0)
        s.relations = truncated_normal_fill(num_relations, cfg.relation_width(), source);
    return s;
}

LayerVars to_vars(ad::Tape& tape, const LayerParams& p, bool trainable) {
    auto make = [&](const Tensor& t) {
        if (t.empty()) return ad::Var();
        return trainable ? tape.leaf(t) : tape.constant(t);
    };
    LayerVars v;
    v.weight = make(p.weight);
    for (const Tensor& w : p.relation_weights) v.relation_weights.push_back(make(w));
    v.relation_scale = make(p.relation_scale);
    v.self_weight = make(p.self_weight);
    v.relation_transform = make(p.relation_transform);
    return v;
}

void zip_params(const LayerParams& p, const LayerVars& v,
                const std::function<void(const Tensor&, ad::Var)>& fn) {
    if (!p.weight.empty()) fn(p.weight, v.weight);
    for (std::size_t r = 0; r < p.relation_weights.size(); ++r)
        fn(p.relation_weights[r], v.relation_weights.at(r));
    if (!p.relation_scale.empty()) fn(p.relation_scale, v.relation_scale);
    if (!p.self_weight.empty()) fn(p.self_weight, v.self_weight);
    if (!p.relation_transform.empty()) fn(p.relation_transform, v.relation_transform);
}

// ---------------------------------------------------------------------------
// Eager path

namespace {

RealVec composition(Mode mode, std::span<const double> x, std::span<const double> r) {
    if (x.size() != r.size()) throw DimensionError("composition operands differ in width");
    RealVec out(x.size());
    switch (mode) {
    case Mode::compgcn_sub:
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - r[i];
        return out;
    case Mode::compgcn_mult:
        for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * r[i];
        return out;
    case Mode::compgcn_corr: return circular_correlation(x, r);
    default: throw ContractError("composition requested outside a compgcn mode");
    }
}

std::span<const double> relation_row(const EmbeddingState& s, RelationId r) {
    if (s.relations.empty()) return {};
    return s.relations.row(r);
}

// d f(h_u, h_r, h_v) / d h_v for an in-link u -r-> v.
RealVec in_message(const LayerSpec& spec, std::span<const double> u, std::span<const double> r,
                   std::span<const double> v) {
    if (spec.mode == Mode::kegcn) return grad_tail(spec.make_scorer(), {u, r, v});
    if (is_compgcn(spec.mode)) return composition(spec.mode, u, r);
    return RealVec(u.begin(), u.end());
}

// d f(h_v, h_r, h_u) / d h_v for an out-link v -r-> u.
RealVec out_message(const LayerSpec& spec, std::span<const double> v, std::span<const double> r,
                    std::span<const double> u) {
    if (spec.mode == Mode::kegcn) return grad_head(spec.make_scorer(), {v, r, u});
    if (is_compgcn(spec.mode)) return composition(spec.mode, u, r);
    return RealVec(u.begin(), u.end());
}

void check_state(const EmbeddingState& s, const LayerSpec& spec, const KnowledgeGraph& g) {
    if (s.entities.rows() != g.num_entities() || s.entities.cols() != spec.in_width)
        throw DimensionError("entity table is " + std::to_string(s.entities.rows()) + " x " +
                             std::to_string(s.entities.cols()) + ", expected " +
                             std::to_string(g.num_entities()) + " x " + std::to_string(spec.in_width));
    if (has_relation_table(spec.mode) && g.num_relations() > 0 &&
        (s.relations.rows() != g.num_relations() || s.relations.cols() != spec.relation_width))
        throw DimensionError("relation table does not match the graph and relation width");
}

// out += factor * M x
void add_transformed(RealVec& out, const Tensor& m, std::span<const double> x, double factor) {
    const RealVec y = matvec(m, x);
    if (y.size() != out.size()) throw DimensionError("transformed message width mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) out[i] += factor * y[i];
}

const Tensor& edge_weight(const LayerParams& p, RelationId r) {
    return p.relation_weights.empty() ? p.weight : p.relation_weights.at(r);
}

double edge_factor(const LayerParams& p, const LayerSpec& spec, RelationId r) {
    return spec.mode == Mode::wgcn ? p.relation_scale(r, 0) : 1.0;
}

} // namespace

RealVec entity_message(const KnowledgeGraph& g, const EmbeddingState& state, const LayerParams& p,
                       const LayerSpec& spec, EntityId v) {
    check_state(state, spec, g);
    RealVec acc(spec.out_width, 0.0);
    const double norm = spec.normalize ? degree_norm(g, v, spec.alpha) : 1.0;
    if (norm == 0.0) return acc;
    const auto hv = state.entities.row(v);
    for (const Neighbor& n : g.in_neighbors(v)) {
        const RealVec msg = in_message(spec, state.entities.row(n.entity), relation_row(state, n.relation), hv);
        add_transformed(acc, edge_weight(p, n.relation), msg, edge_factor(p, spec, n.relation));
    }
    for (const Neighbor& n : g.out_neighbors(v)) {
        const RealVec msg = out_message(spec, hv, relation_row(state, n.relation), state.entities.row(n.entity));
        add_transformed(acc, edge_weight(p, n.relation), msg, edge_factor(p, spec, n.relation));
    }
    for (double& x : acc) x *= norm;
    return acc;
}

RealVec relation_message(const KnowledgeGraph& g, const EmbeddingState& state,
                         const LayerSpec& spec, RelationId r) {
    check_state(state, spec, g);
    if (!has_relation_table(spec.mode)) throw UnsupportedModeError("mode has no relation embeddings");
    RealVec acc(spec.relation_width, 0.0);
    const double norm = spec.normalize ? relation_norm(g, r, spec.alpha) : 1.0;
    if (spec.mode != Mode::kegcn || norm == 0.0) return acc;
    const Scorer scorer = spec.make_scorer();
    const auto hr = state.relations.row(r);
    for (const Endpoints& e : g.relation_endpoints(r)) {
        const RealVec grad = grad_rel(scorer, {state.entities.row(e.head), hr, state.entities.row(e.tail)});
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += grad[i];
    }
    for (double& x : acc) x *= norm;
    return acc;
}

EmbeddingState layer_forward(const KnowledgeGraph& g, const EmbeddingState& state,
                             const LayerParams& p, const LayerSpec& spec) {
    check_state(state, spec, g);
    const Tensor& self = spec.mode == Mode::wgcn ? p.weight : p.self_weight;
    EmbeddingState out;
    out.entities = Tensor(g.num_entities(), spec.out_width);
    const std::size_t cost = g.num_triples() * spec.in_width * spec.out_width * 4;
    parallel_for(g.num_entities(), cost, [&](std::size_t v) {
        RealVec h = entity_message(g, state, p, spec, static_cast<EntityId>(v));
        add_transformed(h, self, state.entities.row(v), 1.0);
        auto dst = out.entities.row(v);
        for (std::size_t i = 0; i < h.size(); ++i) dst[i] = activate(spec.entity_activation, h[i]);
    });
    if (has_relation_table(spec.mode) && !state.relations.empty()) {
        out.relations = Tensor(g.num_relations(), spec.relation_width);
        for (std::size_t r = 0; r < g.num_relations(); ++r) {
            RealVec m = relation_message(g, state, spec, static_cast<RelationId>(r));
            const auto hr = state.relations.row(r);
            for (std::size_t i = 0; i < m.size(); ++i) m[i] += hr[i];
            const RealVec y = matvec(p.relation_transform, m);
            auto dst = out.relations.row(r);
            for (std::size_t i = 0; i < y.size(); ++i) dst[i] = activate(spec.relation_activation, y[i]);
        }
    }
    return out;
}

EmbeddingState model_forward(const KnowledgeGraph& g, const EmbeddingState& input,
                             const std::vector<LayerParams>& params, const ModelConfig& cfg) {
    if (params.size() != cfg.layers) throw DimensionError("parameter count does not match layer count");
    EmbeddingState s = input;
    for (std::size_t l = 0; l < cfg.layers; ++l) s = layer_forward(g, s, params[l], layer_spec(cfg, l));
    return s;
}

// ---------------------------------------------------------------------------
// Tape path

GraphIndex index_graph(const KnowledgeGraph& g, double alpha, bool normalize) {
    GraphIndex gi;
    gi.num_entities = g.num_entities();
    gi.num_relations = g.num_relations();
    std::vector<std::uint32_t> heads, rels, tails;
    for (const Triple& t : g.triples()) {
        heads.push_back(t.head);
        rels.push_back(t.relation);
        tails.push_back(t.tail);
    }
    gi.heads = ad::make_index(std::move(heads));
    gi.relations = ad::make_index(std::move(rels));
    gi.tails = ad::make_index(std::move(tails));
    if (normalize) {
        gi.entity_norm = Tensor(g.num_entities(), 1);
        for (std::size_t v = 0; v < g.num_entities(); ++v)
            gi.entity_norm(v, 0) = degree_norm(g, static_cast<EntityId>(v), alpha);
        gi.relation_norm = Tensor(g.num_relations(), 1);
        for (std::size_t r = 0; r < g.num_relations(); ++r)
            gi.relation_norm(r, 0) = relation_norm(g, static_cast<RelationId>(r), alpha);
    }
    for (std::size_t r = 0; r < g.num_relations(); ++r) {
        std::vector<std::uint32_t> h, t;
        for (const Endpoints& e : g.relation_endpoints(static_cast<RelationId>(r))) {
            h.push_back(e.head);
            t.push_back(e.tail);
        }
        const std::size_t n = h.size();
        gi.heads_of.push_back(ad::make_index(std::move(h)));
        gi.tails_of.push_back(ad::make_index(std::move(t)));
        gi.relation_of.push_back(ad::make_index(std::vector<std::uint32_t>(n, static_cast<std::uint32_t>(r))));
    }
    return gi;
}

namespace {

struct EdgeMessages {
    ad::Var in;       // to tails
    ad::Var out;      // to heads
    ad::Var relation; // to relations; invalid when the mode has none
};

ad::Var compose(Mode mode, ad::Var x, ad::Var r) {
    switch (mode) {
    case Mode::compgcn_sub: return ad::sub(x, r);
    case Mode::compgcn_mult: return ad::mul(x, r);
    case Mode::compgcn_corr: return ad::circular_correlation(x, r);
    default: throw ContractError("composition requested outside a compgcn mode");
    }
}

EdgeMessages edge_messages(const LayerSpec& spec, ad::Var u, ad::Var r, ad::Var v) {
    if (spec.mode == Mode::kegcn) {
        const GradientExprs g = message_ops(spec.make_scorer(), u, r, v);
        return {g.tail, g.head, g.relation};
    }
    if (is_compgcn(spec.mode)) return {compose(spec.mode, u, r), compose(spec.mode, v, r), {}};
    return {u, v, {}};
}

ad::Var accumulate(ad::Var acc, ad::Var x) { return acc.valid() ? ad::add(acc, x) : x; }

} // namespace

EmbeddingVars record_layer(const GraphIndex& gi, const EmbeddingVars& in, const LayerVars& p,
                           const LayerSpec& spec) {
    using namespace ad;
    Tape& tape = *in.entities.tape();
    const Var E = in.entities;
    const Var Rel = in.relations;
    const bool with_relations = has_relation_table(spec.mode) && Rel.valid();
    const std::size_t n = gi.num_entities;
    if (E.rows() != n || E.cols() != spec.in_width) throw DimensionError("entity table does not match layer input");

    Var messages;     // N x out, before normalization
    Var rel_messages; // R x relation width
    auto add_group = [&](const IndexList& heads, const IndexList& rels, const IndexList& tails, Var weight) {
        if (heads->empty()) return;
        const Var U = gather(E, heads);
        const Var V = gather(E, tails);
        const Var R = with_relations ? gather(Rel, rels) : Var();
        EdgeMessages m = edge_messages(spec, U, R, V);
        if (spec.mode == Mode::wgcn) {
            const Var a = gather(p.relation_scale, rels);
            m.in = row_scale(m.in, a);
            m.out = row_scale(m.out, a);
        }
        const Var S = add(scatter_add(m.in, tails, n), scatter_add(m.out, heads, n));
        messages = accumulate(messages, matmul_nt(S, weight));
        if (m.relation.valid())
            rel_messages = accumulate(rel_messages, scatter_add(m.relation, rels, gi.num_relations));
    };
    if (p.relation_weights.empty()) {
        add_group(gi.heads, gi.relations, gi.tails, p.weight);
    } else {
        for (std::size_t r = 0; r < gi.num_relations; ++r)
            add_group(gi.heads_of[r], gi.relation_of[r], gi.tails_of[r], p.relation_weights.at(r));
    }

    Var pre = matmul_nt(E, spec.mode == Mode::wgcn ? p.weight : p.self_weight);
    if (messages.valid()) {
        if (!gi.entity_norm.empty()) messages = row_scale(messages, tape.constant(gi.entity_norm));
        pre = add(messages, pre);
    }
    EmbeddingVars out;
    out.entities = activate(spec.entity_activation, pre);
    if (with_relations) {
        Var x = Rel;
        if (rel_messages.valid()) {
            if (!gi.relation_norm.empty()) rel_messages = row_scale(rel_messages, tape.constant(gi.relation_norm));
            x = add(rel_messages, Rel);
        }
        out.relations = activate(spec.relation_activation, matmul_nt(x, p.relation_transform));
    }
    return out;
}

std::vector<EmbeddingVars> record_model(const GraphIndex& gi, const EmbeddingVars& input,
                                        const std::vector<LayerVars>& params,
                                        const ModelConfig& cfg) {
    if (params.size() != cfg.layers) throw DimensionError("parameter count does not match layer count");
    std::vector<EmbeddingVars> states{input};
    for (std::size_t l = 0; l < cfg.layers; ++l)
        states.push_back(record_layer(gi, states.back(), params[l], layer_spec(cfg, l)));
    return states;
}

// ---------------------------------------------------------------------------
// Reference architectures

EmbeddingState baseline_forward(Mode mode, const KnowledgeGraph& g, const EmbeddingState& state,
                                const LayerParams& p, const LayerSpec& spec) {
    if (mode == Mode::kegcn) throw ContractError("baseline_forward needs a reduction mode");
    check_state(state, spec, g);
    const std::size_t n = g.num_entities();
    EmbeddingState out;
    out.entities = Tensor(n, spec.out_width);
    for (std::size_t v = 0; v < n; ++v) {
        RealVec h(spec.out_width, 0.0);
        // Neighbours from both link directions.
        std::vector<Neighbor> nbrs(g.in_neighbors(static_cast<EntityId>(v)).begin(),
                                   g.in_neighbors(static_cast<EntityId>(v)).end());
        nbrs.insert(nbrs.end(), g.out_neighbors(static_cast<EntityId>(v)).begin(),
                    g.out_neighbors(static_cast<EntityId>(v)).end());
        if (is_compgcn(mode)) {
            // h_v = f( sum W_r phi(h_u, h_r) + W_0 h_v )
            for (const Neighbor& nb : nbrs) {
                const RealVec c = composition(mode, state.entities.row(nb.entity), state.relations.row(nb.relation));
                const RealVec y = matvec(p.relation_weights.at(nb.relation), c);
                for (std::size_t i = 0; i < h.size(); ++i) h[i] += y[i];
            }
            const RealVec self = matvec(p.self_weight, state.entities.row(v));
            for (std::size_t i = 0; i < h.size(); ++i) h[i] += self[i];
        } else if (mode == Mode::rgcn) {
            // h_v = f( sum_r sum_{u in N_r(v)} W_r h_u + W_0 h_v )
            for (std::size_t r = 0; r < g.num_relations(); ++r) {
                for (const Neighbor& nb : nbrs) {
                    if (nb.relation != r) continue;
                    const RealVec y = matvec(p.relation_weights.at(r), state.entities.row(nb.entity));
                    for (std::size_t i = 0; i < h.size(); ++i) h[i] += y[i];
                }
            }
            const RealVec self = matvec(p.self_weight, state.entities.row(v));
            for (std::size_t i = 0; i < h.size(); ++i) h[i] += self[i];
        } else {
            // h_v = f( sum alpha_r W h_u + W h_v )
            for (const Neighbor& nb : nbrs) {
                const RealVec y = matvec(p.weight, state.entities.row(nb.entity));
                const double a = p.relation_scale(nb.relation, 0);
                for (std::size_t i = 0; i < h.size(); ++i) h[i] += a * y[i];
            }
            const RealVec self = matvec(p.weight, state.entities.row(v));
            for (std::size_t i = 0; i < h.size(); ++i) h[i] += self[i];
        }
        auto dst = out.entities.row(v);
        for (std::size_t i = 0; i < h.size(); ++i) dst[i] = activate(spec.entity_activation, h[i]);
    }
    if (is_compgcn(mode)) {
        // h_r = W_rel h_r
        out.relations = Tensor(g.num_relations(), spec.relation_width);
        for (std::size_t r = 0; r < g.num_relations(); ++r) {
            const RealVec y = matvec(p.relation_transform, state.relations.row(r));
            std::copy(y.begin(), y.end(), out.relations.row(r).begin());
        }
    }
    return out;
}

double verify_reduction(Mode mode, const KnowledgeGraph& g, std::uint64_t seed, std::size_t layers,
                        std::size_t width) {
    if (mode == Mode::kegcn) throw ContractError("verify_reduction needs a reduction mode");
    ModelConfig cfg;
    cfg.mode = mode;
    cfg.dim = width;
    cfg.layers = layers;
    cfg.normalize = false;
    cfg.relation_specific = mode != Mode::wgcn;
    cfg.final_activation = Activation::relu;

    RandomSource source(seed);
    std::vector<LayerParams> params = init_params(cfg, g.num_relations(), source);
    for (LayerParams& p : params)
        for (double& a : p.relation_scale.values()) a = source.uniform(0.5, 1.5);
    const EmbeddingState input = init_state(cfg, g.num_entities(), g.num_relations(), source);

    ad::Tape tape;
    EmbeddingVars in;
    in.entities = tape.constant(input.entities);
    if (!input.relations.empty()) in.relations = tape.constant(input.relations);
    std::vector<LayerVars> vars;
    for (const LayerParams& p : params) vars.push_back(to_vars(tape, p, false));
    const std::vector<EmbeddingVars> states = record_model(index_graph(g, cfg.alpha, false), in, vars, cfg);

    double worst = 0.0;
    EmbeddingState reference = input;
    for (std::size_t l = 0; l < layers; ++l) {
        reference = baseline_forward(mode, g, reference, params[l], layer_spec(cfg, l));
        worst = std::max(worst, max_abs_difference(states[l + 1].entities.value(), reference.entities));
        if (!reference.relations.empty())
            worst = std::max(worst, max_abs_difference(states[l + 1].relations.value(), reference.relations));
    }
    return worst;
}

KnowledgeGraph random_graph(std::size_t num_entities, std::size_t num_relations,
                            std::size_t num_triples, RandomSource& source) {
    std::vector<Triple> triples;
    triples.reserve(num_triples);
    for (std::size_t i = 0; i < num_triples; ++i) {
        Triple t;
        t.head = static_cast<EntityId>(source.index(num_entities));
        t.relation = static_cast<RelationId>(source.index(num_relations));
        t.tail = static_cast<EntityId>(source.index(num_entities));
        triples.push_back(t);
    }
    return KnowledgeGraph::build(std::move(triples), num_entities, num_relations);
}

} // namespace kegcn
