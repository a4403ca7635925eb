#include "kegcn/gradcheck.hpp"

#include "kegcn/errors.hpp"
#include "kegcn/random.hpp"
#include "kegcn/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace kegcn {

double ScorerCheck::worst() const { return std::max({head, relation, tail}); }

namespace {

RealVec normal_vec(std::size_t n, RandomSource& source) {
    RealVec x(n);
    for (double& v : x) v = source.normal();
    return x;
}

// Resamples relation blocks whose norm is too small for a stable projection.
void condition_relation(ScorerKind kind, RealVec& r, RandomSource& source) {
    const std::size_t k = kind == ScorerKind::rotate ? 2 : kind == ScorerKind::quate ? 4 : 0;
    if (k == 0) return;
    for (std::size_t i = 0; i < r.size(); i += k) {
        for (;;) {
            double n2 = 0.0;
            for (std::size_t j = 0; j < k; ++j) n2 += r[i + j] * r[i + j];
            if (std::sqrt(n2) >= 0.1) break;
            for (std::size_t j = 0; j < k; ++j) r[i + j] = source.normal();
        }
    }
}

double worst_error(const RealVec& analytic, const RealVec& numeric, double floor) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i)
        worst = std::max(worst, ad::gradient_error(analytic[i], numeric[i], floor));
    return worst;
}

} // namespace

ScorerCheck check_scorer_gradients(ScorerKind kind, std::size_t points, std::uint64_t seed,
                                   std::size_t base_dim, double eps, double floor) {
    const Scorer s(kind, base_dim);
    RandomSource source(seed);
    ScorerCheck out;
    out.kind = kind;
    out.points = points;
    for (std::size_t p = 0; p < points; ++p) {
        RealVec u = normal_vec(s.entity_width(), source);
        RealVec r = normal_vec(s.relation_width(), source);
        RealVec v = normal_vec(s.entity_width(), source);
        condition_relation(kind, r, source);
        const TripleGradients g = gradients(s, {u, r, v});
        const RealVec nh = ad::numeric_gradient(
            [&](std::span<const double> x) { return score(s, {x, r, v}); }, u, eps);
        const RealVec nr = ad::numeric_gradient(
            [&](std::span<const double> x) { return score(s, {u, x, v}); }, r, eps);
        const RealVec nt = ad::numeric_gradient(
            [&](std::span<const double> x) { return score(s, {u, r, x}); }, v, eps);
        out.head = std::max(out.head, worst_error(g.head, nh, floor));
        out.relation = std::max(out.relation, worst_error(g.relation, nr, floor));
        out.tail = std::max(out.tail, worst_error(g.tail, nt, floor));
    }
    return out;
}

std::string_view to_string(Objective objective) {
    switch (objective) {
    case Objective::alignment: return "alignment";
    case Objective::multi_class: return "multi-class";
    case Objective::multi_label: return "multi-label";
    }
    return "alignment";
}

namespace {

constexpr std::size_t kEntities = 10;
constexpr std::size_t kRelations = 3;
constexpr std::size_t kTriples = 20;
constexpr std::size_t kClasses = 3;

struct Instance {
    std::vector<KnowledgeGraph> graphs;
    std::vector<GraphIndex> indices;
    ModelParams params;
    std::vector<EntityPair> positives, negatives;
    std::vector<LabeledEntity> labeled;
};

Instance make_instance(ScorerKind scorer, Objective objective, Mode mode, std::uint64_t seed) {
    RandomSource source(seed);
    Instance in;
    ModelConfig cfg;
    cfg.mode = mode;
    cfg.scorer = scorer;
    cfg.dim = 8;
    cfg.layers = 2;
    if (objective != Objective::alignment) cfg.output_width = kClasses;
    in.params.config = cfg;

    const std::size_t graph_count = objective == Objective::alignment ? 2 : 1;
    for (std::size_t i = 0; i < graph_count; ++i) {
        in.graphs.push_back(random_graph(kEntities, kRelations, kTriples, source));
        in.indices.push_back(index_graph(in.graphs.back(), cfg.alpha, cfg.normalize));
    }
    in.params.layers = init_params(cfg, kRelations, source);
    for (const KnowledgeGraph& g : in.graphs)
        in.params.inputs.push_back(init_state(cfg, g.num_entities(), g.num_relations(), source));

    if (objective == Objective::alignment) {
        std::vector<EntityId> perm(kEntities);
        std::iota(perm.begin(), perm.end(), 0);
        for (std::size_t i = kEntities; i > 1; --i) std::swap(perm[i - 1], perm[source.index(i)]);
        for (std::size_t i = 0; i < 6; ++i) in.positives.emplace_back(static_cast<EntityId>(i), perm[i]);
        in.negatives = sample_negatives(in.positives, 5, kEntities, kEntities, source);
    } else {
        for (std::size_t i = 0; i < 6; ++i) {
            LabeledEntity e;
            e.entity = static_cast<EntityId>(source.index(kEntities));
            if (objective == Objective::multi_class) {
                e.labels.push_back(static_cast<std::uint32_t>(source.index(kClasses)));
            } else {
                for (std::uint32_t c = 0; c < kClasses; ++c)
                    if (source.coin()) e.labels.push_back(c);
            }
            in.labeled.push_back(std::move(e));
        }
    }
    return in;
}

// Rebinds a flat list of tape variables to the structure of `params`.
struct BoundVars {
    std::vector<LayerVars> layers;
    std::vector<EmbeddingVars> inputs;
};

BoundVars bind(const ModelParams& params, std::span<const ad::Var> vars) {
    std::size_t next = 0;
    auto take = [&]() { return vars[next++]; };
    BoundVars b;
    for (const LayerParams& p : params.layers) {
        LayerVars lv;
        if (!p.weight.empty()) lv.weight = take();
        for (std::size_t r = 0; r < p.relation_weights.size(); ++r) lv.relation_weights.push_back(take());
        if (!p.relation_scale.empty()) lv.relation_scale = take();
        if (!p.self_weight.empty()) lv.self_weight = take();
        if (!p.relation_transform.empty()) lv.relation_transform = take();
        b.layers.push_back(std::move(lv));
    }
    for (const EmbeddingState& s : params.inputs) {
        EmbeddingVars ev;
        ev.entities = take();
        if (!s.relations.empty()) ev.relations = take();
        b.inputs.push_back(ev);
    }
    if (next != vars.size()) throw ContractError("gradient check: variable count mismatch");
    return b;
}

ad::Var objective_value(const Instance& in, Objective objective, std::span<const ad::Var> vars) {
    const BoundVars b = bind(in.params, vars);
    const ModelConfig& cfg = in.params.config;
    const EmbeddingVars out0 = record_model(in.indices[0], b.inputs[0], b.layers, cfg).back();
    if (objective == Objective::alignment) {
        const EmbeddingVars out1 = record_model(in.indices[1], b.inputs[1], b.layers, cfg).back();
        return alignment_loss(out0.entities, out1.entities, in.positives, in.negatives, 3.0);
    }
    return classification_loss(out0.entities, in.labeled, kClasses, objective == Objective::multi_label);
}

} // namespace

EndToEndCheck check_end_to_end(ScorerKind scorer, Objective objective, std::uint64_t seed, Mode mode,
                               double min_margin) {
    EndToEndCheck out;
    out.scorer = scorer;
    out.objective = objective;
    for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
        Instance in = make_instance(scorer, objective, mode, seed + attempt);
        std::vector<Tensor> point;
        for (Tensor* t : in.params.tensors()) point.push_back(*t);
        const ad::TapeFunction fn = [&](ad::Tape&, std::span<const ad::Var> vars) {
            return objective_value(in, objective, vars);
        };
        double margin = 0.0;
        {
            ad::Tape tape;
            std::vector<ad::Var> leaves;
            for (const Tensor& t : point) leaves.push_back(tape.leaf(t));
            (void)fn(tape, leaves);
            margin = tape.min_kink_margin();
        }
        if (margin < min_margin) continue;
        out.seed = seed + attempt;
        out.report = ad::finite_diff_check(fn, point, 1e-5, 1e-2);
        return out;
    }
    throw ContractError("gradient check: no instance without near-kink inputs after 100 draws");
}

} // namespace kegcn
