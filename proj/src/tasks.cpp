#include "kegcn/tasks.hpp"

#include "kegcn/errors.hpp"
#include "kegcn/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace kegcn {

void LabelSet::validate(std::size_t num_entities) const {
    if (num_classes == 0) throw ValidationError("label set has no classes");
    for (const auto* split : {&train, &valid, &test}) {
        for (const LabeledEntity& e : *split) {
            if (e.entity >= num_entities)
                throw ValidationError("labeled entity " + std::to_string(e.entity) + " is not in the graph");
            if (!multi_label && e.labels.size() != 1)
                throw ValidationError("multi-class entity " + std::to_string(e.entity) +
                                      " must carry exactly one label");
            for (std::uint32_t c : e.labels)
                if (c >= num_classes)
                    throw ValidationError("label " + std::to_string(c) + " is not below the class count " +
                                          std::to_string(num_classes));
        }
    }
}

std::vector<EntityPair> sample_negatives(std::span<const EntityPair> positives, std::size_t k,
                                         std::size_t left_count, std::size_t right_count,
                                         RandomSource& source) {
    if (k == 0) throw ValidationError("negatives per positive must be at least 1");
    if (left_count == 0 || right_count == 0) throw ValidationError("cannot corrupt into an empty graph");
    auto replace = [&](EntityId original, std::size_t count) {
        if (count == 1) return static_cast<EntityId>(0);
        EntityId x;
        do {
            x = static_cast<EntityId>(source.index(count));
        } while (x == original);
        return x;
    };
    std::vector<EntityPair> out;
    out.reserve(positives.size() * k);
    for (const EntityPair& p : positives) {
        for (std::size_t j = 0; j < k; ++j) {
            if (source.coin())
                out.emplace_back(replace(p.first, left_count), p.second);
            else
                out.emplace_back(p.first, replace(p.second, right_count));
        }
    }
    return out;
}

namespace {

ad::IndexList side(std::span<const EntityPair> pairs, bool left, std::size_t repeat = 1) {
    std::vector<std::uint32_t> idx;
    idx.reserve(pairs.size() * repeat);
    for (const EntityPair& p : pairs)
        for (std::size_t j = 0; j < repeat; ++j) idx.push_back(left ? p.first : p.second);
    return ad::make_index(std::move(idx));
}

} // namespace

ad::Var alignment_loss(ad::Var emb1, ad::Var emb2, std::span<const EntityPair> positives,
                       std::span<const EntityPair> negatives, double gamma) {
    using namespace ad;
    if (positives.empty()) throw ValidationError("empty training set");
    if (negatives.size() % positives.size() != 0)
        throw DimensionError("negative count is not a multiple of the positive count");
    if (emb1.cols() != emb2.cols()) throw DimensionError("the two graphs have different embedding widths");
    const std::size_t k = negatives.size() / positives.size();
    // Each positive distance is repeated once per negative it is paired with.
    const Var pos = l1(sub(gather(emb1, side(positives, true, k)), gather(emb2, side(positives, false, k))));
    const Var neg = l1(sub(gather(emb1, side(negatives, true)), gather(emb2, side(negatives, false))));
    return sum(relu(shift(sub(pos, neg), gamma)));
}

ad::Var classification_loss(ad::Var logits, std::span<const LabeledEntity> labeled,
                            std::size_t num_classes, bool multi_label) {
    using namespace ad;
    if (num_classes == 0) throw ValidationError("label set has no classes");
    if (labeled.empty()) throw ValidationError("empty training set");
    if (logits.cols() != num_classes) throw DimensionError("logit width does not match the class count");
    std::vector<std::uint32_t> rows;
    Tensor y(labeled.size(), num_classes);
    for (std::size_t i = 0; i < labeled.size(); ++i) {
        rows.push_back(labeled[i].entity);
        for (std::uint32_t c : labeled[i].labels) {
            if (c >= num_classes) throw ValidationError("label " + std::to_string(c) + " out of range");
            y(i, c) = 1.0;
        }
    }
    constexpr double lo = 1e-12, hi = 1.0 - 1e-12;
    Tape& tape = *logits.tape();
    const Var x = gather(logits, make_index(std::move(rows)));
    if (!multi_label) {
        const Var p = clamp(softmax_row(x), lo, hi);
        return neg(sum(mul(tape.constant(y), log(p))));
    }
    Tensor not_y(y.rows(), y.cols());
    for (std::size_t i = 0; i < y.size(); ++i) not_y[i] = 1.0 - y[i];
    const Var s = clamp(sigmoid(x), lo, hi);
    const Var pos = mul(tape.constant(std::move(y)), log(s));
    const Var negs = mul(tape.constant(std::move(not_y)), log(shift(neg(s), 1.0)));
    return neg(sum(add(pos, negs)));
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               double lr) {
    if (params.size() != grads.size()) throw DimensionError("adam: parameter and gradient counts differ");
    if (state.m.empty()) {
        for (const Tensor* p : params) {
            state.m.emplace_back(p->rows(), p->cols());
            state.v.emplace_back(p->rows(), p->cols());
        }
    }
    if (state.m.size() != params.size()) throw DimensionError("adam: state does not match parameters");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(state.beta1, t);
    const double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = grads[i];
        if (!p.same_shape(g) || !p.same_shape(state.m[i])) throw DimensionError("adam: shape mismatch");
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
            m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
            v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            p[j] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

std::vector<Tensor*> ModelParams::tensors() {
    std::vector<Tensor*> out;
    for (LayerParams& p : layers) for_each_param(p, [&](const std::string&, Tensor& t) { out.push_back(&t); });
    for (EmbeddingState& s : inputs) {
        out.push_back(&s.entities);
        if (!s.relations.empty()) out.push_back(&s.relations);
    }
    return out;
}

namespace {

EmbeddingVars input_vars(ad::Tape& tape, const EmbeddingState& s, bool trainable) {
    EmbeddingVars v;
    v.entities = trainable ? tape.leaf(s.entities) : tape.constant(s.entities);
    if (!s.relations.empty()) v.relations = trainable ? tape.leaf(s.relations) : tape.constant(s.relations);
    return v;
}

// Tape variables for every tensor of a model, aligned with ModelParams::tensors().
struct ModelVars {
    std::vector<LayerVars> layers;
    std::vector<EmbeddingVars> inputs;
    std::vector<ad::Var> all;
};

ModelVars model_vars(ad::Tape& tape, const ModelParams& params) {
    ModelVars mv;
    for (const LayerParams& p : params.layers) {
        mv.layers.push_back(to_vars(tape, p, true));
        zip_params(p, mv.layers.back(), [&](const Tensor&, ad::Var v) { mv.all.push_back(v); });
    }
    for (const EmbeddingState& s : params.inputs) {
        mv.inputs.push_back(input_vars(tape, s, true));
        mv.all.push_back(mv.inputs.back().entities);
        if (mv.inputs.back().relations.valid()) mv.all.push_back(mv.inputs.back().relations);
    }
    return mv;
}

struct EpochOutcome {
    ad::Var loss;
    std::optional<double> metric;
};

using EpochBody = std::function<EpochOutcome(ad::Tape&, const ModelVars&)>;

// Full-batch Adam with early stopping on the validation metric. The metric of
// an epoch describes the parameters that epoch started from.
TrainResult optimize(ModelParams params, const TrainConfig& cfg, const EpochBody& body,
                     const EpochCallback& on_epoch) {
    if (cfg.lr <= 0.0 || !std::isfinite(cfg.lr)) throw ValidationError("learning rate must be positive");
    TrainResult result;
    AdamState adam;
    std::optional<ModelParams> best;
    std::optional<double> best_metric;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        ad::Tape tape;
        const ModelVars vars = model_vars(tape, params);
        const EpochOutcome out = body(tape, vars);
        const double loss = out.loss.value().item();
        result.loss_history.push_back(loss);
        result.epochs_run = epoch + 1;
        if (on_epoch) on_epoch(epoch, loss, out.metric.value_or(0.0));
        if (out.metric) {
            if (!best_metric || *out.metric > *best_metric) {
                best_metric = out.metric;
                best = params;
                result.best_epoch = epoch;
            } else if (epoch - result.best_epoch >= cfg.patience) {
                break;
            }
        }
        const ad::Gradients grads = tape.backward(out.loss);
        std::vector<Tensor> g;
        g.reserve(vars.all.size());
        for (ad::Var v : vars.all) g.push_back(grads.wrt(v));
        const std::vector<Tensor*> targets = params.tensors();
        adam_step(targets, g, adam, cfg.lr);
    }
    if (best) {
        result.params = std::move(*best);
        result.best_metric = *best_metric;
    } else {
        result.params = std::move(params);
        result.best_epoch = result.epochs_run;
    }
    return result;
}

void check_pairs(std::span<const EntityPair> pairs, std::size_t n1, std::size_t n2) {
    for (const EntityPair& p : pairs)
        if (p.first >= n1 || p.second >= n2)
            throw ValidationError("alignment pair (" + std::to_string(p.first) + ", " +
                                  std::to_string(p.second) + ") is out of range");
}

std::vector<std::size_t> directional_ranks(const Tensor& from, const Tensor& to,
                                           std::span<const EntityPair> pairs, bool forward) {
    std::vector<std::size_t> ranks(pairs.size());
    parallel_for(pairs.size(), pairs.size() * to.rows() * to.cols(), [&](std::size_t i) {
        const std::size_t q = forward ? pairs[i].first : pairs[i].second;
        const std::size_t truth = forward ? pairs[i].second : pairs[i].first;
        RealVec d(to.rows());
        for (std::size_t c = 0; c < to.rows(); ++c) d[c] = l1_distance(from.row(q), to.row(c));
        ranks[i] = rank_of_truth(d, truth);
    });
    return ranks;
}

} // namespace

EmbeddingState infer(const KnowledgeGraph& g, const EmbeddingState& input,
                     const std::vector<LayerParams>& layers, const ModelConfig& cfg) {
    ad::Tape tape;
    std::vector<LayerVars> vars;
    for (const LayerParams& p : layers) vars.push_back(to_vars(tape, p, false));
    const auto states = record_model(index_graph(g, cfg.alpha, cfg.normalize), input_vars(tape, input, false),
                                     vars, cfg);
    EmbeddingState out;
    out.entities = states.back().entities.value();
    if (states.back().relations.valid()) out.relations = states.back().relations.value();
    return out;
}

RankingMetrics evaluate_alignment(const Tensor& emb1, const Tensor& emb2,
                                  std::span<const EntityPair> pairs) {
    if (pairs.empty()) throw ContractError("alignment evaluation over an empty pair list");
    if (emb1.cols() != emb2.cols()) throw DimensionError("the two graphs have different embedding widths");
    check_pairs(pairs, emb1.rows(), emb2.rows());
    const auto left = directional_ranks(emb1, emb2, pairs, true);
    const auto right = directional_ranks(emb2, emb1, pairs, false);
    return average(ranking_metrics(left), ranking_metrics(right));
}

TrainResult train_alignment(const KnowledgeGraph& g1, const KnowledgeGraph& g2,
                            const AlignmentSeeds& seeds, const TrainConfig& cfg,
                            const EpochCallback& on_epoch) {
    if (seeds.train.empty()) throw ValidationError("empty training set");
    if (cfg.gamma <= 0.0) throw ValidationError("margin gamma must be positive");
    if (cfg.negatives == 0) throw ValidationError("negatives per positive must be at least 1");
    for (const auto* split : {&seeds.train, &seeds.valid, &seeds.test})
        check_pairs(*split, g1.num_entities(), g2.num_entities());
    ModelConfig model = cfg.model;
    model.output_width = 0;
    model.validate();

    RandomSource source(cfg.seed);
    ModelParams params;
    params.config = model;
    params.layers = init_params(model, std::max(g1.num_relations(), g2.num_relations()), source);
    params.inputs.push_back(init_state(model, g1.num_entities(), g1.num_relations(), source));
    params.inputs.push_back(init_state(model, g2.num_entities(), g2.num_relations(), source));
    RandomSource negative_source = source.fork();

    const GraphIndex gi1 = index_graph(g1, model.alpha, model.normalize);
    const GraphIndex gi2 = index_graph(g2, model.alpha, model.normalize);
    auto body = [&](ad::Tape&, const ModelVars& vars) {
        const EmbeddingVars out1 = record_model(gi1, vars.inputs[0], vars.layers, model).back();
        const EmbeddingVars out2 = record_model(gi2, vars.inputs[1], vars.layers, model).back();
        const auto negatives = sample_negatives(seeds.train, cfg.negatives, g1.num_entities(),
                                                g2.num_entities(), negative_source);
        EpochOutcome o;
        o.loss = alignment_loss(out1.entities, out2.entities, seeds.train, negatives, cfg.gamma);
        if (!seeds.valid.empty())
            o.metric = evaluate_alignment(out1.entities.value(), out2.entities.value(), seeds.valid).hits1;
        return o;
    };
    return optimize(std::move(params), cfg, body, on_epoch);
}

ClassificationMetrics evaluate_classification(const Tensor& logits,
                                              std::span<const LabeledEntity> labeled) {
    if (labeled.empty()) throw ContractError("classification evaluation over an empty set");
    ClassificationMetrics m;
    const std::size_t k5 = std::min<std::size_t>(5, logits.cols());
    std::size_t correct = 0;
    for (const LabeledEntity& e : labeled) {
        if (e.entity >= logits.rows()) throw ValidationError("labeled entity out of range");
        const auto row = logits.row(e.entity);
        const std::uint32_t pred = argmax(row);
        if (std::find(e.labels.begin(), e.labels.end(), pred) != e.labels.end()) ++correct;
        m.p1 += precision_at_k(row, e.labels, 1);
        m.p5 += precision_at_k(row, e.labels, k5);
        m.ndcg5 += ndcg_at_k(row, e.labels, k5);
    }
    const double n = static_cast<double>(labeled.size());
    m.accuracy = static_cast<double>(correct) / n;
    m.p1 /= n;
    m.p5 /= n;
    m.ndcg5 /= n;
    return m;
}

TrainResult train_classification(const KnowledgeGraph& g, const LabelSet& labels,
                                 const TrainConfig& cfg, const EpochCallback& on_epoch) {
    labels.validate(g.num_entities());
    if (labels.train.empty()) throw ValidationError("empty training set");
    ModelConfig model = cfg.model;
    model.output_width = labels.num_classes;
    model.final_activation = Activation::identity;
    model.validate();

    RandomSource source(cfg.seed);
    ModelParams params;
    params.config = model;
    params.layers = init_params(model, g.num_relations(), source);
    params.inputs.push_back(init_state(model, g.num_entities(), g.num_relations(), source));

    const GraphIndex gi = index_graph(g, model.alpha, model.normalize);
    auto body = [&](ad::Tape&, const ModelVars& vars) {
        const EmbeddingVars out = record_model(gi, vars.inputs[0], vars.layers, model).back();
        EpochOutcome o;
        o.loss = classification_loss(out.entities, labels.train, labels.num_classes, labels.multi_label);
        if (!labels.valid.empty()) {
            const ClassificationMetrics m = evaluate_classification(out.entities.value(), labels.valid);
            o.metric = labels.multi_label ? m.p1 : m.accuracy;
        }
        return o;
    };
    return optimize(std::move(params), cfg, body, on_epoch);
}

RankingMetrics zero_shot_relation_alignment(const ModelParams& model, const KnowledgeGraph& g1,
                                            const KnowledgeGraph& g2,
                                            std::span<const std::pair<RelationId, RelationId>> pairs) {
    if (!has_relation_table(model.config.mode))
        throw UnsupportedModeError(std::string(to_string(model.config.mode)) +
                                   " mode has no relation embeddings to align");
    if (model.inputs.size() != 2) throw ContractError("relation alignment needs a two-graph model");
    if (pairs.empty()) throw ContractError("relation alignment over an empty pair list");
    const EmbeddingState s1 = infer(g1, model.inputs[0], model.layers, model.config);
    const EmbeddingState s2 = infer(g2, model.inputs[1], model.layers, model.config);
    std::vector<EntityPair> as_pairs;
    for (const auto& [a, b] : pairs) {
        if (a >= s1.relations.rows() || b >= s2.relations.rows())
            throw ValidationError("relation pair (" + std::to_string(a) + ", " + std::to_string(b) +
                                  ") is out of range");
        as_pairs.emplace_back(a, b);
    }
    const auto left = directional_ranks(s1.relations, s2.relations, as_pairs, true);
    const auto right = directional_ranks(s2.relations, s1.relations, as_pairs, false);
    return average(ranking_metrics(left), ranking_metrics(right));
}

} // namespace kegcn
