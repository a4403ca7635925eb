#pragma once

// Knowledge-embedding graph convolution. An entity's message is the sum of
// score gradients with respect to its own embedding over every incident
// triple, transformed by W and scaled by alpha / degree:
//
//   m_v  = norm(v) * ( sum_{(u,r) in N_in(v)}  W d f(h_u, h_r, h_v) / d h_v
//                    + sum_{(u,r) in N_out(v)} W d f(h_v, h_r, h_u) / d h_v )
//   h_v' = act_ent(m_v + W_0 h_v)
//   m_r  = norm(r) * sum_{(u,v) in N(r)} d f(h_u, h_r, h_v) / d h_r
//   h_r' = act_rel(W_rel (m_r + h_r))
//
// The compgcn / rgcn / wgcn modes swap the score gradients for the message
// rules under which the layer coincides with those architectures.
//
// Matrices act on column vectors (out x in). There are two evaluation paths:
// the eager per-entity functions below, and the batched tape recording used
// for training. They compute the same layer and serve as checks on each other.

#include "kegcn/autodiff.hpp"
#include "kegcn/graph.hpp"
#include "kegcn/numerics.hpp"
#include "kegcn/random.hpp"
#include "kegcn/scorers.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace kegcn {

enum class Mode { kegcn, compgcn_sub, compgcn_mult, compgcn_corr, rgcn, wgcn };

Mode parse_mode(std::string_view token);
std::string_view to_string(Mode mode);
bool is_compgcn(Mode mode);
/// rgcn and wgcn carry no relation embeddings.
bool has_relation_table(Mode mode);

struct ModelConfig {
    Mode mode = Mode::kegcn;
    ScorerKind scorer = ScorerKind::transe;
    std::size_t dim = 200;          // entity width entering and leaving every hidden layer
    std::size_t layers = 4;
    std::size_t output_width = 0;   // entity width of the last layer's output; 0 means dim
    double alpha = 0.3;
    bool normalize = true;          // false: messages are summed without alpha / degree
    bool relation_specific = false; // per-relation W_r (always on for rgcn)
    Activation hidden_activation = Activation::relu;
    Activation final_activation = Activation::identity;

    /// Throws ValidationError for inconsistent settings.
    void validate() const;
    std::size_t relation_width() const;
    std::size_t layer_input(std::size_t) const { return dim; }
    std::size_t layer_output(std::size_t layer) const;
    bool uses_relation_weights() const { return relation_specific || mode == Mode::rgcn; }
};

/// Everything one layer needs besides its tensors.
struct LayerSpec {
    Mode mode = Mode::kegcn;
    ScorerKind scorer = ScorerKind::transe;
    std::size_t in_width = 0;
    std::size_t out_width = 0;
    std::size_t relation_width = 0;
    double alpha = 0.3;
    bool normalize = true;
    Activation entity_activation = Activation::relu;
    Activation relation_activation = Activation::relu;

    Scorer make_scorer() const { return Scorer::for_entity_width(scorer, in_width); }
};

LayerSpec layer_spec(const ModelConfig& cfg, std::size_t layer);

/// Per-layer tensors, either concrete (Tensor) or recorded on a tape (ad::Var).
/// Unused slots stay empty / invalid.
template <class T>
struct BasicLayerParams {
    T weight;                      // W, out x in
    std::vector<T> relation_weights; // W_r, out x in, one per relation
    T relation_scale;              // wgcn alpha_r, R x 1
    T self_weight;                 // W_0, out x in; wgcn reuses W
    T relation_transform;          // W_rel, relation width squared
};

using LayerParams = BasicLayerParams<Tensor>;
using LayerVars = BasicLayerParams<ad::Var>;

template <class T>
struct BasicEmbedding {
    T entities;  // N x entity width
    T relations; // R x relation width (empty without a relation table)
};

using EmbeddingState = BasicEmbedding<Tensor>;
using EmbeddingVars = BasicEmbedding<ad::Var>;

/// Visits every present tensor of a parameter set in a fixed order with a
/// stable name ("weight", "relation_weight.3", ...).
void for_each_param(LayerParams& p, const std::function<void(const std::string&, Tensor&)>& fn);
void for_each_param(const LayerParams& p,
                    const std::function<void(const std::string&, const Tensor&)>& fn);

LayerParams init_layer(const LayerSpec& spec, const ModelConfig& cfg, std::size_t num_relations,
                       RandomSource& source);
std::vector<LayerParams> init_params(const ModelConfig& cfg, std::size_t num_relations,
                                     RandomSource& source);
EmbeddingState init_state(const ModelConfig& cfg, std::size_t num_entities,
                          std::size_t num_relations, RandomSource& source);

/// Tape leaves (trainable) or constants for a parameter set.
LayerVars to_vars(ad::Tape& tape, const LayerParams& p, bool trainable);
/// Pairs each present tensor of `p` with its variable in `v`, in for_each_param order.
void zip_params(const LayerParams& p, const LayerVars& v,
                const std::function<void(const Tensor&, ad::Var)>& fn);

// Eager evaluation.

RealVec entity_message(const KnowledgeGraph& g, const EmbeddingState& state, const LayerParams& p,
                       const LayerSpec& spec, EntityId v);
RealVec relation_message(const KnowledgeGraph& g, const EmbeddingState& state,
                         const LayerSpec& spec, RelationId r);
EmbeddingState layer_forward(const KnowledgeGraph& g, const EmbeddingState& state,
                             const LayerParams& p, const LayerSpec& spec);
EmbeddingState model_forward(const KnowledgeGraph& g, const EmbeddingState& input,
                             const std::vector<LayerParams>& params, const ModelConfig& cfg);

// Batched tape evaluation.

/// Edge index lists and normalization columns of one graph.
struct GraphIndex {
    std::size_t num_entities = 0;
    std::size_t num_relations = 0;
    ad::IndexList heads, relations, tails;
    Tensor entity_norm;   // N x 1
    Tensor relation_norm; // R x 1
    std::vector<ad::IndexList> heads_of, tails_of, relation_of; // per relation
};

GraphIndex index_graph(const KnowledgeGraph& g, double alpha, bool normalize);

EmbeddingVars record_layer(const GraphIndex& gi, const EmbeddingVars& in, const LayerVars& p,
                           const LayerSpec& spec);
/// States after every layer; element 0 is the input.
std::vector<EmbeddingVars> record_model(const GraphIndex& gi, const EmbeddingVars& input,
                                        const std::vector<LayerVars>& params,
                                        const ModelConfig& cfg);

// Reference architectures, transcribed directly (no normalization).

/// One layer of CompGCN (compgcn modes), R-GCN or W-GCN.
EmbeddingState baseline_forward(Mode mode, const KnowledgeGraph& g, const EmbeddingState& state,
                                const LayerParams& p, const LayerSpec& spec);

/// Runs the batched layer stack in `mode` with normalization off and
/// relation-specific weights against baseline_forward on random parameters,
/// returning the largest absolute difference over all layer outputs.
double verify_reduction(Mode mode, const KnowledgeGraph& g, std::uint64_t seed,
                        std::size_t layers = 3, std::size_t width = 8);

/// Uniform random triples (duplicates dropped by build).
KnowledgeGraph random_graph(std::size_t num_entities, std::size_t num_relations,
                            std::size_t num_triples, RandomSource& source);

} // namespace kegcn
