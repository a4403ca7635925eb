#pragma once

// Training objectives and the two end-to-end tasks: siamese entity alignment
// of two graphs through shared layer parameters, and entity classification.

#include "kegcn/autodiff.hpp"
#include "kegcn/graph.hpp"
#include "kegcn/metrics.hpp"
#include "kegcn/propagation.hpp"
#include "kegcn/random.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace kegcn {

using EntityPair = std::pair<EntityId, EntityId>;

struct AlignmentSeeds {
    std::vector<EntityPair> train;
    std::vector<EntityPair> valid;
    std::vector<EntityPair> test;
};

struct LabeledEntity {
    EntityId entity = 0;
    std::vector<std::uint32_t> labels;
};

struct LabelSet {
    std::size_t num_classes = 0;
    bool multi_label = false;
    std::vector<LabeledEntity> train;
    std::vector<LabeledEntity> valid;
    std::vector<LabeledEntity> test;

    /// Throws ValidationError for out-of-range labels or multi-class entries
    /// without exactly one label.
    void validate(std::size_t num_entities) const;
};

struct TrainConfig {
    ModelConfig model;
    double lr = 0.01;
    std::size_t epochs = 1000;
    double gamma = 3.0;
    std::size_t negatives = 5;
    std::size_t patience = 50;
    std::uint64_t seed = 0;
};

/// k corrupted pairs per positive, grouped by positive. Each replaces the left
/// entity (uniform over [0, left_count)) or the right one, by coin flip, with
/// an entity different from the original whenever the side has more than one.
std::vector<EntityPair> sample_negatives(std::span<const EntityPair> positives, std::size_t k,
                                         std::size_t left_count, std::size_t right_count,
                                         RandomSource& source);

/// sum over positives and their k negatives of
/// max(0, |h_u - h_v|_1 + gamma - |h_u' - h_v'|_1).
ad::Var alignment_loss(ad::Var emb1, ad::Var emb2, std::span<const EntityPair> positives,
                       std::span<const EntityPair> negatives, double gamma);

/// Cross-entropy over the labeled rows of `logits` (N x C): row softmax for
/// multi-class, element-wise sigmoid with binary cross-entropy for multi-label.
/// Probabilities are clamped to [1e-12, 1 - 1e-12] before the log.
ad::Var classification_loss(ad::Var logits, std::span<const LabeledEntity> labeled,
                            std::size_t num_classes, bool multi_label);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;
};

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state,
               double lr);

/// Parameters of one model: the layer stack plus a trainable input state per graph.
struct ModelParams {
    ModelConfig config;
    std::vector<LayerParams> layers;
    std::vector<EmbeddingState> inputs;

    /// Every tensor in a fixed order (layers first, then inputs).
    std::vector<Tensor*> tensors();
};

/// Final-layer state computed with the batched path.
EmbeddingState infer(const KnowledgeGraph& g, const EmbeddingState& input,
                     const std::vector<LayerParams>& layers, const ModelConfig& cfg);

struct TrainResult {
    ModelParams params;      // best checkpoint
    double best_metric = 0.0; // validation metric of that checkpoint (0 without a validation set)
    std::size_t best_epoch = 0;
    std::size_t epochs_run = 0;
    std::vector<double> loss_history;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss, double metric)>;

/// Bidirectional L1 ranking of every pair against all entities of the other graph.
RankingMetrics evaluate_alignment(const Tensor& emb1, const Tensor& emb2,
                                  std::span<const EntityPair> pairs);

TrainResult train_alignment(const KnowledgeGraph& g1, const KnowledgeGraph& g2,
                            const AlignmentSeeds& seeds, const TrainConfig& cfg,
                            const EpochCallback& on_epoch = {});

struct ClassificationMetrics {
    double accuracy = 0.0;
    double p1 = 0.0;
    double p5 = 0.0;
    double ndcg5 = 0.0;
};

/// Accuracy uses the argmax class (for multi-label: whether it is a true label);
/// P@k and NDCG@k cap k at the class count.
ClassificationMetrics evaluate_classification(const Tensor& logits,
                                              std::span<const LabeledEntity> labeled);

TrainResult train_classification(const KnowledgeGraph& g, const LabelSet& labels,
                                 const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Ranks the relations of one graph against the other by L1 distance between
/// final-layer relation embeddings, averaging both directions. Throws
/// UnsupportedModeError for modes without relation embeddings.
RankingMetrics zero_shot_relation_alignment(const ModelParams& model, const KnowledgeGraph& g1,
                                            const KnowledgeGraph& g2,
                                            std::span<const std::pair<RelationId, RelationId>> pairs);

} // namespace kegcn
