#pragma once

// Knowledge-embedding scoring functions f(h_u, h_r, h_v) with closed-form
// gradients. Higher scores mean more plausible triples. All embeddings are
// flat real-coordinate vectors:
//
//   kind      entity width   relation width   layout
//   transe    d              d
//   distmult  d              d
//   transh    d              2d               h_r = [normal ; translation]
//   transd    2d             2d               h = [embedding ; projection]
//   rotate    2d             2d               d interleaved (re, im) pairs
//   quate     4d             4d               d consecutive (a, b, c, d) quaternions
//
// RotatE relations are projected to unit modulus per complex entry and QuatE
// relations to unit norm per quaternion before use; gradients are taken with
// respect to the stored (unprojected) coordinates.

#include "kegcn/autodiff.hpp"
#include "kegcn/numerics.hpp"

#include <cstddef>
#include <span>
#include <string_view>

namespace kegcn {

enum class ScorerKind { transe, distmult, transh, transd, rotate, quate };

ScorerKind parse_scorer(std::string_view token);
std::string_view to_string(ScorerKind kind);

class Scorer {
public:
    Scorer(ScorerKind kind, std::size_t base_dim);

    /// Scorer whose entity embeddings have exactly `entity_width` real
    /// coordinates. Throws ValidationError when the width does not fit.
    static Scorer for_entity_width(ScorerKind kind, std::size_t entity_width);

    ScorerKind kind() const noexcept { return kind_; }
    std::size_t base_dim() const noexcept { return base_dim_; }
    std::size_t entity_width() const noexcept;
    std::size_t relation_width() const noexcept;

private:
    ScorerKind kind_;
    std::size_t base_dim_;
};

/// Number of real coordinates per base dimension of an entity embedding.
std::size_t entity_width_factor(ScorerKind kind);

struct TripleEmbedding {
    std::span<const double> head;
    std::span<const double> relation;
    std::span<const double> tail;
};

struct TripleGradients {
    RealVec head;
    RealVec relation;
    RealVec tail;
};

double score(const Scorer& s, const TripleEmbedding& t);
RealVec grad_head(const Scorer& s, const TripleEmbedding& t);
RealVec grad_rel(const Scorer& s, const TripleEmbedding& t);
RealVec grad_tail(const Scorer& s, const TripleEmbedding& t);
TripleGradients gradients(const Scorer& s, const TripleEmbedding& t);

/// Relation vector as used inside the score (unit-projected for rotate/quate).
RealVec effective_relation(const Scorer& s, std::span<const double> relation);

/// Gradient expressions recorded on a tape for a batch of triples (one per
/// row of heads/relations/tails). Differentiating through them gives the
/// second-order terms of f that training needs.
struct GradientExprs {
    ad::Var head;
    ad::Var relation;
    ad::Var tail;
};

GradientExprs message_ops(const Scorer& s, ad::Var heads, ad::Var relations, ad::Var tails);

/// Row-wise scores of a batch, n x 1.
ad::Var score_op(const Scorer& s, ad::Var heads, ad::Var relations, ad::Var tails);

} // namespace kegcn
