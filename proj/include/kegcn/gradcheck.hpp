#pragma once

// Finite-difference suites: closed-form scorer gradients against central
// differences of the score, and full training losses (through every layer)
// against central differences of the loss.

#include "kegcn/autodiff.hpp"
#include "kegcn/propagation.hpp"
#include "kegcn/scorers.hpp"

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace kegcn {

struct ScorerCheck {
    ScorerKind kind = ScorerKind::transe;
    std::size_t points = 0;
    double head = 0.0;     // worst gradient_error over all points, per argument
    double relation = 0.0;
    double tail = 0.0;

    double worst() const;
};

/// Random points have N(0, 1) coordinates; rotate / quate relation blocks with
/// norm below 0.1 are resampled so the unit projection is well conditioned.
ScorerCheck check_scorer_gradients(ScorerKind kind, std::size_t points = 100, std::uint64_t seed = 1,
                                   std::size_t base_dim = 3, double eps = 1e-5, double floor = 1e-2);

enum class Objective { alignment, multi_class, multi_label };

std::string_view to_string(Objective objective);

struct EndToEndCheck {
    ScorerKind scorer = ScorerKind::transe;
    Objective objective = Objective::alignment;
    std::uint64_t seed = 0; // seed of the instance actually checked
    ad::GradCheckReport report;
};

/// Builds a 10-entity / 3-relation / 2-layer instance and checks the gradient
/// of the objective with respect to every parameter and input embedding.
/// Instances with a relu / l1 / clamp input closer than `min_margin` to its
/// kink are rejected and redrawn from the next seed.
EndToEndCheck check_end_to_end(ScorerKind scorer, Objective objective, std::uint64_t seed = 1,
                               Mode mode = Mode::kegcn, double min_margin = 1e-4);

} // namespace kegcn
