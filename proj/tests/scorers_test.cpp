#include "kegcn/errors.hpp"
#include "kegcn/gradcheck.hpp"
#include "kegcn/random.hpp"
#include "kegcn/scorers.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace kegcn {
namespace {

double f(ScorerKind k, std::size_t d, RealVec u, RealVec r, RealVec v) {
    return score(Scorer(k, d), {u, r, v});
}

void expect_vec(const RealVec& got, const RealVec& want, double tol = 1e-12) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
}

TEST(Score, HandExamples) {
    EXPECT_DOUBLE_EQ(f(ScorerKind::transe, 2, {1, 0}, {0, 1}, {1, 1}), 0.0);
    EXPECT_DOUBLE_EQ(f(ScorerKind::transe, 2, {1, 2}, {1, 1}, {0, 0}), -13.0);
    EXPECT_DOUBLE_EQ(f(ScorerKind::distmult, 2, {1, 2}, {3, 4}, {5, 6}), 63.0);
    EXPECT_NEAR(f(ScorerKind::rotate, 1, {1, 0}, {0, 1}, {0, 1}), 0.0, 1e-15);
    EXPECT_NEAR(f(ScorerKind::quate, 1, {0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 0}, {0.5, 0.5, 0.5, 0.5}), 1.0, 1e-15);
    EXPECT_DOUBLE_EQ(f(ScorerKind::transh, 1, {0.7}, {1, 2}, {-3.0}), -4.0);
}

TEST(Score, RotatEIgnoresRelationModulus) {
    // relations are projected to unit modulus per entry
    EXPECT_NEAR(f(ScorerKind::rotate, 1, {1, 0}, {0, 5}, {0, 1}), 0.0, 1e-15);
}

TEST(Score, WidthsFollowConventions) {
    EXPECT_EQ(Scorer(ScorerKind::transh, 3).relation_width(), 6u);
    EXPECT_EQ(Scorer(ScorerKind::transd, 3).entity_width(), 6u);
    EXPECT_EQ(Scorer(ScorerKind::quate, 3).entity_width(), 12u);
    EXPECT_EQ(Scorer::for_entity_width(ScorerKind::quate, 64).base_dim(), 16u);
    EXPECT_THROW(Scorer::for_entity_width(ScorerKind::rotate, 7), ValidationError);
    EXPECT_THROW(score(Scorer(ScorerKind::transe, 2), {RealVec{1}, RealVec{1, 2}, RealVec{1, 2}}), DimensionError);
    EXPECT_THROW(parse_scorer("transx"), ValidationError);
}

TEST(Gradients, TransEHandExamples) {
    const Scorer s(ScorerKind::transe, 2);
    const RealVec u = {1, 2}, r = {1, 1}, v = {0, 0};
    expect_vec(grad_tail(s, {u, r, v}), {4, 6});
    expect_vec(grad_head(s, {u, r, v}), {-4, -6});
    expect_vec(grad_rel(s, {u, r, v}), {-4, -6});
    const RealVec z = {0, 0};
    expect_vec(grad_head(s, {z, z, z}), {0, 0});
    expect_vec(grad_rel(s, {z, z, z}), {0, 0});
    expect_vec(grad_tail(s, {z, z, z}), {0, 0});
}

TEST(Gradients, DistMultRelation) {
    const Scorer s(ScorerKind::distmult, 2);
    expect_vec(grad_rel(s, {RealVec{1, 2}, RealVec{3, 4}, RealVec{5, 6}}), {5, 12});
}

TEST(Gradients, FiniteDifferenceSuite) {
    for (ScorerKind k : {ScorerKind::transe, ScorerKind::distmult, ScorerKind::transh, ScorerKind::transd,
                         ScorerKind::rotate, ScorerKind::quate}) {
        const ScorerCheck c = check_scorer_gradients(k, 100, 1);
        EXPECT_LE(c.worst(), 1e-6) << to_string(k);
    }
}

TEST(Invariance, RotatEGlobalPhase) {
    RandomSource source(21);
    const Scorer s(ScorerKind::rotate, 4);
    for (int trial = 0; trial < 50; ++trial) {
        RealVec u(8), r(8), v(8);
        for (double* x : {u.data(), r.data(), v.data()})
            for (int i = 0; i < 8; ++i) x[i] = source.normal();
        const double theta = source.uniform(0.0, 6.283185307179586);
        RealVec ur = u, vr = v;
        for (int i = 0; i < 8; i += 2) {
            ur[i] = std::cos(theta) * u[i] - std::sin(theta) * u[i + 1];
            ur[i + 1] = std::sin(theta) * u[i] + std::cos(theta) * u[i + 1];
            vr[i] = std::cos(theta) * v[i] - std::sin(theta) * v[i + 1];
            vr[i + 1] = std::sin(theta) * v[i] + std::cos(theta) * v[i + 1];
        }
        EXPECT_NEAR(score(s, {u, r, v}), score(s, {ur, r, vr}), 1e-10);
    }
}

TEST(MessageOps, MatchClosedFormGradients) {
    RandomSource source(22);
    for (ScorerKind k : {ScorerKind::transe, ScorerKind::distmult, ScorerKind::transh, ScorerKind::transd,
                         ScorerKind::rotate, ScorerKind::quate}) {
        const Scorer s(k, 2);
        const std::size_t n = 5;
        Tensor h(n, s.entity_width()), r(n, s.relation_width()), t(n, s.entity_width());
        for (Tensor* x : {&h, &r, &t})
            for (double& e : x->values()) e = source.normal();
        ad::Tape tape;
        const GradientExprs g = message_ops(s, tape.leaf(h), tape.leaf(r), tape.leaf(t));
        const ad::Var sc = score_op(s, tape.leaf(h), tape.leaf(r), tape.leaf(t));
        for (std::size_t i = 0; i < n; ++i) {
            const TripleGradients ref = gradients(s, {h.row(i), r.row(i), t.row(i)});
            for (std::size_t j = 0; j < s.entity_width(); ++j) {
                EXPECT_NEAR(g.head.value()(i, j), ref.head[j], 1e-12) << to_string(k);
                EXPECT_NEAR(g.tail.value()(i, j), ref.tail[j], 1e-12) << to_string(k);
            }
            for (std::size_t j = 0; j < s.relation_width(); ++j)
                EXPECT_NEAR(g.relation.value()(i, j), ref.relation[j], 1e-12) << to_string(k);
            EXPECT_NEAR(sc.value()(i, 0), score(s, {h.row(i), r.row(i), t.row(i)}), 1e-12) << to_string(k);
        }
    }
}

TEST(MessageOps, TransETailHessianIsMinusTwoIdentity) {
    const Scorer s(ScorerKind::transe, 3);
    ad::Tape tape;
    const ad::Var u = tape.constant(Tensor(1, 3, {0.1, 0.2, 0.3}));
    const ad::Var r = tape.constant(Tensor(1, 3, {1.0, -1.0, 0.5}));
    const ad::Var v = tape.leaf(Tensor(1, 3, {2.0, 0.0, -1.0}));
    const Tensor seed(1, 3, {0.7, -1.3, 2.0});
    const GradientExprs g = message_ops(s, u, r, v);
    const ad::Var vjp = ad::sum(ad::mul(g.tail, tape.constant(seed)));
    const Tensor got = tape.backward(vjp).wrt(v);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(got[j], -2.0 * seed[j]);
}

} // namespace
} // namespace kegcn
