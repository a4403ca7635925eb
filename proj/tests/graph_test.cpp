#include "kegcn/errors.hpp"
#include "kegcn/graph.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

namespace kegcn {
namespace {

TEST(KnowledgeGraph, EmptyGraph) {
    const KnowledgeGraph g = KnowledgeGraph::build({}, 3, 2);
    EXPECT_EQ(g.num_entities(), 3u);
    EXPECT_EQ(g.num_relations(), 2u);
    for (EntityId v = 0; v < 3; ++v) {
        EXPECT_TRUE(g.in_neighbors(v).empty());
        EXPECT_TRUE(g.out_neighbors(v).empty());
    }
    EXPECT_TRUE(g.relation_endpoints(1).empty());
}

TEST(KnowledgeGraph, SingleEdgeBookkeeping) {
    const KnowledgeGraph g = KnowledgeGraph::build({{0, 0, 1}}, 2, 1);
    ASSERT_EQ(g.in_neighbors(1).size(), 1u);
    EXPECT_EQ(g.in_neighbors(1)[0], (Neighbor{0, 0}));
    ASSERT_EQ(g.out_neighbors(0).size(), 1u);
    EXPECT_EQ(g.out_neighbors(0)[0], (Neighbor{1, 0}));
    ASSERT_EQ(g.relation_endpoints(0).size(), 1u);
    EXPECT_EQ(g.relation_endpoints(0)[0], (Endpoints{0, 1}));
    EXPECT_TRUE(g.in_neighbors(0).empty());
}

TEST(KnowledgeGraph, Deduplicates) {
    const KnowledgeGraph g = KnowledgeGraph::build({{0, 0, 1}, {0, 0, 1}}, 2, 1);
    EXPECT_EQ(g.num_triples(), 1u);
    EXPECT_EQ(g.degree(0), 1u);
}

TEST(KnowledgeGraph, SelfLoopCountsBothDirections) {
    const KnowledgeGraph g = KnowledgeGraph::build({{0, 0, 0}}, 1, 1);
    EXPECT_EQ(g.degree(0), 2u);
}

TEST(KnowledgeGraph, OutOfRangeNamesPosition) {
    try {
        (void)KnowledgeGraph::build({{0, 0, 1}, {0, 3, 1}}, 2, 1);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(KnowledgeGraph::build({{5, 0, 1}}, 2, 1), ValidationError);
}

TEST(KnowledgeGraph, InputOrderDoesNotMatter) {
    std::vector<Triple> t;
    std::mt19937 gen(4);
    for (int i = 0; i < 200; ++i)
        t.push_back({static_cast<EntityId>(gen() % 30), static_cast<RelationId>(gen() % 4),
                     static_cast<EntityId>(gen() % 30)});
    const KnowledgeGraph a = KnowledgeGraph::build(t, 30, 4);
    std::shuffle(t.begin(), t.end(), gen);
    const KnowledgeGraph b = KnowledgeGraph::build(t, 30, 4);
    ASSERT_TRUE(std::equal(a.triples().begin(), a.triples().end(), b.triples().begin(), b.triples().end()));
    for (EntityId v = 0; v < 30; ++v) {
        EXPECT_TRUE(std::ranges::equal(a.in_neighbors(v), b.in_neighbors(v)));
        EXPECT_TRUE(std::ranges::equal(a.out_neighbors(v), b.out_neighbors(v)));
        EXPECT_TRUE(std::ranges::is_sorted(a.in_neighbors(v)));
    }
    for (RelationId r = 0; r < 4; ++r) EXPECT_TRUE(std::ranges::equal(a.relation_endpoints(r), b.relation_endpoints(r)));
}

TEST(Normalization, Examples) {
    const KnowledgeGraph g = KnowledgeGraph::build({{1, 0, 0}, {2, 0, 0}, {0, 1, 3}, {1, 1, 2}, {2, 1, 3}, {3, 1, 1}},
                                                   5, 2);
    EXPECT_EQ(degree_norm(g, 4, 0.3), 0.0);
    EXPECT_DOUBLE_EQ(degree_norm(g, 0, 0.3), 0.1); // 2 in + 1 out
    EXPECT_DOUBLE_EQ(relation_norm(g, 1, 0.3), 0.075);
    EXPECT_EQ(relation_norm(KnowledgeGraph::build({}, 1, 1), 0, 0.3), 0.0);
}

} // namespace
} // namespace kegcn
