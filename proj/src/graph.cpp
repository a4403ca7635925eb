#include "kegcn/graph.hpp"

#include "kegcn/errors.hpp"

#include <algorithm>
#include <string>

namespace kegcn {

KnowledgeGraph KnowledgeGraph::build(std::vector<Triple> triples, std::size_t num_entities,
                                     std::size_t num_relations) {
    for (std::size_t i = 0; i < triples.size(); ++i) {
        const Triple& t = triples[i];
        if (t.head >= num_entities)
            throw ValidationError("head id " + std::to_string(t.head) + " out of range", i + 1);
        if (t.tail >= num_entities)
            throw ValidationError("tail id " + std::to_string(t.tail) + " out of range", i + 1);
        if (t.relation >= num_relations)
            throw ValidationError("relation id " + std::to_string(t.relation) + " out of range",
                                  i + 1);
    }

    std::sort(triples.begin(), triples.end());
    triples.erase(std::unique(triples.begin(), triples.end()), triples.end());

    KnowledgeGraph g;
    g.triples_ = std::move(triples);
    g.in_adj_.resize(num_entities);
    g.out_adj_.resize(num_entities);
    g.rel_index_.resize(num_relations);
    for (const Triple& t : g.triples_) {
        g.in_adj_[t.tail].push_back({t.head, t.relation});
        g.out_adj_[t.head].push_back({t.tail, t.relation});
        g.rel_index_[t.relation].push_back({t.head, t.tail});
    }
    for (auto& list : g.in_adj_) std::sort(list.begin(), list.end());
    for (auto& list : g.out_adj_) std::sort(list.begin(), list.end());
    for (auto& list : g.rel_index_) std::sort(list.begin(), list.end());
    return g;
}

double degree_norm(const KnowledgeGraph& g, EntityId v, double alpha) {
    const std::size_t deg = g.degree(v);
    return deg == 0 ? 0.0 : alpha / static_cast<double>(deg);
}

double relation_norm(const KnowledgeGraph& g, RelationId r, double alpha) {
    const std::size_t n = g.relation_endpoints(r).size();
    return n == 0 ? 0.0 : alpha / static_cast<double>(n);
}

} // namespace kegcn
