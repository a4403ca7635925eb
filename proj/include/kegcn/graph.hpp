#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace kegcn {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

struct Triple {
    EntityId head = 0;
    RelationId relation = 0;
    EntityId tail = 0;

    friend auto operator<=>(const Triple&, const Triple&) = default;
};

/// Entity-relation neighbour of an entity, from either link direction.
struct Neighbor {
    EntityId entity = 0;
    RelationId relation = 0;

    friend auto operator<=>(const Neighbor&, const Neighbor&) = default;
};

/// (head, tail) endpoint pair of one triple of a relation.
struct Endpoints {
    EntityId head = 0;
    EntityId tail = 0;

    friend auto operator<=>(const Endpoints&, const Endpoints&) = default;
};

/// Immutable multi-relational directed graph with in/out adjacency and
/// per-relation endpoint indices. Triples are deduplicated and stored in
/// ascending (head, relation, tail) order; each adjacency list is ascending
/// by (neighbor-id, relation-id).
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    /// Throws ValidationError naming the 1-based input position of the first
    /// triple with an out-of-range id.
    static KnowledgeGraph build(std::vector<Triple> triples, std::size_t num_entities,
                                std::size_t num_relations);

    std::size_t num_entities() const noexcept { return in_adj_.size(); }
    std::size_t num_relations() const noexcept { return rel_index_.size(); }
    std::size_t num_triples() const noexcept { return triples_.size(); }

    std::span<const Triple> triples() const noexcept { return triples_; }
    /// N_in(v): (u, r) with u -r-> v.
    std::span<const Neighbor> in_neighbors(EntityId v) const { return in_adj_.at(v); }
    /// N_out(v): (u, r) with v -r-> u.
    std::span<const Neighbor> out_neighbors(EntityId v) const { return out_adj_.at(v); }
    /// N(r): (u, v) with u -r-> v.
    std::span<const Endpoints> relation_endpoints(RelationId r) const { return rel_index_.at(r); }

    std::size_t degree(EntityId v) const { return in_adj_.at(v).size() + out_adj_.at(v).size(); }

private:
    std::vector<Triple> triples_;
    std::vector<std::vector<Neighbor>> in_adj_;
    std::vector<std::vector<Neighbor>> out_adj_;
    std::vector<std::vector<Endpoints>> rel_index_;
};

/// alpha / (|N_in(v)| + |N_out(v)|); 0 for an isolated entity.
double degree_norm(const KnowledgeGraph& g, EntityId v, double alpha);

/// alpha / |N(r)|; 0 for a relation without triples.
double relation_norm(const KnowledgeGraph& g, RelationId r, double alpha);

} // namespace kegcn
