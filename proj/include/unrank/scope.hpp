#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "unrank/dataset.hpp"

namespace unrank {

struct ScopeEdge {
  Interaction edge;
  int hop = 0;               // expansion step at which the edge first entered
  std::int64_t edge_id = 0;  // position in ds.train
};

// The p-hop edge neighborhood of the forget set on the train bipartite
// graph. Entities are node ids (users first, then items offset by n_users),
// kept ascending so they double as the scoped-parameter row order.
struct InfluencedScope {
  std::vector<ScopeEdge> edges;            // hop-0 edges are exactly D_f
  std::vector<std::int32_t> entities;      // E_inf, ascending node ids
  std::vector<std::int64_t> induced_degree;  // aligned with entities
  std::vector<std::int32_t> entity_hop;      // first hop the entity appeared, aligned

  std::int64_t degree_sum() const;
};

// Endpoints of the forget edges as node ids (E_f). Throws on empty input.
std::vector<std::int32_t> direct_entities(const InteractionDataset& ds, std::span<const Interaction> forget);

// Edge-centric BFS: p times, add every train edge sharing an endpoint with an
// edge already in the scope. Edges keep the hop at which they first entered.
InfluencedScope expand_scope(const InteractionDataset& ds, std::span<const Interaction> forget, int hops);

// The whole train set as a scope (hop 0 for forget edges, hop 1 otherwise);
// backs the no-scoping ablation.
InfluencedScope full_train_scope(const InteractionDataset& ds, std::span<const Interaction> forget);

// Debug CSV: "user,item,hop" per scope edge.
void dump_scope_csv(const InfluencedScope& scope, std::ostream& out);

}  // namespace unrank
