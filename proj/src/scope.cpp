#include "unrank/scope.hpp"

#include <algorithm>
#include <stdexcept>

namespace unrank {

std::int64_t InfluencedScope::degree_sum() const {
  std::int64_t s = 0;
  for (auto d : induced_degree) s += d;
  return s;
}

std::vector<std::int32_t> direct_entities(const InteractionDataset& ds, std::span<const Interaction> forget) {
  if (forget.empty()) throw std::invalid_argument("direct_entities: forget set is empty");
  std::vector<std::int32_t> nodes;
  nodes.reserve(forget.size() * 2);
  for (const auto& e : forget) {
    nodes.push_back(e.user);
    nodes.push_back(ds.item_node(e.item));
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  return nodes;
}

namespace {

// Shared tail: collect entities, induced degrees and first-appearance hops
// from the labelled edge list.
void finalize_scope(const InteractionDataset& ds, InfluencedScope& scope) {
  std::vector<std::int32_t> first_hop(ds.node_count(), -1);
  std::vector<std::int64_t> degree(ds.node_count(), 0);
  for (const auto& se : scope.edges) {
    const std::int32_t nu = se.edge.user;
    const std::int32_t ni = ds.item_node(se.edge.item);
    ++degree[nu];
    ++degree[ni];
    if (first_hop[nu] < 0 || se.hop < first_hop[nu]) first_hop[nu] = se.hop;
    if (first_hop[ni] < 0 || se.hop < first_hop[ni]) first_hop[ni] = se.hop;
  }
  for (std::int32_t v = 0; v < ds.node_count(); ++v) {
    if (first_hop[v] >= 0) {
      scope.entities.push_back(v);
      scope.induced_degree.push_back(degree[v]);
      scope.entity_hop.push_back(first_hop[v]);
    }
  }
}

}  // namespace

InfluencedScope expand_scope(const InteractionDataset& ds, std::span<const Interaction> forget, int hops) {
  if (hops < 0) throw std::invalid_argument("expand_scope: hop count must be >= 0");
  InfluencedScope scope;
  std::vector<char> edge_seen(ds.train.size(), 0);
  std::vector<char> node_seen(ds.node_count(), 0);
  std::vector<std::int32_t> frontier;

  for (const auto& e : forget) {
    std::int64_t id = ds.train_edge_id(e.user, e.item);
    if (id < 0) throw std::invalid_argument("expand_scope: forget edge is not a train edge");
    if (edge_seen[id]) continue;
    edge_seen[id] = 1;
    scope.edges.push_back({e, 0, id});
  }
  for (const auto& se : scope.edges) {
    for (std::int32_t node : {se.edge.user, ds.item_node(se.edge.item)}) {
      if (!node_seen[node]) {
        node_seen[node] = 1;
        frontier.push_back(node);
      }
    }
  }
  std::sort(frontier.begin(), frontier.end());

  for (int hop = 1; hop <= hops && !frontier.empty(); ++hop) {
    std::vector<std::int32_t> next;
    auto admit = [&](std::int64_t edge_id, int h) {
      if (edge_seen[edge_id]) return;
      edge_seen[edge_id] = 1;
      const Interaction& e = ds.train[edge_id];
      scope.edges.push_back({e, h, edge_id});
      for (std::int32_t node : {e.user, ds.item_node(e.item)}) {
        if (!node_seen[node]) {
          node_seen[node] = 1;
          next.push_back(node);
        }
      }
    };
    for (std::int32_t node : frontier) {
      if (node < ds.n_users) {
        for (std::int64_t p = ds.user_adj.offsets[node]; p < ds.user_adj.offsets[node + 1]; ++p) {
          admit(ds.user_adj.edge_ids[p], hop);
        }
      } else {
        const std::int32_t item = node - ds.n_users;
        for (std::int64_t p = ds.item_adj.offsets[item]; p < ds.item_adj.offsets[item + 1]; ++p) {
          admit(ds.item_adj.edge_ids[p], hop);
        }
      }
    }
    std::sort(next.begin(), next.end());
    frontier = std::move(next);
  }

  finalize_scope(ds, scope);
  return scope;
}

InfluencedScope full_train_scope(const InteractionDataset& ds, std::span<const Interaction> forget) {
  InfluencedScope scope;
  std::vector<char> in_forget(ds.train.size(), 0);
  for (const auto& e : forget) {
    std::int64_t id = ds.train_edge_id(e.user, e.item);
    if (id < 0) throw std::invalid_argument("full_train_scope: forget edge is not a train edge");
    in_forget[id] = 1;
  }
  scope.edges.reserve(ds.train.size());
  for (std::int64_t id = 0; id < static_cast<std::int64_t>(ds.train.size()); ++id) {
    scope.edges.push_back({ds.train[id], in_forget[id] ? 0 : 1, id});
  }
  finalize_scope(ds, scope);
  return scope;
}

void dump_scope_csv(const InfluencedScope& scope, std::ostream& out) {
  out << "user,item,hop\n";
  for (const auto& se : scope.edges) {
    out << se.edge.user << ',' << se.edge.item << ',' << se.hop << '\n';
  }
}

}  // namespace unrank
