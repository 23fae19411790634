#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace unrank {

struct Interaction {
  std::int32_t user = 0;
  std::int32_t item = 0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

// Parsed interaction file before remapping. Pairs keep file order with
// duplicates collapsed to the first occurrence.
struct RawInteractions {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::int64_t total_lines = 0;
};

// Compressed sparse rows over the train edges of one side of the bipartite
// graph. neighbors[k] is the opposite-side index, edge_ids[k] the position of
// the edge in the canonical (user,item)-sorted train list.
struct CsrAdjacency {
  std::vector<std::int64_t> offsets;
  std::vector<std::int32_t> neighbors;
  std::vector<std::int64_t> edge_ids;

  std::int64_t degree(std::int32_t v) const { return offsets[v + 1] - offsets[v]; }
};

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct InteractionDataset {
  std::int32_t n_users = 0;
  std::int32_t n_items = 0;
  // Each split is sorted by (user, item); the train edge id is the position
  // in `train`.
  std::vector<Interaction> train, val, test;
  CsrAdjacency user_adj;  // user -> items
  CsrAdjacency item_adj;  // item -> users
  std::vector<std::string> user_ids, item_ids;  // dense index -> external id
  std::int32_t users_fully_in_train = 0;        // users with < 3 interactions

  std::int32_t node_count() const { return n_users + n_items; }
  // Node ids place users at [0, n_users) and items at [n_users, n_users+n_items).
  std::int32_t item_node(std::int32_t item) const { return n_users + item; }

  std::int64_t train_edge_id(std::int32_t user, std::int32_t item) const;  // -1 if absent
  bool has_train_edge(std::int32_t user, std::int32_t item) const { return train_edge_id(user, item) >= 0; }
};

enum class ForgetMode { EntityItem, InteractionUser };

struct ForgetRequest {
  ForgetMode mode = ForgetMode::EntityItem;
  double ratio = 0.05;
  std::uint64_t seed = 0;
};

struct ForgetPartition {
  std::vector<Interaction> forget;  // D_f, subsequence of train order
  std::vector<Interaction> retain;  // D_r = train \ D_f
};

// Reads "user<delim>item[<delim>rating[<delim>timestamp]]" lines. Ratings and
// timestamps are ignored: every pair becomes an implicit positive. Duplicate
// pairs keep the first occurrence. Throws on missing file, empty file, or a
// malformed line (message carries the 1-based line number).
RawInteractions load_interactions(const std::string& path, std::string_view delimiter);

// Remaps external ids to dense indices (first-appearance order) and splits
// each user's edges at the given ratios with a per-user seeded shuffle. Users
// with fewer than 3 interactions go entirely to train and are counted in
// users_fully_in_train.
InteractionDataset build_dataset(const RawInteractions& raw, SplitRatios ratios, std::uint64_t seed);

// Same dataset with the train split replaced (val/test/ids untouched);
// adjacency is rebuilt. Used for retraining on the retain set.
InteractionDataset with_train_edges(const InteractionDataset& ds, std::vector<Interaction> new_train);

ForgetPartition generate_forget_set(const InteractionDataset& ds, const ForgetRequest& req);

// Sidecar id maps, one "external<TAB>dense" line per entity.
void write_id_map(const std::vector<std::string>& ids, const std::string& path);

}  // namespace unrank
