#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "support.hpp"
#include "unrank/dataset.hpp"

using namespace unrank;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("load_interactions parses well-formed lines") {
  auto path = write_temp("unrank_lines.tsv", "a\tx\t5\t100\nb\ty\t3\t200\nc\tz\t1\t300\n");
  RawInteractions raw = load_interactions(path, "\t");
  CHECK(raw.pairs.size() == 3);
  CHECK(raw.total_lines == 3);
  CHECK(raw.pairs[0] == std::pair<std::string, std::string>{"a", "x"});
}

TEST_CASE("load_interactions drops duplicate pairs, keeping the first") {
  auto path = write_temp("unrank_dup.tsv", "a\tx\t5\t100\na\tx\t1\t200\nb\tx\t4\t100\n");
  RawInteractions raw = load_interactions(path, "\t");
  CHECK(raw.pairs.size() == 2);
  CHECK(raw.pairs[0].first == "a");
  CHECK(raw.pairs[1].first == "b");
}

TEST_CASE("load_interactions handles :: delimited files and bare user/item lines") {
  auto path = write_temp("unrank_ml1m.dat", "1::10::5::978300760\n2::11::3::978302109\n");
  RawInteractions raw = load_interactions(path, "::");
  CHECK(raw.pairs.size() == 2);
  CHECK(raw.pairs[1] == std::pair<std::string, std::string>{"2", "11"});

  auto bare = write_temp("unrank_bare.tsv", "a\tx\nb\ty\n");
  CHECK(load_interactions(bare, "\t").pairs.size() == 2);
}

TEST_CASE("load_interactions reports the malformed line number") {
  auto path = write_temp("unrank_bad.tsv", "a\tx\t5\t1\njunkline\n");
  CHECK_THROWS_WITH_AS(load_interactions(path, "\t"), doctest::Contains(":2:"), std::runtime_error);
}

TEST_CASE("load_interactions rejects an empty file") {
  auto path = write_temp("unrank_empty.tsv", "");
  CHECK_THROWS_AS(load_interactions(path, "\t"), std::runtime_error);
}

TEST_CASE("build_dataset splits 10 edges per user into 8/1/1") {
  RawInteractions raw;
  for (int u = 0; u < 10; ++u) {
    for (int i = 0; i < 10; ++i) {
      raw.pairs.emplace_back("u" + std::to_string(u), "i" + std::to_string(i));
    }
  }
  InteractionDataset ds = build_dataset(raw, SplitRatios{}, 1);
  CHECK(ds.n_users == 10);
  CHECK(ds.n_items == 10);
  CHECK(ds.train.size() == 80);
  CHECK(ds.val.size() == 10);
  CHECK(ds.test.size() == 10);
  for (std::int32_t u = 0; u < 10; ++u) CHECK(ds.user_adj.degree(u) == 8);
  CHECK(ds.users_fully_in_train == 0);
}

TEST_CASE("build_dataset is deterministic and conserves edges") {
  RawInteractions raw;
  Rng rng(99);
  std::set<std::pair<int, int>> seen;
  while (raw.pairs.size() < 400) {
    int u = static_cast<int>(rng.uniform(23));
    int i = static_cast<int>(rng.uniform(31));
    if (seen.insert({u, i}).second) {
      raw.pairs.emplace_back(std::to_string(u), std::to_string(i));
    }
  }
  for (std::uint64_t seed : {1ULL, 2ULL, 77ULL}) {
    InteractionDataset a = build_dataset(raw, SplitRatios{}, seed);
    InteractionDataset b = build_dataset(raw, SplitRatios{}, seed);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);
    CHECK(a.train.size() + a.val.size() + a.test.size() == raw.pairs.size());
  }
}

TEST_CASE("users with fewer than 3 interactions go entirely to train") {
  RawInteractions raw;
  raw.pairs.emplace_back("lonely", "i0");
  raw.pairs.emplace_back("lonely", "i1");
  for (int i = 0; i < 5; ++i) raw.pairs.emplace_back("busy", "i" + std::to_string(i));
  InteractionDataset ds = build_dataset(raw, SplitRatios{}, 3);
  CHECK(ds.users_fully_in_train == 1);
  CHECK(ds.user_adj.degree(0) == 2);  // both lonely edges stay in train
  CHECK(ds.user_adj.degree(1) == 3);  // busy: 5 -> 3/1/1
  CHECK(ds.val.size() == 1);
  CHECK(ds.test.size() == 1);
}

TEST_CASE("adjacency reconstructs the train edges exactly") {
  RawInteractions raw;
  Rng rng(5);
  std::set<std::pair<int, int>> seen;
  while (raw.pairs.size() < 120) {
    int u = static_cast<int>(rng.uniform(9));
    int i = static_cast<int>(rng.uniform(14));
    if (seen.insert({u, i}).second) raw.pairs.emplace_back(std::to_string(u), std::to_string(i));
  }
  InteractionDataset ds = build_dataset(raw, SplitRatios{}, 11);

  std::vector<Interaction> from_user_adj, from_item_adj;
  for (std::int32_t u = 0; u < ds.n_users; ++u) {
    for (std::int64_t p = ds.user_adj.offsets[u]; p < ds.user_adj.offsets[u + 1]; ++p) {
      from_user_adj.push_back({u, ds.user_adj.neighbors[p]});
      CHECK(ds.train[ds.user_adj.edge_ids[p]] == from_user_adj.back());
    }
  }
  for (std::int32_t i = 0; i < ds.n_items; ++i) {
    for (std::int64_t p = ds.item_adj.offsets[i]; p < ds.item_adj.offsets[i + 1]; ++p) {
      from_item_adj.push_back({ds.item_adj.neighbors[p], i});
      CHECK(ds.train[ds.item_adj.edge_ids[p]] == from_item_adj.back());
    }
  }
  std::sort(from_item_adj.begin(), from_item_adj.end());
  CHECK(from_user_adj == ds.train);  // user rows are already (user,item)-sorted
  CHECK(from_item_adj == ds.train);

  for (const auto& e : ds.train) CHECK(ds.has_train_edge(e.user, e.item));
  for (const auto& e : ds.val) CHECK_FALSE(ds.has_train_edge(e.user, e.item));
}

TEST_CASE("generate_forget_set: ratio 0 keeps everything") {
  auto ds = testsupport::toy_dataset(3, 3, {{0, 0}, {1, 1}, {2, 2}});
  ForgetPartition part = generate_forget_set(ds, {ForgetMode::EntityItem, 0.0, 7});
  CHECK(part.forget.empty());
  CHECK(part.retain == ds.train);
}

TEST_CASE("generate_forget_set: entity-item takes every train edge of the sampled item") {
  // two items; ratio 0.5 samples exactly one
  auto ds = testsupport::toy_dataset(4, 2, {{0, 0}, {1, 0}, {2, 0}, {0, 1}, {3, 1}});
  ForgetPartition part = generate_forget_set(ds, {ForgetMode::EntityItem, 0.5, 13});
  REQUIRE_FALSE(part.forget.empty());
  const std::int32_t picked = part.forget.front().item;
  for (const auto& e : part.forget) CHECK(e.item == picked);
  std::size_t item_degree = 0;
  for (const auto& e : ds.train) {
    if (e.item == picked) ++item_degree;
  }
  CHECK(part.forget.size() == item_degree);
  CHECK(part.forget.size() + part.retain.size() == ds.train.size());
}

TEST_CASE("generate_forget_set: interaction-user halves the selected user's history") {
  std::vector<Interaction> train;
  for (int i = 0; i < 7; ++i) train.push_back({0, i});
  auto ds = testsupport::toy_dataset(1, 9, train, {{0, 7}}, {{0, 8}});
  ForgetPartition part = generate_forget_set(ds, {ForgetMode::InteractionUser, 1.0, 21});
  CHECK(part.forget.size() == 4);  // ceil(7/2)
  CHECK(part.retain.size() == 3);
}

TEST_CASE("generate_forget_set: forget and retain partition train") {
  RawInteractions raw;
  Rng rng(17);
  std::set<std::pair<int, int>> seen;
  while (raw.pairs.size() < 200) {
    int u = static_cast<int>(rng.uniform(12));
    int i = static_cast<int>(rng.uniform(18));
    if (seen.insert({u, i}).second) raw.pairs.emplace_back(std::to_string(u), std::to_string(i));
  }
  InteractionDataset ds = build_dataset(raw, SplitRatios{}, 2);
  for (auto mode : {ForgetMode::EntityItem, ForgetMode::InteractionUser}) {
    ForgetPartition part = generate_forget_set(ds, {mode, 0.3, 5});
    ForgetPartition again = generate_forget_set(ds, {mode, 0.3, 5});
    CHECK(part.forget == again.forget);  // pure function of (input, seed)
    std::vector<Interaction> merged = part.forget;
    merged.insert(merged.end(), part.retain.begin(), part.retain.end());
    std::sort(merged.begin(), merged.end());
    CHECK(merged == ds.train);
  }
}

TEST_CASE("generate_forget_set rejects forgetting the entire train set") {
  auto ds = testsupport::toy_dataset(2, 1, {{0, 0}, {1, 0}});
  CHECK_THROWS_AS(generate_forget_set(ds, {ForgetMode::EntityItem, 1.0, 1}), std::runtime_error);
}

TEST_CASE("with_train_edges rebuilds adjacency for the retain set") {
  auto ds = testsupport::toy_dataset(3, 3, {{0, 0}, {0, 1}, {1, 1}, {2, 2}});
  InteractionDataset retained = with_train_edges(ds, {{0, 1}, {2, 2}});
  CHECK(retained.train.size() == 2);
  CHECK(retained.user_adj.degree(0) == 1);
  CHECK(retained.user_adj.degree(1) == 0);
  CHECK_FALSE(retained.has_train_edge(0, 0));
  CHECK(retained.has_train_edge(2, 2));
}

TEST_CASE("write_id_map emits external ids with dense indices") {
  auto path = (std::filesystem::temp_directory_path() / "unrank_map.tsv").string();
  write_id_map({"alpha", "beta"}, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "alpha\t0");
  std::getline(in, line);
  CHECK(line == "beta\t1");
}
