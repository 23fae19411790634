#include "unrank/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "unrank/rng.hpp"

namespace unrank {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, std::string_view delim) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = line.find(delim, pos);
    if (next == std::string_view::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, next - pos));
    pos = next + delim.size();
  }
  return fields;
}

}  // namespace

RawInteractions load_interactions(const std::string& path, std::string_view delimiter) {
  if (delimiter.empty()) throw std::invalid_argument("load_interactions: empty delimiter");
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_interactions: cannot open " + path);

  RawInteractions raw;
  std::unordered_set<std::string> seen;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_fields(line, delimiter);
    if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed line, expected user" +
                               std::string(delimiter) + "item[...]");
    }
    std::string user(fields[0]);
    std::string item(fields[1]);
    std::string key = user + '\x1f' + item;
    if (seen.insert(std::move(key)).second) {
      raw.pairs.emplace_back(std::move(user), std::move(item));
    }
  }
  raw.total_lines = line_no;
  if (line_no == 0) throw std::runtime_error("load_interactions: " + path + " is empty");
  return raw;
}

namespace {

void build_adjacency(InteractionDataset& ds) {
  const auto& train = ds.train;
  auto& ua = ds.user_adj;
  auto& ia = ds.item_adj;

  ua.offsets.assign(ds.n_users + 1, 0);
  ia.offsets.assign(ds.n_items + 1, 0);
  for (const auto& e : train) {
    ++ua.offsets[e.user + 1];
    ++ia.offsets[e.item + 1];
  }
  for (std::int32_t u = 0; u < ds.n_users; ++u) ua.offsets[u + 1] += ua.offsets[u];
  for (std::int32_t i = 0; i < ds.n_items; ++i) ia.offsets[i + 1] += ia.offsets[i];

  ua.neighbors.resize(train.size());
  ua.edge_ids.resize(train.size());
  ia.neighbors.resize(train.size());
  ia.edge_ids.resize(train.size());
  std::vector<std::int64_t> ucur(ua.offsets.begin(), ua.offsets.end() - 1);
  std::vector<std::int64_t> icur(ia.offsets.begin(), ia.offsets.end() - 1);
  for (std::int64_t id = 0; id < static_cast<std::int64_t>(train.size()); ++id) {
    const auto& e = train[id];
    ua.neighbors[ucur[e.user]] = e.item;
    ua.edge_ids[ucur[e.user]] = id;
    ++ucur[e.user];
    ia.neighbors[icur[e.item]] = e.user;
    ia.edge_ids[icur[e.item]] = id;
    ++icur[e.item];
  }
}

}  // namespace

std::int64_t InteractionDataset::train_edge_id(std::int32_t user, std::int32_t item) const {
  if (user < 0 || user >= n_users || item < 0 || item >= n_items) return -1;
  auto begin = user_adj.neighbors.begin() + user_adj.offsets[user];
  auto end = user_adj.neighbors.begin() + user_adj.offsets[user + 1];
  auto it = std::lower_bound(begin, end, item);  // rows are item-sorted
  if (it == end || *it != item) return -1;
  return user_adj.edge_ids[it - user_adj.neighbors.begin()];
}

InteractionDataset build_dataset(const RawInteractions& raw, SplitRatios ratios, std::uint64_t seed) {
  if (raw.pairs.empty()) throw std::invalid_argument("build_dataset: no interactions");
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("build_dataset: split ratios must be nonnegative and sum to 1");
  }

  InteractionDataset ds;
  std::unordered_map<std::string, std::int32_t> user_index, item_index;
  std::vector<std::vector<std::int32_t>> per_user;  // item lists in file order

  for (const auto& [ext_u, ext_i] : raw.pairs) {
    auto [uit, unew] = user_index.try_emplace(ext_u, static_cast<std::int32_t>(ds.user_ids.size()));
    if (unew) {
      ds.user_ids.push_back(ext_u);
      per_user.emplace_back();
    }
    auto [iit, inew] = item_index.try_emplace(ext_i, static_cast<std::int32_t>(ds.item_ids.size()));
    if (inew) ds.item_ids.push_back(ext_i);
    per_user[uit->second].push_back(iit->second);
  }
  ds.n_users = static_cast<std::int32_t>(ds.user_ids.size());
  ds.n_items = static_cast<std::int32_t>(ds.item_ids.size());

  for (std::int32_t u = 0; u < ds.n_users; ++u) {
    auto items = per_user[u];
    const std::int64_t deg = static_cast<std::int64_t>(items.size());
    if (deg < 3) {
      for (auto i : items) ds.train.push_back({u, i});
      ++ds.users_fully_in_train;
      continue;
    }
    Rng rng(stream_seed(seed, "split", static_cast<std::uint64_t>(u)));
    rng.shuffle(items);
    auto count = [deg](double ratio) -> std::int64_t {
      if (ratio <= 0.0) return 0;
      return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(ratio * static_cast<double>(deg))));
    };
    std::int64_t n_val = count(ratios.val);
    std::int64_t n_test = count(ratios.test);
    std::int64_t n_train = deg - n_val - n_test;
    for (std::int64_t k = 0; k < deg; ++k) {
      Interaction e{u, items[k]};
      if (k < n_train) {
        ds.train.push_back(e);
      } else if (k < n_train + n_val) {
        ds.val.push_back(e);
      } else {
        ds.test.push_back(e);
      }
    }
  }

  std::sort(ds.train.begin(), ds.train.end());
  std::sort(ds.val.begin(), ds.val.end());
  std::sort(ds.test.begin(), ds.test.end());
  build_adjacency(ds);
  return ds;
}

InteractionDataset with_train_edges(const InteractionDataset& ds, std::vector<Interaction> new_train) {
  InteractionDataset out = ds;
  std::sort(new_train.begin(), new_train.end());
  out.train = std::move(new_train);
  build_adjacency(out);
  return out;
}

ForgetPartition generate_forget_set(const InteractionDataset& ds, const ForgetRequest& req) {
  if (ds.train.empty()) throw std::invalid_argument("generate_forget_set: dataset has no train edges");
  if (req.ratio < 0.0 || req.ratio > 1.0) throw std::invalid_argument("generate_forget_set: ratio must be in [0,1]");

  std::vector<char> in_forget(ds.train.size(), 0);
  Rng rng(stream_seed(req.seed, "forget"));

  if (req.mode == ForgetMode::EntityItem) {
    auto n_pick = static_cast<std::int64_t>(std::ceil(req.ratio * ds.n_items));
    std::vector<std::int32_t> items(ds.n_items);
    for (std::int32_t i = 0; i < ds.n_items; ++i) items[i] = i;
    rng.shuffle(items);
    for (std::int64_t k = 0; k < n_pick; ++k) {
      std::int32_t item = items[k];
      for (std::int64_t p = ds.item_adj.offsets[item]; p < ds.item_adj.offsets[item + 1]; ++p) {
        in_forget[ds.item_adj.edge_ids[p]] = 1;
      }
    }
  } else {
    auto n_pick = static_cast<std::int64_t>(std::ceil(req.ratio * ds.n_users));
    std::vector<std::int32_t> users(ds.n_users);
    for (std::int32_t u = 0; u < ds.n_users; ++u) users[u] = u;
    rng.shuffle(users);
    for (std::int64_t k = 0; k < n_pick; ++k) {
      std::int32_t user = users[k];
      std::int64_t deg = ds.user_adj.degree(user);
      if (deg == 0) continue;
      std::int64_t take = (deg + 1) / 2;  // ceil(deg/2)
      std::vector<std::int64_t> slots(deg);
      for (std::int64_t s = 0; s < deg; ++s) slots[s] = ds.user_adj.offsets[user] + s;
      rng.shuffle(slots);
      for (std::int64_t s = 0; s < take; ++s) in_forget[ds.user_adj.edge_ids[slots[s]]] = 1;
    }
  }

  ForgetPartition part;
  for (std::size_t id = 0; id < ds.train.size(); ++id) {
    (in_forget[id] ? part.forget : part.retain).push_back(ds.train[id]);
  }
  if (!part.forget.empty() && part.retain.empty()) {
    throw std::runtime_error("generate_forget_set: request would forget the entire train set");
  }
  return part;
}

void write_id_map(const std::vector<std::string>& ids, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_id_map: cannot write " + path);
  for (std::size_t k = 0; k < ids.size(); ++k) {
    out << ids[k] << '\t' << k << '\n';
  }
}

}  // namespace unrank
