#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "support.hpp"
#include "unrank/model.hpp"
#include "unrank/rng.hpp"

using namespace unrank;
using testsupport::toy_dataset;

TEST_CASE("init_params is deterministic with the documented variance") {
  ModelParams a = init_params(1250, 1250, 4, 42);
  ModelParams b = init_params(1250, 1250, 4, 42);
  CHECK(a.user_emb == b.user_emb);
  CHECK(a.item_emb == b.item_emb);

  ModelParams c = init_params(2, 2, 1, 7);
  CHECK(c.user_emb.rows == 2);
  CHECK(c.user_emb.cols == 1);
  for (double v : c.user_emb.data) CHECK(std::isfinite(v));

  // sample variance of 10,000 entries ~ 0.01/d within 20%
  double mean = 0.0, sq = 0.0;
  std::size_t n = 0;
  for (const Matrix* t : {&a.user_emb, &a.item_emb}) {
    for (double v : t->data) {
      mean += v;
      sq += v * v;
      ++n;
    }
  }
  mean /= static_cast<double>(n);
  double variance = sq / static_cast<double>(n) - mean * mean;
  CHECK(variance == doctest::Approx(0.01 / 4).epsilon(0.2));
}

TEST_CASE("init_params rejects dim < 1") { CHECK_THROWS_AS(init_params(2, 2, 0, 1), std::invalid_argument); }

TEST_CASE("effective_embeddings: MF is the identity") {
  ModelParams p = init_params(4, 5, 3, 9);
  EffectiveEmbeddings eff = effective_embeddings(p, nullptr);
  CHECK(eff.users == p.user_emb);
  CHECK(eff.items == p.item_emb);
}

TEST_CASE("effective_embeddings: K = 0 lightgcn is the identity") {
  auto ds = toy_dataset(2, 2, {{0, 0}, {1, 1}, {0, 1}});
  ModelParams p = init_params(2, 2, 3, 10, Backbone::LightGCN, 0);
  PropagationOperator prop = build_propagation(ds, 0);
  EffectiveEmbeddings eff = effective_embeddings(p, &prop);
  CHECK(eff.users == p.user_emb);
  CHECK(eff.items == p.item_emb);
}

namespace {

// Dense oracle: (1/(K+1)) sum_k (D^-1/2 A D^-1/2)^k E with explicit matrix
// powers.
Eigen::MatrixXd dense_propagation(const InteractionDataset& ds, const ModelParams& p, int layers) {
  const int n = ds.node_count();
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : ds.train) {
    adj(e.user, ds.item_node(e.item)) = 1.0;
    adj(ds.item_node(e.item), e.user) = 1.0;
  }
  Eigen::VectorXd dinv(n);
  for (int v = 0; v < n; ++v) {
    double deg = adj.row(v).sum();
    dinv(v) = deg > 0 ? 1.0 / std::sqrt(deg) : 0.0;
  }
  Eigen::MatrixXd norm_adj = dinv.asDiagonal() * adj * dinv.asDiagonal();
  Eigen::MatrixXd e(n, p.dim());
  for (std::int32_t u = 0; u < ds.n_users; ++u) {
    for (std::int64_t k = 0; k < p.dim(); ++k) e(u, k) = p.user_emb.at(u, k);
  }
  for (std::int32_t i = 0; i < ds.n_items; ++i) {
    for (std::int64_t k = 0; k < p.dim(); ++k) e(ds.n_users + i, k) = p.item_emb.at(i, k);
  }
  Eigen::MatrixXd acc = e;
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= layers; ++k) {
    power = norm_adj * power;
    acc += power * e;
  }
  return acc / (layers + 1);
}

}  // namespace

TEST_CASE("effective_embeddings matches the dense matrix-power oracle") {
  auto ds = toy_dataset(2, 2, {{0, 0}, {0, 1}, {1, 1}});
  ModelParams p = init_params(2, 2, 3, 11, Backbone::LightGCN, 1);
  p.user_emb.at(0, 0) = 1.0;  // hand-set a few entries on top of the random init
  p.item_emb.at(1, 2) = -2.0;
  for (int layers : {1, 2, 3}) {
    p.layers = layers;
    PropagationOperator prop = build_propagation(ds, layers);
    EffectiveEmbeddings eff = effective_embeddings(p, &prop);
    Eigen::MatrixXd expected = dense_propagation(ds, p, layers);
    for (std::int32_t u = 0; u < 2; ++u) {
      for (int k = 0; k < 3; ++k) CHECK(eff.users.at(u, k) == doctest::Approx(expected(u, k)).epsilon(1e-12));
    }
    for (std::int32_t i = 0; i < 2; ++i) {
      for (int k = 0; k < 3; ++k) CHECK(eff.items.at(i, k) == doctest::Approx(expected(2 + i, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("propagation rows of isolated nodes are zero and apply is linear") {
  // item 2 has no train edges
  auto ds = toy_dataset(2, 3, {{0, 0}, {1, 1}});
  PropagationOperator prop = build_propagation(ds, 1);
  CHECK(prop.offsets[ds.item_node(2) + 1] == prop.offsets[ds.item_node(2)]);

  Rng rng(3);
  Matrix x1(5, 4), x2(5, 4);
  for (double& v : x1.data) v = rng.normal();
  for (double& v : x2.data) v = rng.normal();
  const double a = 1.25, b = -0.75;
  Matrix combined(5, 4);
  for (std::size_t k = 0; k < combined.data.size(); ++k) combined.data[k] = a * x1.data[k] + b * x2.data[k];
  Matrix lhs = prop.apply(combined);
  Matrix r1 = prop.apply(x1), r2 = prop.apply(x2);
  for (std::size_t k = 0; k < lhs.data.size(); ++k) {
    CHECK(lhs.data[k] == doctest::Approx(a * r1.data[k] + b * r2.data[k]).epsilon(1e-13));
  }
}

TEST_CASE("score: basis vectors, orthogonality and the arithmetic oracle") {
  ModelParams p = init_params(2, 2, 3, 5);
  p.user_emb.set_zero();
  p.item_emb.set_zero();
  p.user_emb.at(0, 1) = 1.0;
  p.item_emb.at(0, 1) = 1.0;  // same basis vector
  p.item_emb.at(1, 2) = 1.0;  // orthogonal
  CHECK(score(p, nullptr, 0, 0) == 1.0);
  CHECK(score(p, nullptr, 0, 1) == 0.0);

  ModelParams q = init_params(1, 1, 4, 6);
  double expected = 0.0;
  for (int k = 0; k < 4; ++k) expected += q.user_emb.at(0, k) * q.item_emb.at(0, k);
  CHECK(score(q, nullptr, 0, 0) == doctest::Approx(expected).epsilon(1e-15));

  CHECK_THROWS_AS(score(p, nullptr, 2, 0), std::out_of_range);
  CHECK_THROWS_AS(score(p, nullptr, 0, 5), std::out_of_range);
}

TEST_CASE("sample_triplets draws valid negatives deterministically") {
  auto ds = toy_dataset(2, 6, {{0, 0}, {0, 1}, {1, 2}});
  std::vector<Interaction> edges = {{0, 0}};
  TripletSample s1 = sample_triplets(ds, edges, 1, 99);
  REQUIRE(s1.triplets.size() == 1);
  CHECK(s1.triplets[0].user == 0);
  CHECK(s1.triplets[0].pos == 0);
  CHECK_FALSE(ds.has_train_edge(0, s1.triplets[0].neg));

  TripletSample s2 = sample_triplets(ds, edges, 1, 99);
  CHECK(s1.triplets == s2.triplets);
  TripletSample s4 = sample_triplets(ds, edges, 5, 100);
  TripletSample s5 = sample_triplets(ds, edges, 5, 99);
  CHECK(s4.triplets != s5.triplets);
}

TEST_CASE("sample_triplets negatives are uniform over the pool (chi-square)") {
  auto ds = toy_dataset(1, 8, {{0, 0}, {0, 1}, {0, 2}});
  std::vector<Interaction> edges = {{0, 0}};
  const int draws = 1000;
  TripletSample s = sample_triplets(ds, edges, draws, 1234);
  REQUIRE(s.triplets.size() == draws);
  std::vector<int> counts(8, 0);
  for (const auto& t : s.triplets) {
    CHECK(t.neg >= 3);  // items 0..2 are interacted
    ++counts[t.neg];
  }
  const double expected = draws / 5.0;
  double chi2 = 0.0;
  for (int i = 3; i < 8; ++i) chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
  CHECK(chi2 < 20.0);  // dof 4, far beyond the 0.001 quantile of 18.47
}

TEST_CASE("sample_triplets skips users with an empty negative pool") {
  auto ds = toy_dataset(1, 2, {{0, 0}, {0, 1}});
  std::vector<Interaction> edges = {{0, 0}, {0, 1}};
  TripletSample s = sample_triplets(ds, edges, 1, 1);
  CHECK(s.triplets.empty());
  CHECK(s.skipped_edges == 2);
}

TEST_CASE("bpr_loss closed-form examples") {
  ModelParams p = init_params(1, 2, 2, 8);
  p.user_emb.set_zero();
  p.item_emb.set_zero();
  p.user_emb.at(0, 0) = 1.0;
  p.item_emb.at(0, 0) = 0.7;
  p.item_emb.at(1, 0) = 0.7;  // equal scores
  std::vector<Triplet> one = {{0, 0, 1}};
  std::vector<double> w = {0.3};  // (w(u)+w(i))/2 = (0.2+0.4)/2
  CHECK(bpr_loss(p, nullptr, one, w) == doctest::Approx(0.3 * std::log(2.0)).epsilon(1e-14));

  CHECK(bpr_loss(p, nullptr, {}) == 0.0);

  std::vector<Triplet> two = {{0, 0, 1}, {0, 0, 1}};
  CHECK(bpr_loss(p, nullptr, two) == 2.0 * bpr_loss(p, nullptr, one));
}

TEST_CASE("bpr_loss stays finite under extreme score gaps") {
  ModelParams p = init_params(1, 2, 1, 8);
  p.user_emb.at(0, 0) = 100.0;
  p.item_emb.at(0, 0) = -100.0;  // y_ui - y_uj = -20000
  p.item_emb.at(1, 0) = 100.0;
  std::vector<Triplet> one = {{0, 0, 1}};
  double loss = bpr_loss(p, nullptr, one);
  CHECK(std::isfinite(loss));
  CHECK(loss == doctest::Approx(30.0).epsilon(1e-9));  // clamped at -30
}

TEST_CASE("bpr_gradient matches central finite differences (MF and LightGCN)") {
  auto ds = toy_dataset(3, 4, {{0, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 2}, {2, 3}});
  std::vector<Triplet> triplets = {{0, 0, 3}, {0, 1, 2}, {1, 1, 0}, {1, 2, 3}, {2, 2, 0}, {2, 3, 1}};
  std::vector<double> weights = {0.3, 0.1, 0.25, 0.05, 0.2, 0.1};

  for (Backbone backbone : {Backbone::MF, Backbone::LightGCN}) {
    ModelParams p = init_params(3, 4, 5, 21, backbone, 1);
    PropagationOperator prop = build_propagation(ds, 1);
    const PropagationOperator* prop_ptr = backbone == Backbone::LightGCN ? &prop : nullptr;
    auto [gu, gi] = bpr_gradient(p, prop_ptr, triplets, weights);
    auto loss = [&](ModelParams& q) { return bpr_loss(q, prop_ptr, triplets, weights); };
    for (bool user_table : {true, false}) {
      const Matrix& g = user_table ? gu : gi;
      for (std::int64_t r = 0; r < g.rows; ++r) {
        for (std::int64_t c = 0; c < g.cols; ++c) {
          double fd = testsupport::fd_derivative(p, user_table, r, c, loss);
          CHECK(std::abs(g.at(r, c) - fd) <= 1e-4 * std::max(1e-4, std::abs(fd)));
        }
      }
    }
  }
}

TEST_CASE("rank orders by score with ascending-index ties") {
  auto ds = toy_dataset(1, 3, {});
  ModelParams p = init_params(1, 3, 1, 2);
  p.user_emb.at(0, 0) = 1.0;
  p.item_emb.at(0, 0) = 0.9;
  p.item_emb.at(1, 0) = 0.1;
  p.item_emb.at(2, 0) = 0.5;
  CHECK(rank_items(p, nullptr, ds, 0, false) == std::vector<std::int32_t>{0, 2, 1});

  for (int i = 0; i < 3; ++i) p.item_emb.at(i, 0) = 0.25;
  CHECK(rank_items(p, nullptr, ds, 0, false) == std::vector<std::int32_t>{0, 1, 2});
}

TEST_CASE("rank matches an independent full sort on a random instance") {
  auto ds = toy_dataset(1, 20, {{0, 4}, {0, 9}});
  ModelParams p = init_params(1, 20, 6, 33);
  EffectiveEmbeddings eff = effective_embeddings(p, nullptr);
  std::vector<double> scores = score_all(eff, 0);

  std::vector<std::int32_t> expected(20);
  for (int i = 0; i < 20; ++i) expected[i] = i;
  std::stable_sort(expected.begin(), expected.end(), [&](int a, int b) { return scores[a] > scores[b]; });
  CHECK(rank_items(p, nullptr, ds, 0, false) == expected);

  std::vector<std::int32_t> filtered = rank_items(p, nullptr, ds, 0, true);
  CHECK(filtered.size() == 18);
  for (std::int32_t i : filtered) CHECK_FALSE(ds.has_train_edge(0, i));
}

TEST_CASE("ranking is invariant to a constant score shift") {
  // adding the same vector to every item row shifts each user's scores by a
  // constant; exact dyadic values keep the arithmetic rounding-free
  auto ds = toy_dataset(2, 5, {});
  ModelParams p = init_params(2, 5, 3, 12);
  Rng rng(55);
  for (double& v : p.user_emb.data) v = static_cast<double>(static_cast<int>(rng.uniform(9)) - 4) * 0.25;
  for (double& v : p.item_emb.data) v = static_cast<double>(static_cast<int>(rng.uniform(9)) - 4) * 0.5;
  ModelParams shifted = p;
  const double w[3] = {0.5, -1.0, 0.25};
  for (std::int64_t i = 0; i < 5; ++i) {
    for (int k = 0; k < 3; ++k) shifted.item_emb.at(i, k) += w[k];
  }
  for (std::int32_t u = 0; u < 2; ++u) {
    CHECK(rank_items(p, nullptr, ds, u, false) == rank_items(shifted, nullptr, ds, u, false));
  }
}

TEST_CASE("train with 0 epochs returns the seeded init") {
  auto ds = toy_dataset(3, 3, {{0, 0}, {0, 1}, {1, 1}, {2, 2}});
  TrainConfig config;
  config.epochs = 0;
  config.seed = 77;
  ModelParams p = train(ds, Backbone::MF, 0, 4, config);
  ModelParams expected = init_params(3, 3, 4, stream_seed(77, "init"));
  CHECK(p.user_emb == expected.user_emb);
  CHECK(p.item_emb == expected.item_emb);
}

TEST_CASE("train reduces the loss on a planted preference dataset") {
  // users 0-2 like items 0-2, users 3-4 like items 3-4
  std::vector<Interaction> edges;
  for (int u = 0; u < 5; ++u) {
    for (int i = 0; i < 5; ++i) {
      if ((u < 3) == (i < 3)) edges.push_back({u, i});
    }
  }
  auto ds = toy_dataset(5, 5, edges);
  TrainConfig config;
  config.epochs = 50;
  config.lr = 0.05;
  config.batch_size = 8;
  config.seed = 5;
  TrainTrace trace;
  ModelParams p = train(ds, Backbone::MF, 0, 4, config, &trace);
  REQUIRE(trace.epoch_loss.size() == 50);
  CHECK(trace.epoch_loss.back() < trace.epoch_loss.front());
  for (double v : p.user_emb.data) CHECK(std::isfinite(v));

  TrainTrace trace2;
  train(ds, Backbone::MF, 0, 4, config, &trace2);
  CHECK(trace.epoch_loss == trace2.epoch_loss);  // bitwise-identical reduction order
}

TEST_CASE("train works through the lightgcn propagation path") {
  std::vector<Interaction> edges;
  for (int u = 0; u < 4; ++u) {
    for (int i = 0; i < 4; ++i) {
      if ((u < 2) == (i < 2)) edges.push_back({u, i});
    }
  }
  auto ds = toy_dataset(4, 4, edges);
  TrainConfig config;
  config.epochs = 30;
  config.lr = 0.05;
  config.batch_size = 4;
  config.seed = 6;
  TrainTrace trace;
  ModelParams p = train(ds, Backbone::LightGCN, 1, 4, config, &trace);
  CHECK(p.backbone == Backbone::LightGCN);
  CHECK(trace.epoch_loss.back() < trace.epoch_loss.front());
}

TEST_CASE("checkpoint round trip is bit-exact") {
  namespace fs = std::filesystem;
  auto path = (fs::temp_directory_path() / "unrank_ckpt.bin").string();
  auto path2 = (fs::temp_directory_path() / "unrank_ckpt2.bin").string();
  ModelParams p = init_params(3, 4, 5, 9, Backbone::LightGCN, 2);
  save_checkpoint(p, path);
  ModelParams q = load_checkpoint(path);
  CHECK(q.backbone == Backbone::LightGCN);
  CHECK(q.layers == 2);
  CHECK(q.user_emb == p.user_emb);  // init values are float32-representable
  CHECK(q.item_emb == p.item_emb);

  save_checkpoint(q, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);
}

TEST_CASE("checkpoint errors name the offending field") {
  namespace fs = std::filesystem;
  auto path = (fs::temp_directory_path() / "unrank_bad_ckpt.bin").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "WRONG mf 0 2 2 4\n";
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("magic"), std::runtime_error);

  {
    std::ofstream out(path, std::ios::binary);
    out << "L2UR1 mf 0 2 2 0\n";
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("dim"), std::runtime_error);

  {
    std::ofstream out(path, std::ios::binary);
    out << "L2UR1 mf 0 2 2 4\n";
    out << "shrt";  // one float instead of 16
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("truncated"), std::runtime_error);

  {
    ModelParams p = init_params(2, 2, 4, 1);
    save_checkpoint(p, path);
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << "x";
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("trailing"), std::runtime_error);
}
