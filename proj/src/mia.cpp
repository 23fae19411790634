#include "unrank/mia.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "unrank/rng.hpp"

namespace unrank {

namespace {

constexpr int kLayerDims[] = {3, 32, 16, 8, 1};
constexpr int kLayers = 4;
constexpr int kEpochs = 300;
constexpr double kLr = 0.01;
constexpr double kWeightDecay = 1e-4;

struct Mlp {
  // weights[l] is out x in row-major, biases[l] length out
  std::vector<std::vector<double>> weights, biases;

  explicit Mlp(Rng& rng) {
    for (int l = 0; l < kLayers; ++l) {
      const int fan_in = kLayerDims[l], fan_out = kLayerDims[l + 1];
      std::vector<double> w(static_cast<std::size_t>(fan_in) * fan_out);
      const double std_dev = std::sqrt(2.0 / fan_in);
      for (double& x : w) x = rng.normal() * std_dev;
      weights.push_back(std::move(w));
      biases.push_back(std::vector<double>(fan_out, 0.0));
    }
  }

  // Forward pass keeping pre-activation inputs of each layer for backprop.
  double forward(const double* x, std::vector<std::vector<double>>& activations) const {
    activations.assign(kLayers + 1, {});
    activations[0].assign(x, x + kLayerDims[0]);
    for (int l = 0; l < kLayers; ++l) {
      const int fan_in = kLayerDims[l], fan_out = kLayerDims[l + 1];
      std::vector<double> out(fan_out);
      for (int o = 0; o < fan_out; ++o) {
        double s = biases[l][o];
        const double* row = weights[l].data() + static_cast<std::size_t>(o) * fan_in;
        for (int i = 0; i < fan_in; ++i) s += row[i] * activations[l][i];
        out[o] = l + 1 < kLayers ? std::max(0.0, s) : s;  // last layer is a logit
      }
      activations[l + 1] = std::move(out);
    }
    return activations[kLayers][0];
  }

  double logit(const double* x) const {
    std::vector<std::vector<double>> acts;
    return forward(x, acts);
  }
};

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

void train_mlp(Mlp& net, std::span<const std::array<double, 3>> features, std::span<const int> labels,
               std::span<const std::size_t> train_idx) {
  std::vector<std::vector<double>> grad_w(kLayers), grad_b(kLayers);
  std::vector<std::vector<double>> m_w(kLayers), v_w(kLayers), m_b(kLayers), v_b(kLayers);
  for (int l = 0; l < kLayers; ++l) {
    grad_w[l].assign(net.weights[l].size(), 0.0);
    grad_b[l].assign(net.biases[l].size(), 0.0);
    m_w[l] = v_w[l] = grad_w[l];
    m_b[l] = v_b[l] = grad_b[l];
  }

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<std::vector<double>> acts;
  const double inv_n = 1.0 / static_cast<double>(train_idx.size());

  for (int epoch = 1; epoch <= kEpochs; ++epoch) {
    for (int l = 0; l < kLayers; ++l) {
      std::fill(grad_w[l].begin(), grad_w[l].end(), 0.0);
      std::fill(grad_b[l].begin(), grad_b[l].end(), 0.0);
    }
    for (std::size_t idx : train_idx) {
      const double logit = net.forward(features[idx].data(), acts);
      // BCE-with-logits: dL/dlogit = sigma(logit) - y
      std::vector<double> delta{(stable_sigmoid(logit) - labels[idx]) * inv_n};
      for (int l = kLayers - 1; l >= 0; --l) {
        const int fan_in = kLayerDims[l], fan_out = kLayerDims[l + 1];
        std::vector<double> delta_prev(fan_in, 0.0);
        for (int o = 0; o < fan_out; ++o) {
          grad_b[l][o] += delta[o];
          double* grow = grad_w[l].data() + static_cast<std::size_t>(o) * fan_in;
          const double* wrow = net.weights[l].data() + static_cast<std::size_t>(o) * fan_in;
          for (int i = 0; i < fan_in; ++i) {
            grow[i] += delta[o] * acts[l][i];
            delta_prev[i] += delta[o] * wrow[i];
          }
        }
        if (l > 0) {
          for (int i = 0; i < fan_in; ++i) {
            if (acts[l][i] <= 0.0) delta_prev[i] = 0.0;  // ReLU mask
          }
        }
        delta = std::move(delta_prev);
      }
    }
    const double bias1 = 1.0 - std::pow(beta1, epoch);
    const double bias2 = 1.0 - std::pow(beta2, epoch);
    for (int l = 0; l < kLayers; ++l) {
      for (std::size_t k = 0; k < net.weights[l].size(); ++k) {
        m_w[l][k] = beta1 * m_w[l][k] + (1.0 - beta1) * grad_w[l][k];
        v_w[l][k] = beta2 * v_w[l][k] + (1.0 - beta2) * grad_w[l][k] * grad_w[l][k];
        net.weights[l][k] -= kLr * ((m_w[l][k] / bias1) / (std::sqrt(v_w[l][k] / bias2) + eps) +
                                    kWeightDecay * net.weights[l][k]);
      }
      for (std::size_t k = 0; k < net.biases[l].size(); ++k) {
        m_b[l][k] = beta1 * m_b[l][k] + (1.0 - beta1) * grad_b[l][k];
        v_b[l][k] = beta2 * v_b[l][k] + (1.0 - beta2) * grad_b[l][k] * grad_b[l][k];
        net.biases[l][k] -= kLr * (m_b[l][k] / bias1) / (std::sqrt(v_b[l][k] / bias2) + eps);
      }
    }
  }
}

}  // namespace

AttackOutcome train_attacker(std::span<const std::array<double, 3>> features, std::span<const int> labels,
                             std::uint64_t seed) {
  if (features.size() != labels.size() || features.empty()) {
    throw std::invalid_argument("train_attacker: features/labels mismatch");
  }

  // stratified 70/30 split
  std::vector<std::size_t> members, nonmembers;
  for (std::size_t k = 0; k < labels.size(); ++k) (labels[k] == 1 ? members : nonmembers).push_back(k);
  Rng split_rng(stream_seed(seed, "mia-split"));
  split_rng.shuffle(members);
  split_rng.shuffle(nonmembers);
  auto take = [](const std::vector<std::size_t>& v, double frac) {
    return static_cast<std::size_t>(std::llround(frac * static_cast<double>(v.size())));
  };
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t k = 0; k < members.size(); ++k) {
    (k < take(members, 0.7) ? train_idx : test_idx).push_back(members[k]);
  }
  for (std::size_t k = 0; k < nonmembers.size(); ++k) {
    (k < take(nonmembers, 0.7) ? train_idx : test_idx).push_back(nonmembers[k]);
  }
  bool has_pos = false, has_neg = false;
  for (std::size_t idx : train_idx) (labels[idx] == 1 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) throw std::invalid_argument("train_attacker: training split is single-class");

  // standardize with training-split statistics
  std::array<double, 3> mean{}, stddev{};
  for (std::size_t idx : train_idx) {
    for (int f = 0; f < 3; ++f) mean[f] += features[idx][f];
  }
  for (int f = 0; f < 3; ++f) mean[f] /= static_cast<double>(train_idx.size());
  for (std::size_t idx : train_idx) {
    for (int f = 0; f < 3; ++f) stddev[f] += (features[idx][f] - mean[f]) * (features[idx][f] - mean[f]);
  }
  for (int f = 0; f < 3; ++f) {
    stddev[f] = std::sqrt(stddev[f] / static_cast<double>(train_idx.size()));
    if (stddev[f] < 1e-12) stddev[f] = 1.0;
  }
  std::vector<std::array<double, 3>> scaled(features.begin(), features.end());
  for (auto& row : scaled) {
    for (int f = 0; f < 3; ++f) row[f] = (row[f] - mean[f]) / stddev[f];
  }

  Rng init_rng(stream_seed(seed, "mia-init"));
  Mlp net(init_rng);
  train_mlp(net, scaled, labels, train_idx);

  std::int64_t correct = 0, false_pos = 0, held_nonmembers = 0;
  for (std::size_t idx : test_idx) {
    const int predicted = net.logit(scaled[idx].data()) > 0.0 ? 1 : 0;
    if (predicted == labels[idx]) ++correct;
    if (labels[idx] == 0) {
      ++held_nonmembers;
      if (predicted == 1) ++false_pos;
    }
  }
  AttackOutcome out;
  out.accuracy = test_idx.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test_idx.size());
  out.fpr = held_nonmembers > 0 ? static_cast<double>(false_pos) / static_cast<double>(held_nonmembers) : 0.0;
  return out;
}

MiaReport mia_fpr(const ModelParams& before, const PropagationOperator* prop_before, const ModelParams& after,
                  const PropagationOperator* prop_after, const InteractionDataset& ds,
                  std::span<const Interaction> forget, std::uint64_t seed) {
  if (forget.size() < 20) throw std::invalid_argument("mia_fpr: need at least 20 forget pairs");

  EffectiveEmbeddings eff_before = effective_embeddings(before, prop_before);
  EffectiveEmbeddings eff_after = effective_embeddings(after, prop_after);
  auto pair_features = [&](const Interaction& e) -> std::array<double, 3> {
    const double s_before = dot(eff_before.users.row_span(e.user), eff_before.items.row_span(e.item));
    const double s_after = dot(eff_after.users.row_span(e.user), eff_after.items.row_span(e.item));
    return {s_before, s_after, s_before - s_after};
  };

  std::vector<std::array<double, 3>> features;
  std::vector<int> labels;
  features.reserve(forget.size() * 2);
  for (const auto& e : forget) {
    features.push_back(pair_features(e));
    labels.push_back(1);
  }

  Rng rng(stream_seed(seed, "mia-nonmembers"));
  std::unordered_set<std::int64_t> drawn;
  while (drawn.size() < forget.size()) {
    const auto u = static_cast<std::int32_t>(rng.uniform(ds.n_users));
    const auto i = static_cast<std::int32_t>(rng.uniform(ds.n_items));
    if (ds.has_train_edge(u, i)) continue;
    const std::int64_t key = static_cast<std::int64_t>(u) * ds.n_items + i;
    if (!drawn.insert(key).second) continue;
    features.push_back(pair_features({u, i}));
    labels.push_back(0);
  }

  AttackOutcome outcome = train_attacker(features, labels, seed);
  MiaReport report;
  report.fpr = outcome.fpr;
  report.accuracy = outcome.accuracy;
  report.n_members = static_cast<std::int64_t>(forget.size());
  report.n_nonmembers = static_cast<std::int64_t>(forget.size());
  return report;
}

}  // namespace unrank
