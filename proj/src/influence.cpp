#include "unrank/influence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unrank {

double InfluenceWeights::weight_of(std::int32_t node) const {
  auto it = std::lower_bound(entities.begin(), entities.end(), node);
  if (it == entities.end() || *it != node) return 0.0;
  return weights[it - entities.begin()];
}

std::vector<double> structural_influence(const InfluencedScope& scope) {
  if (scope.entities.empty()) throw std::invalid_argument("structural_influence: empty scope");
  std::vector<double> w(scope.entities.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = static_cast<double>(scope.induced_degree[k]);
  return w;
}

namespace {

const double* node_row(const ModelParams& params, std::int32_t node) {
  return node < params.n_users() ? params.user_emb.row(node) : params.item_emb.row(node - params.n_users());
}

double row_norm(const ModelParams& params, std::int32_t node) {
  const double* r = node_row(params, node);
  double s = 0.0;
  for (std::int64_t k = 0; k < params.dim(); ++k) s += r[k] * r[k];
  return std::sqrt(s);
}

}  // namespace

std::vector<double> semantic_influence(const InfluencedScope& scope, const ModelParams& params,
                                       std::span<const std::int32_t> forget_entities) {
  std::vector<double> target_norms(forget_entities.size());
  for (std::size_t t = 0; t < forget_entities.size(); ++t) target_norms[t] = row_norm(params, forget_entities[t]);

  std::vector<double> w(scope.entities.size(), 0.0);
  const std::int64_t d = params.dim();
  for (std::size_t k = 0; k < scope.entities.size(); ++k) {
    const double* ev = node_row(params, scope.entities[k]);
    const double nv = row_norm(params, scope.entities[k]);
    if (nv == 0.0) continue;
    double acc = 0.0;
    for (std::size_t t = 0; t < forget_entities.size(); ++t) {
      if (target_norms[t] == 0.0) continue;
      const double* et = node_row(params, forget_entities[t]);
      double dp = 0.0;
      for (std::int64_t j = 0; j < d; ++j) dp += ev[j] * et[j];
      acc += dp / (nv * target_norms[t]);
    }
    w[k] = acc;
  }
  return w;
}

namespace {

// Min-max to [0,1]; a constant map becomes all-zero so the later softmax
// degenerates to uniform.
std::vector<double> min_max(std::span<const double> v) {
  auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(v.size(), 0.0);
  if (hi > lo) {
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = (v[k] - lo) / (hi - lo);
  }
  return out;
}

}  // namespace

std::vector<double> unify_influence(std::span<const double> structural, std::span<const double> semantic,
                                    double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("unify_influence: alpha must be in [0,1]");
  if (structural.size() != semantic.size() || structural.empty()) {
    throw std::invalid_argument("unify_influence: maps must be nonempty and aligned");
  }
  std::vector<double> ns = min_max(structural);
  std::vector<double> nm = min_max(semantic);
  std::vector<double> raw(structural.size());
  for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = alpha * ns[k] + (1.0 - alpha) * nm[k];
  return raw;
}

std::vector<double> softmax_weights(std::span<const double> raw) {
  if (raw.empty()) throw std::invalid_argument("softmax_weights: empty input");
  double hi = *std::max_element(raw.begin(), raw.end());
  if (!std::isfinite(hi)) throw std::invalid_argument("softmax_weights: non-finite raw score");
  std::vector<double> w(raw.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    w[k] = std::exp(raw[k] - hi);
    sum += w[k];
  }
  for (double& x : w) x /= sum;
  return w;
}

InfluenceWeights influence_weights(const InfluencedScope& scope, const ModelParams& params,
                                   std::span<const std::int32_t> forget_entities, double alpha) {
  InfluenceWeights out;
  out.entities = scope.entities;
  out.alpha = alpha;
  out.raw_structural = structural_influence(scope);
  out.raw_semantic = semantic_influence(scope, params, forget_entities);
  out.weights = softmax_weights(unify_influence(out.raw_structural, out.raw_semantic, alpha));
  return out;
}

InfluenceWeights uniform_influence(const InfluencedScope& scope) {
  if (scope.entities.empty()) throw std::invalid_argument("uniform_influence: empty scope");
  InfluenceWeights out;
  out.entities = scope.entities;
  out.alpha = 0.0;
  out.raw_structural.assign(scope.entities.size(), 0.0);
  out.raw_semantic.assign(scope.entities.size(), 0.0);
  out.weights.assign(scope.entities.size(), 1.0 / static_cast<double>(scope.entities.size()));
  return out;
}

void dump_influence_csv(const InfluencedScope& scope, const InfluenceWeights& w, std::ostream& out) {
  out << "entity,hop,w_st,w_se,w_raw,w\n";
  std::vector<double> raw = unify_influence(w.raw_structural, w.raw_semantic, w.alpha);
  for (std::size_t k = 0; k < w.entities.size(); ++k) {
    out << w.entities[k] << ',' << scope.entity_hop[k] << ',' << w.raw_structural[k] << ',' << w.raw_semantic[k]
        << ',' << raw[k] << ',' << w.weights[k] << '\n';
  }
}

}  // namespace unrank
