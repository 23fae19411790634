#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "unrank/model.hpp"
#include "unrank/scope.hpp"

namespace unrank {

// Softmax-normalized influence distribution over the scope entities. All
// vectors are aligned with scope.entities.
struct InfluenceWeights {
  std::vector<std::int32_t> entities;
  std::vector<double> weights;        // w(v), sums to 1
  std::vector<double> raw_structural;  // degrees
  std::vector<double> raw_semantic;    // aggregated cosines to E_f
  double alpha = 0.5;

  double weight_of(std::int32_t node) const;  // 0 for entities outside the scope
};

// w_st(v) = induced degree of v within the scope edge set.
std::vector<double> structural_influence(const InfluencedScope& scope);

// w_se(v) = sum over t in E_f of cos(e_v, e_t), using base embedding rows;
// zero-norm rows contribute cosine 0.
std::vector<double> semantic_influence(const InfluencedScope& scope, const ModelParams& params,
                                       std::span<const std::int32_t> forget_entities);

// Min-max normalizes both maps to [0,1] (constant maps become all-zero) and
// mixes them: alpha * structural + (1-alpha) * semantic.
std::vector<double> unify_influence(std::span<const double> structural, std::span<const double> semantic,
                                    double alpha);

// Softmax with max subtraction.
std::vector<double> softmax_weights(std::span<const double> raw);

InfluenceWeights influence_weights(const InfluencedScope& scope, const ModelParams& params,
                                   std::span<const std::int32_t> forget_entities, double alpha);

// Uniform distribution over the scope entities (the no-quantification
// ablation).
InfluenceWeights uniform_influence(const InfluencedScope& scope);

// Debug CSV: entity node id, first hop, raw scores and final weight.
void dump_influence_csv(const InfluencedScope& scope, const InfluenceWeights& w, std::ostream& out);

}  // namespace unrank
