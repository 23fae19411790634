#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "unrank/cg.hpp"
#include "unrank/dataset.hpp"
#include "unrank/influence.hpp"
#include "unrank/model.hpp"
#include "unrank/scope.hpp"

namespace unrank {

enum class UnlearnVariant { Full, NoScoping, UniformWeights, BceLoss };
enum class UpdateSign { Paper, Flipped };

std::string variant_name(UnlearnVariant v);
UnlearnVariant parse_variant(const std::string& name);
std::string sign_name(UpdateSign s);
UpdateSign parse_sign(const std::string& name);

struct UnlearnConfig {
  int hops = 0;              // p; pick 1 for LightGCN, 0 for MF
  double alpha = 0.5;        // structural/semantic balance
  double eta = 0.1;          // applied update is sign * eta * delta
  double damping = 0.01;     // lambda added to the Hessian
  int negatives_per_positive = 1;
  CgConfig cg;
  UnlearnVariant variant = UnlearnVariant::Full;
  // The influence-function convention solves (H + lambda I) delta = -g and
  // adds eta * delta; empirically that moves forget pairs up, not down, so
  // the calibrated shipped default flips the step. Both remain selectable.
  UpdateSign sign = UpdateSign::Flipped;
  std::uint64_t seed = 0;
};

// Flat view of the embedding rows of the scope entities, users before items
// (ascending node ids). Length is |E_inf| * d.
struct ScopedParameterVector {
  std::vector<std::int32_t> entities;
  std::int64_t dim = 0;
  std::vector<double> values;

  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
  double norm() const;
};

struct PhaseTimings {
  double scope = 0, influence = 0, triplets = 0, gradient = 0, cg = 0, apply = 0, total = 0;
};

struct UnlearnResult {
  ScopedParameterVector applied_delta;  // includes the sign and the eta scale
  CgReport cg_report;
  std::int64_t scope_edges = 0;
  std::int64_t scope_entities = 0;
  std::int64_t forget_edges = 0;
  std::int64_t forget_triplets = 0;
  std::int64_t retained_triplets = 0;
  double update_norm = 0.0;
  UnlearnVariant variant = UnlearnVariant::Full;
  UpdateSign sign = UpdateSign::Flipped;
  PhaseTimings timings;
};

struct ScopeTriplets {
  std::vector<Triplet> forget;    // positives from D_f
  std::vector<Triplet> retained;  // positives from D_inf \ D_f
  std::int64_t skipped_edges = 0;
};

// Labeled (user, item) sample for the binary cross-entropy ablation.
struct LabeledPair {
  std::int32_t user = 0;
  std::int32_t item = 0;
  double label = 1.0;
  double weight = 1.0;
};

// Samples m negatives for every scope edge and partitions the triplets by
// whether the positive edge belongs to the forget set. Negatives depend only
// on (seed, edge id), so the partition shares them with the whole-scope set.
ScopeTriplets build_scope_triplets(const InteractionDataset& ds, const InfluencedScope& scope,
                                   std::span<const Interaction> forget, int m, std::uint64_t seed);

// (w(u) + w(i)) / 2 per triplet; the negative item carries no weight.
std::vector<double> triplet_weights(const InfluenceWeights& w, std::span<const Triplet> triplets,
                                    std::int32_t n_users);

// Gathers / scatters scoped rows of a joint node-indexed table.
ScopedParameterVector gather_rows(const Matrix& joint, std::span<const std::int32_t> entities);
void scatter_rows(const ScopedParameterVector& v, Matrix& joint);
void add_scaled_rows(ModelParams& params, const ScopedParameterVector& v, double scale);

// Gradient of the weighted BPR loss over the forget triplets, restricted to
// the scope entities. Equals the Eq.-style difference between the whole-scope
// and retained-scope gradients because the loss is a sum over triplets.
ScopedParameterVector forget_gradient(const ModelParams& params, const PropagationOperator* prop,
                                      std::span<const std::int32_t> entities, std::span<const Triplet> triplets,
                                      std::span<const double> weights);

// (H + lambda I) where H is the Hessian of the weighted BPR loss over the
// given triplets with respect to the scoped rows. Matrix-free; per-triplet
// second derivatives are closed-form and, for LightGCN, conjugated by the
// self-adjoint propagation map.
LinearOperator hessian_operator(const ModelParams& params, const PropagationOperator* prop,
                                std::span<const std::int32_t> entities, std::vector<Triplet> triplets,
                                std::vector<double> weights, double damping);

// Binary cross-entropy counterparts used by the w/o-RankLoss ablation. Each
// triplet expands to a positive (label 1) and a sampled negative (label 0);
// weights average the endpoint influences, 0 outside the scope.
std::vector<LabeledPair> bce_pairs_from_triplets(std::span<const Triplet> triplets, const InfluenceWeights& w,
                                                 std::int32_t n_users);
double weighted_bce_loss(const ModelParams& params, const PropagationOperator* prop,
                         std::span<const LabeledPair> pairs);
ScopedParameterVector bce_gradient(const ModelParams& params, const PropagationOperator* prop,
                                   std::span<const std::int32_t> entities, std::span<const LabeledPair> pairs);
LinearOperator bce_hessian_operator(const ModelParams& params, const PropagationOperator* prop,
                                    std::span<const std::int32_t> entities, std::vector<LabeledPair> pairs,
                                    double damping);

// Full pipeline: scope -> influence -> triplets -> gradient -> CG ->
// scaled update on the scoped rows only. Throws before touching params on
// empty forget sets, CG breakdown, or a non-finite update.
std::pair<ModelParams, UnlearnResult> unlearn(const ModelParams& params, const InteractionDataset& ds,
                                              std::span<const Interaction> forget, const UnlearnConfig& config);

// First-order estimate <grad_Theta s(u,i), applied_delta> for each pair,
// evaluated at the pre-update parameters.
std::vector<double> predicted_score_change(const ModelParams& params, const PropagationOperator* prop,
                                           const ScopedParameterVector& applied_delta,
                                           std::span<const Interaction> pairs);

}  // namespace unrank
