#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unrank/dataset.hpp"
#include "unrank/matrix.hpp"
#include "unrank/propagation.hpp"

namespace unrank {

enum class Backbone { MF, LightGCN };

std::string backbone_name(Backbone b);
Backbone parse_backbone(const std::string& name);

// Embedding tables. All heavy math runs in double; checkpoints store the
// tables as little-endian float32 (see save_checkpoint).
struct ModelParams {
  Backbone backbone = Backbone::MF;
  int layers = 0;  // K, used by LightGCN only
  Matrix user_emb;
  Matrix item_emb;

  std::int64_t dim() const { return user_emb.cols; }
  std::int32_t n_users() const { return static_cast<std::int32_t>(user_emb.rows); }
  std::int32_t n_items() const { return static_cast<std::int32_t>(item_emb.rows); }
};

struct Triplet {
  std::int32_t user = 0;
  std::int32_t pos = 0;
  std::int32_t neg = 0;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct TripletSample {
  std::vector<Triplet> triplets;
  std::int64_t skipped_edges = 0;  // edges whose user has an empty negative pool
};

struct TrainConfig {
  double lr = 0.01;
  int batch_size = 1024;
  int epochs = 10;
  double weight_decay = 1e-4;  // decoupled (AdamW)
  int negatives_per_positive = 1;
  std::uint64_t seed = 42;
};

struct TrainTrace {
  std::vector<double> epoch_loss;          // mean triplet loss per epoch
  std::int64_t skipped_edges = 0;          // summed over epochs
  std::int64_t positive_edge_visits = 0;   // total positives consumed by the optimizer
};

struct EffectiveEmbeddings {
  Matrix users;
  Matrix items;
};

// Entries ~ N(0, 0.1/sqrt(d)), drawn through float32 so fresh parameters
// survive a checkpoint round trip bit-exactly.
ModelParams init_params(std::int32_t n_users, std::int32_t n_items, std::int64_t dim, std::uint64_t seed,
                        Backbone backbone = Backbone::MF, int layers = 0);

// Stacks [user_emb; item_emb] into one node-indexed table and back.
Matrix joint_table(const ModelParams& params);
void split_joint(const Matrix& joint, std::int32_t n_users, Matrix& users, Matrix& items);

// MF returns the tables unchanged; LightGCN returns the layer-averaged
// propagated tables. prop may be null for MF and is required for LightGCN.
EffectiveEmbeddings effective_embeddings(const ModelParams& params, const PropagationOperator* prop);

double score(const ModelParams& params, const PropagationOperator* prop, std::int32_t user, std::int32_t item);

// All items sorted by descending score, ties broken by ascending item index.
// exclude_train removes the user's train positives from the list.
std::vector<std::int32_t> rank_items(const ModelParams& params, const PropagationOperator* prop,
                                     const InteractionDataset& ds, std::int32_t user, bool exclude_train);

// Scores of every item for one user, from precomputed effective tables.
std::vector<double> score_all(const EffectiveEmbeddings& eff, std::int32_t user);
// Item order (descending score, ascending index) for a score vector.
std::vector<std::int32_t> order_items(std::span<const double> scores);

// m negatives per edge, uniform over the items the edge's user has not
// interacted with in ds.train. The draw for an edge depends only on
// (seed, edge id), so subsets of edges sample identical negatives.
TripletSample sample_triplets(const InteractionDataset& ds, std::span<const Interaction> edges, int m,
                              std::uint64_t seed);

// Sum over triplets of -w_t * ln sigma(y_ui - y_uj); empty weights mean 1.
// The sigmoid argument is clamped to [-30, 30] before the log.
double bpr_loss(const ModelParams& params, const PropagationOperator* prop, std::span<const Triplet> triplets,
                std::span<const double> weights = {});

// Full-table analytic gradient of bpr_loss. For LightGCN the chain rule runs
// through the propagation operator, which is self-adjoint.
std::pair<Matrix, Matrix> bpr_gradient(const ModelParams& params, const PropagationOperator* prop,
                                       std::span<const Triplet> triplets, std::span<const double> weights = {});

// AdamW (beta1=0.9, beta2=0.999, eps=1e-8, decoupled decay) on minibatched
// BPR loss with fresh seeded negatives each epoch. Deterministic given the
// config; throws if the loss turns non-finite. `edges` overrides ds.train
// (used for retraining on the retain set).
ModelParams train(const InteractionDataset& ds, Backbone backbone, int layers, std::int64_t dim,
                  const TrainConfig& config, TrainTrace* trace = nullptr,
                  const std::vector<Interaction>* edges = nullptr);

// ASCII header "L2UR1 <backbone> <K> <n_users> <n_items> <dim>\n" followed by
// the two tables as little-endian float32, row-major, users first.
void save_checkpoint(const ModelParams& params, const std::string& path);
ModelParams load_checkpoint(const std::string& path);

double sigmoid(double x);
double log_sigmoid_clamped(double x);

}  // namespace unrank
