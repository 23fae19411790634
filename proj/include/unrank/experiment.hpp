#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unrank/dataset.hpp"
#include "unrank/metrics.hpp"
#include "unrank/mia.hpp"
#include "unrank/model.hpp"
#include "unrank/unlearn.hpp"

namespace unrank {

// Flat experiment description shared by the config file and the CLI flags.
struct ExperimentConfig {
  std::string dataset;
  std::string delimiter = "\t";
  std::string backbone = "mf";
  int layers = 1;  // K for lightgcn
  int dim = 64;

  double lr = 0.01;
  int batch_size = 1024;
  int epochs = 20;
  double weight_decay = 1e-4;

  std::string forget_mode = "entity-item";
  double forget_ratio = 0.05;

  int p = -1;  // -1: backbone default (1 for lightgcn, 0 for mf)
  double alpha = 0.5;
  double eta = 0.1;
  double damping = 0.01;
  int negatives = 1;
  double cg_tol = 1e-6;
  int cg_max_iters = -1;
  std::string variant = "full";
  std::string sign = "flipped";

  std::vector<int> ks = {5, 10, 20};
  std::uint64_t seed = 42;
  std::string out = "out";

  bool dump_scope = false;
  bool dump_influence = false;
  bool dump_cg = false;
  bool dump_urr = false;

  int effective_hops() const;
  UnlearnConfig unlearn_config() const;
  TrainConfig train_config() const;
};

// key = value lines, '#' comments, hyphens and underscores interchangeable.
ExperimentConfig load_config_file(const std::string& path);
void apply_config_entry(ExperimentConfig& config, const std::string& key, const std::string& value);
// Range and file-existence checks; throws before any compute on bad input.
void validate_config(const ExperimentConfig& config, bool needs_dataset = true);

struct TrainOutput {
  std::string checkpoint_path;
  std::string loss_csv_path;
  std::string json_path;
  double seconds = 0.0;
  std::vector<double> epoch_loss;
  RankingMetrics val_metrics;
};

struct UnlearnOutput {
  std::string checkpoint_path;
  std::string json_path;
  UnlearnResult result;
};

struct RetrainOutput {
  std::string checkpoint_path;
  std::string json_path;
  double seconds = 0.0;
  std::int64_t forget_edges = 0;
};

struct MethodRow {
  std::string method;
  bool ok = false;
  std::string error;
  RankingMetrics metrics;
  double urr = 0.0;
  double worsened_fraction = 0.0;
  std::optional<MiaReport> mia;
  double seconds = 0.0;
  double speedup = 0.0;
  double update_norm = 0.0;
  std::int64_t cg_iterations = 0;
  std::int64_t scope_edges = 0;
  std::int64_t scope_entities = 0;
};

struct CompareOutput {
  std::vector<MethodRow> rows;  // unlearn variants then retrain
  std::string csv_path;
  std::string json_path;
  double train_seconds = 0.0;
  std::int64_t forget_edges = 0;
};

struct SweepRow {
  double value = 0.0;
  bool ok = false;
  std::string error;
  RankingMetrics metrics;
  double urr = 0.0;
  double update_norm = 0.0;
  std::int64_t cg_iterations = 0;
  std::int64_t scope_edges = 0;
  std::int64_t scope_entities = 0;
  double seconds = 0.0;
};

struct SweepOutput {
  std::string csv_path;
  std::vector<SweepRow> rows;
};

TrainOutput cmd_train(const ExperimentConfig& config);
UnlearnOutput cmd_unlearn(const ExperimentConfig& config, const std::string& checkpoint_path);
RetrainOutput cmd_retrain(const ExperimentConfig& config);
CompareOutput cmd_compare(const ExperimentConfig& config);
SweepOutput cmd_sweep(const ExperimentConfig& config, const std::string& parameter, std::span<const double> values);

}  // namespace unrank
