#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "unrank/experiment.hpp"

namespace {

using unrank::ExperimentConfig;

// Every value-bearing flag; applied onto the config only when actually set,
// so config-file values survive unless overridden.
struct FlagValues {
  std::string config_path, dataset, delimiter, backbone, forget_mode, variant, sign, ks, out;
  int layers = 0, dim = 0, epochs = 0, batch_size = 0, p = 0, negatives = 0, cg_max_iters = 0;
  double lr = 0, weight_decay = 0, forget_ratio = 0, alpha = 0, eta = 0, damping = 0, cg_tol = 0;
  std::uint64_t seed = 0;
  bool dump_scope = false, dump_influence = false, dump_cg = false, dump_urr = false;
};

void add_common_options(CLI::App* cmd, FlagValues& fv) {
  cmd->add_option("--config", fv.config_path, "key = value config file; flags override file values");
  cmd->add_option("--dataset", fv.dataset, "interaction file (user<delim>item[<delim>rating[<delim>timestamp]])");
  cmd->add_option("--delimiter", fv.delimiter, "field delimiter, \\t by default; use :: for ml-1m style files");
  cmd->add_option("--backbone", fv.backbone, "mf or lightgcn");
  cmd->add_option("--layers", fv.layers, "propagation layers K (lightgcn)");
  cmd->add_option("--dim", fv.dim, "embedding dimension");
  cmd->add_option("--epochs", fv.epochs, "training epochs");
  cmd->add_option("--lr", fv.lr, "learning rate");
  cmd->add_option("--batch-size", fv.batch_size, "minibatch size");
  cmd->add_option("--weight-decay", fv.weight_decay, "decoupled weight decay");
  cmd->add_option("--forget-mode", fv.forget_mode, "entity-item or interaction-user");
  cmd->add_option("--forget-ratio", fv.forget_ratio, "fraction of items/users to forget");
  cmd->add_option("--p", fv.p, "influence scope hops (default: 1 for lightgcn, 0 for mf)");
  cmd->add_option("--alpha", fv.alpha, "structural/semantic influence balance");
  cmd->add_option("--eta", fv.eta, "update step scale in (0,1]");
  cmd->add_option("--damping", fv.damping, "Hessian damping lambda");
  cmd->add_option("--negatives", fv.negatives, "negatives per positive");
  cmd->add_option("--cg-tol", fv.cg_tol, "CG relative residual tolerance");
  cmd->add_option("--cg-max-iters", fv.cg_max_iters, "CG iteration cap (-1: min(n,1000))");
  cmd->add_option("--variant", fv.variant, "full, no_scoping, uniform_weights or bce_loss");
  cmd->add_option("--sign", fv.sign, "update sign: flipped (default) or paper");
  cmd->add_option("--ks", fv.ks, "comma-separated cutoffs for ndcg/recall");
  cmd->add_option("--seed", fv.seed, "root seed for every sampled decision");
  cmd->add_option("--out", fv.out, "output directory");
  cmd->add_flag("--dump-scope", fv.dump_scope, "write scope.csv (edge, hop)");
  cmd->add_flag("--dump-influence", fv.dump_influence, "write influence.csv per entity");
  cmd->add_flag("--dump-cg", fv.dump_cg, "write cg_residuals.csv");
  cmd->add_flag("--dump-urr", fv.dump_urr, "write per-pair rank table");
}

ExperimentConfig build_config(const CLI::App* cmd, const FlagValues& fv) {
  ExperimentConfig config;
  if (cmd->count("--config")) config = unrank::load_config_file(fv.config_path);
  auto set = [&](const char* flag, auto apply) {
    if (cmd->count(flag)) apply();
  };
  set("--dataset", [&] { config.dataset = fv.dataset; });
  set("--delimiter", [&] { unrank::apply_config_entry(config, "delimiter", fv.delimiter); });
  set("--backbone", [&] { config.backbone = fv.backbone; });
  set("--layers", [&] { config.layers = fv.layers; });
  set("--dim", [&] { config.dim = fv.dim; });
  set("--epochs", [&] { config.epochs = fv.epochs; });
  set("--lr", [&] { config.lr = fv.lr; });
  set("--batch-size", [&] { config.batch_size = fv.batch_size; });
  set("--weight-decay", [&] { config.weight_decay = fv.weight_decay; });
  set("--forget-mode", [&] { config.forget_mode = fv.forget_mode; });
  set("--forget-ratio", [&] { config.forget_ratio = fv.forget_ratio; });
  set("--p", [&] { config.p = fv.p; });
  set("--alpha", [&] { config.alpha = fv.alpha; });
  set("--eta", [&] { config.eta = fv.eta; });
  set("--damping", [&] { config.damping = fv.damping; });
  set("--negatives", [&] { config.negatives = fv.negatives; });
  set("--cg-tol", [&] { config.cg_tol = fv.cg_tol; });
  set("--cg-max-iters", [&] { config.cg_max_iters = fv.cg_max_iters; });
  set("--variant", [&] { config.variant = fv.variant; });
  set("--sign", [&] { config.sign = fv.sign; });
  set("--ks", [&] { unrank::apply_config_entry(config, "ks", fv.ks); });
  set("--seed", [&] { config.seed = fv.seed; });
  set("--out", [&] { config.out = fv.out; });
  if (cmd->count("--dump-scope")) config.dump_scope = true;
  if (cmd->count("--dump-influence")) config.dump_influence = true;
  if (cmd->count("--dump-cg")) config.dump_cg = true;
  if (cmd->count("--dump-urr")) config.dump_urr = true;
  return config;
}

void print_metrics(const unrank::RankingMetrics& m, const char* label) {
  std::printf("%s:", label);
  for (std::size_t i = 0; i < m.ks.size(); ++i) {
    std::printf(" ndcg@%d=%.4f recall@%d=%.4f", m.ks[i], m.ndcg[i], m.ks[i], m.recall[i]);
  }
  std::printf(" (%lld users)\n", static_cast<long long>(m.evaluated_users));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embedding-based recommender lab: train, unlearn by rank demotion, evaluate against retraining"};
  app.require_subcommand(1);

  FlagValues fv_train, fv_unlearn, fv_retrain, fv_compare, fv_sweep;
  auto* train_cmd = app.add_subcommand("train", "train a recommender and write a checkpoint");
  add_common_options(train_cmd, fv_train);

  auto* unlearn_cmd = app.add_subcommand("unlearn", "apply the scoped influence update to a checkpoint");
  add_common_options(unlearn_cmd, fv_unlearn);
  std::string checkpoint;
  unlearn_cmd->add_option("--checkpoint", checkpoint, "trained model checkpoint")->required();

  auto* retrain_cmd = app.add_subcommand("retrain", "train from scratch on the retain set");
  add_common_options(retrain_cmd, fv_retrain);

  auto* compare_cmd = app.add_subcommand("compare", "run every unlearning variant plus retrain and tabulate");
  add_common_options(compare_cmd, fv_compare);

  auto* sweep_cmd = app.add_subcommand("sweep", "unlearn across a parameter grid and tabulate");
  add_common_options(sweep_cmd, fv_sweep);
  std::string sweep_param;
  std::vector<double> sweep_values;
  sweep_cmd->add_option("--param", sweep_param, "alpha, eta or p")->required();
  sweep_cmd->add_option("--values", sweep_values, "values to sweep")->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      auto out = unrank::cmd_train(build_config(train_cmd, fv_train));
      std::printf("checkpoint: %s\nloss trace: %s\n", out.checkpoint_path.c_str(), out.loss_csv_path.c_str());
      std::printf("train time: %.3f s\n", out.seconds);
      if (!out.val_metrics.ks.empty()) print_metrics(out.val_metrics, "val");
    } else if (unlearn_cmd->parsed()) {
      auto out = unrank::cmd_unlearn(build_config(unlearn_cmd, fv_unlearn), checkpoint);
      std::printf("unlearned checkpoint: %s\nresult: %s\n", out.checkpoint_path.c_str(), out.json_path.c_str());
      std::printf("scope: %lld edges, %lld entities; cg iterations: %d; total: %.3f s\n",
                  static_cast<long long>(out.result.scope_edges), static_cast<long long>(out.result.scope_entities),
                  out.result.cg_report.iterations, out.result.timings.total);
    } else if (retrain_cmd->parsed()) {
      auto out = unrank::cmd_retrain(build_config(retrain_cmd, fv_retrain));
      std::printf("retrained checkpoint: %s\nretrain time: %.3f s (forgot %lld edges)\n", out.checkpoint_path.c_str(),
                  out.seconds, static_cast<long long>(out.forget_edges));
    } else if (compare_cmd->parsed()) {
      auto out = unrank::cmd_compare(build_config(compare_cmd, fv_compare));
      std::printf("comparison table: %s\n", out.csv_path.c_str());
      for (const auto& row : out.rows) {
        if (row.ok) {
          std::printf("  %-16s urr=%8.3f ndcg@%d=%.4f time=%.3fs speedup=%.1fx\n", row.method.c_str(), row.urr,
                      out.rows.front().metrics.ks.empty() ? 10 : out.rows.front().metrics.ks[1],
                      row.metrics.ndcg.size() > 1 ? row.metrics.ndcg[1] : 0.0, row.seconds, row.speedup);
        } else {
          std::printf("  %-16s FAILED: %s\n", row.method.c_str(), row.error.c_str());
        }
      }
    } else if (sweep_cmd->parsed()) {
      auto out = unrank::cmd_sweep(build_config(sweep_cmd, fv_sweep), sweep_param, sweep_values);
      std::printf("sweep table: %s (%zu rows)\n", out.csv_path.c_str(), out.rows.size());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
