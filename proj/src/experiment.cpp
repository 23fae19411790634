#include "unrank/experiment.hpp"

#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "unrank/influence.hpp"
#include "unrank/rng.hpp"
#include "unrank/scope.hpp"

namespace unrank {

namespace fs = std::filesystem;
using nlohmann::json;

int ExperimentConfig::effective_hops() const {
  if (p >= 0) return p;
  return backbone == "lightgcn" ? 1 : 0;
}

UnlearnConfig ExperimentConfig::unlearn_config() const {
  UnlearnConfig uc;
  uc.hops = effective_hops();
  uc.alpha = alpha;
  uc.eta = eta;
  uc.damping = damping;
  uc.negatives_per_positive = negatives;
  uc.cg.rel_tol = cg_tol;
  uc.cg.max_iters = cg_max_iters;
  uc.variant = parse_variant(variant);
  uc.sign = parse_sign(sign);
  uc.seed = seed;
  return uc;
}

TrainConfig ExperimentConfig::train_config() const {
  TrainConfig tc;
  tc.lr = lr;
  tc.batch_size = batch_size;
  tc.epochs = epochs;
  tc.weight_decay = weight_decay;
  tc.negatives_per_positive = negatives;
  tc.seed = seed;
  return tc;
}

namespace {

std::string normalize_key(std::string key) {
  for (char& c : key) {
    if (c == '-') c = '_';
  }
  return key;
}

std::vector<int> parse_ks(const std::string& value) {
  std::vector<int> ks;
  std::stringstream ss(value);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) ks.push_back(std::stoi(tok));
  }
  if (ks.empty()) throw std::invalid_argument("ks list is empty");
  return ks;
}

bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double now_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void apply_config_entry(ExperimentConfig& config, const std::string& raw_key, const std::string& value) {
  const std::string key = normalize_key(raw_key);
  if (key == "dataset") config.dataset = value;
  else if (key == "delimiter") config.delimiter = value == "\\t" ? "\t" : value;
  else if (key == "backbone") config.backbone = value;
  else if (key == "layers") config.layers = std::stoi(value);
  else if (key == "dim") config.dim = std::stoi(value);
  else if (key == "lr") config.lr = std::stod(value);
  else if (key == "batch_size") config.batch_size = std::stoi(value);
  else if (key == "epochs") config.epochs = std::stoi(value);
  else if (key == "weight_decay") config.weight_decay = std::stod(value);
  else if (key == "forget_mode") config.forget_mode = value;
  else if (key == "forget_ratio") config.forget_ratio = std::stod(value);
  else if (key == "p") config.p = std::stoi(value);
  else if (key == "alpha") config.alpha = std::stod(value);
  else if (key == "eta") config.eta = std::stod(value);
  else if (key == "damping") config.damping = std::stod(value);
  else if (key == "negatives") config.negatives = std::stoi(value);
  else if (key == "cg_tol") config.cg_tol = std::stod(value);
  else if (key == "cg_max_iters") config.cg_max_iters = std::stoi(value);
  else if (key == "variant") config.variant = value;
  else if (key == "sign") config.sign = value;
  else if (key == "ks") config.ks = parse_ks(value);
  else if (key == "seed") config.seed = std::stoull(value);
  else if (key == "out") config.out = value;
  else if (key == "dump_scope") config.dump_scope = parse_bool(value);
  else if (key == "dump_influence") config.dump_influence = parse_bool(value);
  else if (key == "dump_cg") config.dump_cg = parse_bool(value);
  else if (key == "dump_urr") config.dump_urr = parse_bool(value);
  else throw std::invalid_argument("unknown config key '" + raw_key + "'");
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  ExperimentConfig config;
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      apply_config_entry(config, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

void validate_config(const ExperimentConfig& config, bool needs_dataset) {
  if (needs_dataset) {
    if (config.dataset.empty()) throw std::invalid_argument("config: dataset path is required");
    if (!fs::exists(config.dataset)) throw std::invalid_argument("config: dataset file not found: " + config.dataset);
  }
  parse_backbone(config.backbone);
  parse_variant(config.variant);
  parse_sign(config.sign);
  if (config.forget_mode != "entity-item" && config.forget_mode != "interaction-user") {
    throw std::invalid_argument("config: forget_mode must be entity-item or interaction-user");
  }
  if (config.layers < 0) throw std::invalid_argument("config: layers must be >= 0");
  if (config.dim < 1) throw std::invalid_argument("config: dim must be >= 1");
  if (config.lr <= 0.0) throw std::invalid_argument("config: lr must be positive");
  if (config.batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (config.epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");
  if (config.weight_decay < 0.0) throw std::invalid_argument("config: weight_decay must be >= 0");
  if (config.forget_ratio < 0.0 || config.forget_ratio > 1.0) {
    throw std::invalid_argument("config: forget_ratio must be in [0,1]");
  }
  if (config.alpha < 0.0 || config.alpha > 1.0) throw std::invalid_argument("config: alpha must be in [0,1]");
  if (config.eta <= 0.0 || config.eta > 1.0) throw std::invalid_argument("config: eta must be in (0,1]");
  if (config.damping < 0.0) throw std::invalid_argument("config: damping must be >= 0");
  if (config.negatives < 1) throw std::invalid_argument("config: negatives must be >= 1");
  if (config.cg_tol <= 0.0) throw std::invalid_argument("config: cg_tol must be positive");
  for (int k : config.ks) {
    if (k < 1) throw std::invalid_argument("config: ks entries must be >= 1");
  }
}

namespace {

json config_json(const ExperimentConfig& c) {
  return json{{"dataset", c.dataset},     {"delimiter", c.delimiter},
              {"backbone", c.backbone},   {"layers", c.layers},
              {"dim", c.dim},             {"lr", c.lr},
              {"batch_size", c.batch_size}, {"epochs", c.epochs},
              {"weight_decay", c.weight_decay}, {"forget_mode", c.forget_mode},
              {"forget_ratio", c.forget_ratio}, {"p", c.effective_hops()},
              {"alpha", c.alpha},         {"eta", c.eta},
              {"damping", c.damping},     {"negatives", c.negatives},
              {"cg_tol", c.cg_tol},       {"cg_max_iters", c.cg_max_iters},
              {"variant", c.variant},     {"sign", c.sign},
              {"ks", c.ks},               {"seed", c.seed},
              {"out", c.out}};
}

json metrics_json(const RankingMetrics& m) {
  json ndcg, recall;
  for (std::size_t i = 0; i < m.ks.size(); ++i) {
    ndcg[std::to_string(m.ks[i])] = m.ndcg[i];
    recall[std::to_string(m.ks[i])] = m.recall[i];
  }
  return json{{"ndcg", ndcg}, {"recall", recall}, {"evaluated_users", m.evaluated_users}};
}

json result_json(const UnlearnResult& r) {
  return json{{"variant", variant_name(r.variant)},
              {"sign", sign_name(r.sign)},
              {"forget_edges", r.forget_edges},
              {"scope_edges", r.scope_edges},
              {"scope_entities", r.scope_entities},
              {"forget_triplets", r.forget_triplets},
              {"retained_triplets", r.retained_triplets},
              {"update_norm", r.update_norm},
              {"cg", json{{"iterations", r.cg_report.iterations},
                          {"converged", r.cg_report.converged},
                          {"final_rel_residual", r.cg_report.final_rel_residual}}},
              {"timings", json{{"scope", r.timings.scope},
                               {"influence", r.timings.influence},
                               {"triplets", r.timings.triplets},
                               {"gradient", r.timings.gradient},
                               {"cg", r.timings.cg},
                               {"apply", r.timings.apply},
                               {"total", r.timings.total}}}};
}

void write_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

InteractionDataset load_dataset(const ExperimentConfig& config) {
  RawInteractions raw = load_interactions(config.dataset, config.delimiter);
  InteractionDataset ds = build_dataset(raw, SplitRatios{}, config.seed);
  fs::create_directories(config.out);
  write_id_map(ds.user_ids, (fs::path(config.out) / "user_id_map.tsv").string());
  write_id_map(ds.item_ids, (fs::path(config.out) / "item_id_map.tsv").string());
  return ds;
}

ForgetPartition forget_partition(const InteractionDataset& ds, const ExperimentConfig& config) {
  ForgetRequest req;
  req.mode = config.forget_mode == "entity-item" ? ForgetMode::EntityItem : ForgetMode::InteractionUser;
  req.ratio = config.forget_ratio;
  req.seed = config.seed;
  return generate_forget_set(ds, req);
}

RankingMetrics metrics_on_split(const ModelParams& params, const InteractionDataset& ds,
                                const std::vector<Interaction>& split, std::span<const int> ks) {
  InteractionDataset view = ds;
  view.test = split;
  PropagationOperator prop;
  const PropagationOperator* prop_ptr = nullptr;
  if (params.backbone == Backbone::LightGCN) {
    prop = build_propagation(ds, params.layers);
    prop_ptr = &prop;
  }
  return ranking_metrics(params, prop_ptr, view, ks);
}

}  // namespace

TrainOutput cmd_train(const ExperimentConfig& config) {
  validate_config(config);
  InteractionDataset ds = load_dataset(config);

  TrainOutput out;
  TrainTrace trace;
  auto t0 = std::chrono::steady_clock::now();
  ModelParams params =
      train(ds, parse_backbone(config.backbone), config.layers, config.dim, config.train_config(), &trace);
  out.seconds = now_seconds(t0);
  out.epoch_loss = trace.epoch_loss;

  fs::path dir(config.out);
  out.checkpoint_path = (dir / "model.ckpt").string();
  save_checkpoint(params, out.checkpoint_path);

  out.loss_csv_path = (dir / "train_loss.csv").string();
  {
    std::ofstream csv(out.loss_csv_path);
    csv << "epoch,loss\n";
    for (std::size_t e = 0; e < trace.epoch_loss.size(); ++e) csv << e << ',' << trace.epoch_loss[e] << '\n';
  }
  if (!ds.val.empty()) out.val_metrics = metrics_on_split(params, ds, ds.val, config.ks);

  out.json_path = (dir / "train.json").string();
  json j{{"config", config_json(config)},
         {"seconds", out.seconds},
         {"epochs", trace.epoch_loss.size()},
         {"final_loss", trace.epoch_loss.empty() ? 0.0 : trace.epoch_loss.back()},
         {"skipped_edges", trace.skipped_edges}};
  if (!ds.val.empty()) j["val"] = metrics_json(out.val_metrics);
  write_json(j, out.json_path);
  return out;
}

UnlearnOutput cmd_unlearn(const ExperimentConfig& config, const std::string& checkpoint_path) {
  validate_config(config);
  if (!fs::exists(checkpoint_path)) throw std::invalid_argument("checkpoint not found: " + checkpoint_path);
  InteractionDataset ds = load_dataset(config);
  ModelParams params = load_checkpoint(checkpoint_path);
  if (params.n_users() != ds.n_users || params.n_items() != ds.n_items) {
    throw std::runtime_error("checkpoint shape mismatch: expected " + std::to_string(ds.n_users) + "x" +
                             std::to_string(ds.n_items) + " entities, checkpoint has " +
                             std::to_string(params.n_users()) + "x" + std::to_string(params.n_items()));
  }
  if (backbone_name(params.backbone) != config.backbone) {
    throw std::runtime_error("checkpoint backbone '" + backbone_name(params.backbone) +
                             "' does not match configured '" + config.backbone + "'");
  }

  ForgetPartition part = forget_partition(ds, config);
  if (part.forget.empty()) {
    throw std::runtime_error("forget set is empty (ratio " + std::to_string(config.forget_ratio) +
                             "); nothing to unlearn");
  }

  auto [updated, result] = unlearn(params, ds, part.forget, config.unlearn_config());

  fs::path dir(config.out);
  UnlearnOutput out;
  out.result = std::move(result);
  out.checkpoint_path = (dir / "model_unlearned.ckpt").string();
  save_checkpoint(updated, out.checkpoint_path);
  out.json_path = (dir / "unlearn.json").string();
  json j{{"config", config_json(config)}, {"result", result_json(out.result)}};
  write_json(j, out.json_path);

  if (config.dump_scope || config.dump_influence) {
    InfluencedScope scope = config.unlearn_config().variant == UnlearnVariant::NoScoping
                                ? full_train_scope(ds, part.forget)
                                : expand_scope(ds, part.forget, config.effective_hops());
    if (config.dump_scope) {
      std::ofstream f(dir / "scope.csv");
      dump_scope_csv(scope, f);
    }
    if (config.dump_influence) {
      InfluenceWeights w = config.unlearn_config().variant == UnlearnVariant::UniformWeights
                               ? uniform_influence(scope)
                               : influence_weights(scope, params, direct_entities(ds, part.forget), config.alpha);
      std::ofstream f(dir / "influence.csv");
      dump_influence_csv(scope, w, f);
    }
  }
  if (config.dump_cg) {
    std::ofstream f(dir / "cg_residuals.csv");
    dump_cg_csv(out.result.cg_report, f);
  }
  return out;
}

RetrainOutput cmd_retrain(const ExperimentConfig& config) {
  validate_config(config);
  InteractionDataset ds = load_dataset(config);
  ForgetPartition part = forget_partition(ds, config);

  RetrainOutput out;
  out.forget_edges = static_cast<std::int64_t>(part.forget.size());
  TrainTrace trace;
  auto t0 = std::chrono::steady_clock::now();
  ModelParams params = train(ds, parse_backbone(config.backbone), config.layers, config.dim, config.train_config(),
                             &trace, &part.retain);
  out.seconds = now_seconds(t0);

  fs::path dir(config.out);
  out.checkpoint_path = (dir / "model_retrain.ckpt").string();
  save_checkpoint(params, out.checkpoint_path);
  out.json_path = (dir / "retrain.json").string();
  write_json(json{{"config", config_json(config)},
                  {"seconds", out.seconds},
                  {"forget_edges", out.forget_edges},
                  {"retain_edges", part.retain.size()},
                  {"final_loss", trace.epoch_loss.empty() ? 0.0 : trace.epoch_loss.back()}},
             out.json_path);
  return out;
}

namespace {

MethodRow evaluate_method(const ExperimentConfig& config, const InteractionDataset& ds, const ModelParams& base,
                          const PropagationOperator* base_prop, const ModelParams& updated,
                          const PropagationOperator* updated_prop, std::span<const Interaction> forget,
                          const std::string& urr_dump_path = {}) {
  MethodRow row;
  row.metrics = ranking_metrics(updated, updated_prop, ds, config.ks);
  UrrReport urr = unranking_rate(base, base_prop, updated, updated_prop, ds, forget);
  row.urr = urr.urr;
  row.worsened_fraction = urr.worsened_fraction;
  if (!urr_dump_path.empty()) {
    std::ofstream f(urr_dump_path);
    dump_urr_csv(urr, f);
  }
  if (forget.size() >= 20) {
    row.mia = mia_fpr(base, base_prop, updated, updated_prop, ds, forget, config.seed);
  }
  return row;
}

void write_compare_csv(const CompareOutput& out, std::span<const int> ks, const std::string& path) {
  std::ofstream csv(path);
  csv << "method,ok";
  for (int k : ks) csv << ",ndcg@" << k;
  for (int k : ks) csv << ",recall@" << k;
  csv << ",urr,worsened_fraction,mia_fpr,mia_accuracy,seconds,speedup,update_norm,cg_iterations,scope_edges,"
         "scope_entities,error\n";
  for (const auto& row : out.rows) {
    csv << row.method << ',' << (row.ok ? 1 : 0);
    for (std::size_t i = 0; i < ks.size(); ++i) csv << ',' << (row.ok ? std::to_string(row.metrics.ndcg[i]) : "");
    for (std::size_t i = 0; i < ks.size(); ++i) csv << ',' << (row.ok ? std::to_string(row.metrics.recall[i]) : "");
    csv << ',' << (row.ok ? std::to_string(row.urr) : "") << ','
        << (row.ok ? std::to_string(row.worsened_fraction) : "") << ','
        << (row.mia ? std::to_string(row.mia->fpr) : "") << ',' << (row.mia ? std::to_string(row.mia->accuracy) : "")
        << ',' << row.seconds << ',' << (row.ok ? std::to_string(row.speedup) : "") << ',' << row.update_norm << ','
        << row.cg_iterations << ',' << row.scope_edges << ',' << row.scope_entities << ',' << row.error << '\n';
  }
}

json row_json(const MethodRow& row) {
  json j{{"method", row.method}, {"ok", row.ok},       {"seconds", row.seconds},
         {"error", row.error},   {"urr", row.urr},     {"worsened_fraction", row.worsened_fraction},
         {"speedup", row.speedup}, {"update_norm", row.update_norm}, {"cg_iterations", row.cg_iterations},
         {"scope_edges", row.scope_edges}, {"scope_entities", row.scope_entities}};
  if (row.ok) j["metrics"] = metrics_json(row.metrics);
  if (row.mia) {
    j["mia"] = json{{"fpr", row.mia->fpr},
                    {"accuracy", row.mia->accuracy},
                    {"members", row.mia->n_members},
                    {"nonmembers", row.mia->n_nonmembers}};
  }
  return j;
}

}  // namespace

CompareOutput cmd_compare(const ExperimentConfig& config) {
  validate_config(config);
  InteractionDataset ds = load_dataset(config);
  ForgetPartition part = forget_partition(ds, config);
  if (part.forget.empty()) throw std::runtime_error("compare: forget set is empty, nothing to compare");

  const Backbone backbone = parse_backbone(config.backbone);
  PropagationOperator base_prop;
  const PropagationOperator* base_prop_ptr = nullptr;

  auto t0 = std::chrono::steady_clock::now();
  ModelParams base = train(ds, backbone, config.layers, config.dim, config.train_config());
  CompareOutput out;
  out.train_seconds = now_seconds(t0);
  out.forget_edges = static_cast<std::int64_t>(part.forget.size());
  if (backbone == Backbone::LightGCN) {
    base_prop = build_propagation(ds, config.layers);
    base_prop_ptr = &base_prop;
  }
  fs::path dir(config.out);
  save_checkpoint(base, (dir / "model.ckpt").string());

  // retrain first so every row can report a speedup against it
  MethodRow retrain_row;
  retrain_row.method = "retrain";
  ModelParams retrained;
  PropagationOperator retrain_prop;
  const PropagationOperator* retrain_prop_ptr = nullptr;
  try {
    auto t1 = std::chrono::steady_clock::now();
    retrained = train(ds, backbone, config.layers, config.dim, config.train_config(), nullptr, &part.retain);
    retrain_row.seconds = now_seconds(t1);
    if (backbone == Backbone::LightGCN) {
      InteractionDataset retain_view = with_train_edges(ds, part.retain);
      retrain_prop = build_propagation(retain_view, config.layers);
      retrain_prop_ptr = &retrain_prop;
    }
    MethodRow eval = evaluate_method(config, ds, base, base_prop_ptr, retrained, retrain_prop_ptr, part.forget,
                                     config.dump_urr ? (dir / "urr_retrain.csv").string() : std::string());
    eval.method = retrain_row.method;
    eval.seconds = retrain_row.seconds;
    eval.speedup = 1.0;
    eval.ok = true;
    retrain_row = std::move(eval);
    save_checkpoint(retrained, (dir / "model_retrain.ckpt").string());
  } catch (const std::exception& e) {
    retrain_row.ok = false;
    retrain_row.error = e.what();
  }

  const std::vector<std::string> variants = {"full", "no_scoping", "uniform_weights", "bce_loss"};
  for (const std::string& v : variants) {
    MethodRow row;
    row.method = v;
    try {
      ExperimentConfig method_config = config;
      method_config.variant = v;
      auto [updated, result] = unlearn(base, ds, part.forget, method_config.unlearn_config());
      row.seconds = result.timings.total;
      row.update_norm = result.update_norm;
      row.cg_iterations = result.cg_report.iterations;
      row.scope_edges = result.scope_edges;
      row.scope_entities = result.scope_entities;
      MethodRow eval = evaluate_method(config, ds, base, base_prop_ptr, updated, base_prop_ptr, part.forget,
                                       config.dump_urr ? (dir / ("urr_" + v + ".csv")).string() : std::string());
      row.metrics = std::move(eval.metrics);
      row.urr = eval.urr;
      row.worsened_fraction = eval.worsened_fraction;
      row.mia = eval.mia;
      row.speedup = retrain_row.ok ? speedup_report(retrain_row.seconds, row.seconds) : 0.0;
      row.ok = true;
      save_checkpoint(updated, (dir / ("model_" + v + ".ckpt")).string());
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    out.rows.push_back(std::move(row));
  }
  out.rows.push_back(std::move(retrain_row));

  out.csv_path = (dir / "compare.csv").string();
  write_compare_csv(out, config.ks, out.csv_path);
  out.json_path = (dir / "compare.json").string();
  json j{{"config", config_json(config)},
         {"dataset", json{{"n_users", ds.n_users},
                          {"n_items", ds.n_items},
                          {"train", ds.train.size()},
                          {"val", ds.val.size()},
                          {"test", ds.test.size()}}},
         {"forget_edges", out.forget_edges},
         {"train_seconds", out.train_seconds}};
  for (const auto& row : out.rows) j["methods"].push_back(row_json(row));
  write_json(j, out.json_path);
  return out;
}

SweepOutput cmd_sweep(const ExperimentConfig& config, const std::string& parameter, std::span<const double> values) {
  validate_config(config);
  if (parameter != "alpha" && parameter != "eta" && parameter != "p") {
    throw std::invalid_argument("sweep: parameter must be one of alpha, eta, p");
  }
  if (values.empty()) throw std::invalid_argument("sweep: no values given");
  InteractionDataset ds = load_dataset(config);
  ForgetPartition part = forget_partition(ds, config);
  if (part.forget.empty()) throw std::runtime_error("sweep: forget set is empty");

  const Backbone backbone = parse_backbone(config.backbone);
  ModelParams base = train(ds, backbone, config.layers, config.dim, config.train_config());
  PropagationOperator base_prop;
  const PropagationOperator* base_prop_ptr = nullptr;
  if (backbone == Backbone::LightGCN) {
    base_prop = build_propagation(ds, config.layers);
    base_prop_ptr = &base_prop;
  }

  SweepOutput out;
  for (double value : values) {
    SweepRow row;
    row.value = value;
    try {
      ExperimentConfig point = config;
      if (parameter == "alpha") point.alpha = value;
      else if (parameter == "eta") point.eta = value;
      else point.p = static_cast<int>(value);
      validate_config(point);
      auto [updated, result] = unlearn(base, ds, part.forget, point.unlearn_config());
      row.seconds = result.timings.total;
      row.update_norm = result.update_norm;
      row.cg_iterations = result.cg_report.iterations;
      row.scope_edges = result.scope_edges;
      row.scope_entities = result.scope_entities;
      row.metrics = ranking_metrics(updated, base_prop_ptr, ds, config.ks);
      row.urr = unranking_rate(base, base_prop_ptr, updated, base_prop_ptr, ds, part.forget).urr;
      row.ok = true;
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    out.rows.push_back(std::move(row));
  }

  fs::path dir(config.out);
  out.csv_path = (dir / ("sweep_" + parameter + ".csv")).string();
  std::ofstream csv(out.csv_path);
  csv << parameter << ",ok";
  for (int k : config.ks) csv << ",ndcg@" << k;
  for (int k : config.ks) csv << ",recall@" << k;
  csv << ",urr,update_norm,cg_iterations,scope_edges,scope_entities,seconds,error\n";
  for (const auto& row : out.rows) {
    csv << row.value << ',' << (row.ok ? 1 : 0);
    for (std::size_t i = 0; i < config.ks.size(); ++i) {
      csv << ',' << (row.ok ? std::to_string(row.metrics.ndcg[i]) : "");
    }
    for (std::size_t i = 0; i < config.ks.size(); ++i) {
      csv << ',' << (row.ok ? std::to_string(row.metrics.recall[i]) : "");
    }
    csv << ',' << (row.ok ? std::to_string(row.urr) : "") << ',' << row.update_norm << ',' << row.cg_iterations << ','
        << row.scope_edges << ',' << row.scope_entities << ',' << row.seconds << ',' << row.error << '\n';
  }
  return out;
}

}  // namespace unrank
