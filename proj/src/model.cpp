#include "unrank/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "unrank/rng.hpp"

namespace unrank {

std::string backbone_name(Backbone b) { return b == Backbone::MF ? "mf" : "lightgcn"; }

Backbone parse_backbone(const std::string& name) {
  if (name == "mf") return Backbone::MF;
  if (name == "lightgcn") return Backbone::LightGCN;
  throw std::invalid_argument("unknown backbone '" + name + "' (expected mf or lightgcn)");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid_clamped(double x) {
  x = std::clamp(x, -30.0, 30.0);
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

ModelParams init_params(std::int32_t n_users, std::int32_t n_items, std::int64_t dim, std::uint64_t seed,
                        Backbone backbone, int layers) {
  if (dim < 1) throw std::invalid_argument("init_params: dim must be >= 1");
  ModelParams p;
  p.backbone = backbone;
  p.layers = layers;
  p.user_emb = Matrix(n_users, dim);
  p.item_emb = Matrix(n_items, dim);
  const double stddev = 0.1 / std::sqrt(static_cast<double>(dim));
  Rng rng(seed);
  for (double& v : p.user_emb.data) v = static_cast<double>(static_cast<float>(rng.normal() * stddev));
  for (double& v : p.item_emb.data) v = static_cast<double>(static_cast<float>(rng.normal() * stddev));
  return p;
}

Matrix joint_table(const ModelParams& params) {
  Matrix joint(params.user_emb.rows + params.item_emb.rows, params.dim());
  std::copy(params.user_emb.data.begin(), params.user_emb.data.end(), joint.data.begin());
  std::copy(params.item_emb.data.begin(), params.item_emb.data.end(),
            joint.data.begin() + params.user_emb.data.size());
  return joint;
}

void split_joint(const Matrix& joint, std::int32_t n_users, Matrix& users, Matrix& items) {
  users = Matrix(n_users, joint.cols);
  items = Matrix(joint.rows - n_users, joint.cols);
  std::copy(joint.data.begin(), joint.data.begin() + users.data.size(), users.data.begin());
  std::copy(joint.data.begin() + users.data.size(), joint.data.end(), items.data.begin());
}

EffectiveEmbeddings effective_embeddings(const ModelParams& params, const PropagationOperator* prop) {
  if (params.backbone == Backbone::MF) {
    return {params.user_emb, params.item_emb};
  }
  if (prop == nullptr) throw std::invalid_argument("effective_embeddings: LightGCN requires a propagation operator");
  if (prop->n_users != params.n_users() || prop->n_items != params.n_items()) {
    throw std::invalid_argument("effective_embeddings: operator/table shape mismatch");
  }
  Matrix propagated = prop->apply(joint_table(params));
  EffectiveEmbeddings eff;
  split_joint(propagated, params.n_users(), eff.users, eff.items);
  return eff;
}

double score(const ModelParams& params, const PropagationOperator* prop, std::int32_t user, std::int32_t item) {
  if (user < 0 || user >= params.n_users() || item < 0 || item >= params.n_items()) {
    throw std::out_of_range("score: user or item index out of range");
  }
  EffectiveEmbeddings eff = effective_embeddings(params, prop);
  return dot(eff.users.row_span(user), eff.items.row_span(item));
}

std::vector<double> score_all(const EffectiveEmbeddings& eff, std::int32_t user) {
  std::vector<double> scores(eff.items.rows);
  for (std::int64_t i = 0; i < eff.items.rows; ++i) {
    scores[i] = dot(eff.users.row_span(user), eff.items.row_span(i));
  }
  return scores;
}

std::vector<std::int32_t> order_items(std::span<const double> scores) {
  std::vector<std::int32_t> order(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) order[i] = static_cast<std::int32_t>(i);
  std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return order;
}

std::vector<std::int32_t> rank_items(const ModelParams& params, const PropagationOperator* prop,
                                     const InteractionDataset& ds, std::int32_t user, bool exclude_train) {
  if (user < 0 || user >= params.n_users()) throw std::out_of_range("rank_items: user index out of range");
  EffectiveEmbeddings eff = effective_embeddings(params, prop);
  std::vector<double> scores = score_all(eff, user);
  std::vector<std::int32_t> order = order_items(scores);
  if (!exclude_train) return order;
  std::vector<char> is_train(params.n_items(), 0);
  for (std::int64_t p = ds.user_adj.offsets[user]; p < ds.user_adj.offsets[user + 1]; ++p) {
    is_train[ds.user_adj.neighbors[p]] = 1;
  }
  std::vector<std::int32_t> filtered;
  filtered.reserve(order.size());
  for (std::int32_t i : order) {
    if (!is_train[i]) filtered.push_back(i);
  }
  return filtered;
}

TripletSample sample_triplets(const InteractionDataset& ds, std::span<const Interaction> edges, int m,
                              std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("sample_triplets: m must be >= 1");
  TripletSample out;
  out.triplets.reserve(edges.size() * m);
  for (const auto& e : edges) {
    std::int64_t edge_id = ds.train_edge_id(e.user, e.item);
    if (edge_id < 0) throw std::invalid_argument("sample_triplets: edge is not a train edge");
    const std::int64_t user_deg = ds.user_adj.degree(e.user);
    if (user_deg >= ds.n_items) {  // negative pool is empty
      ++out.skipped_edges;
      continue;
    }
    Rng rng(stream_seed(seed, "neg", static_cast<std::uint64_t>(edge_id)));
    auto row_begin = ds.user_adj.neighbors.begin() + ds.user_adj.offsets[e.user];
    auto row_end = ds.user_adj.neighbors.begin() + ds.user_adj.offsets[e.user + 1];
    if (user_deg * 2 < ds.n_items) {
      for (int k = 0; k < m; ++k) {
        std::int32_t j;
        do {
          j = static_cast<std::int32_t>(rng.uniform(ds.n_items));
        } while (std::binary_search(row_begin, row_end, j));
        out.triplets.push_back({e.user, e.item, j});
      }
    } else {
      // dense user: enumerate the complement instead of rejecting
      std::vector<std::int32_t> pool;
      pool.reserve(ds.n_items - user_deg);
      for (std::int32_t j = 0; j < ds.n_items; ++j) {
        if (!std::binary_search(row_begin, row_end, j)) pool.push_back(j);
      }
      for (int k = 0; k < m; ++k) {
        out.triplets.push_back({e.user, e.item, pool[rng.uniform(pool.size())]});
      }
    }
  }
  return out;
}

namespace {

double triplet_weight(std::span<const double> weights, std::size_t t) {
  return weights.empty() ? 1.0 : weights[t];
}

}  // namespace

double bpr_loss(const ModelParams& params, const PropagationOperator* prop, std::span<const Triplet> triplets,
                std::span<const double> weights) {
  if (!weights.empty() && weights.size() != triplets.size()) {
    throw std::invalid_argument("bpr_loss: weights must align with triplets");
  }
  EffectiveEmbeddings eff = effective_embeddings(params, prop);
  double loss = 0.0;
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    const auto& tr = triplets[t];
    double diff = dot(eff.users.row_span(tr.user), eff.items.row_span(tr.pos)) -
                  dot(eff.users.row_span(tr.user), eff.items.row_span(tr.neg));
    loss += -triplet_weight(weights, t) * log_sigmoid_clamped(diff);
  }
  return loss;
}

// Accumulates d(loss)/d(effective rows) for one triplet into the joint
// cotangent buffer.
static void accumulate_bpr_cotangent(const EffectiveEmbeddings& eff, const Triplet& tr, double weight, Matrix& cot,
                                     std::int32_t n_users) {
  const std::int64_t d = eff.users.cols;
  const double* pu = eff.users.row(tr.user);
  const double* qi = eff.items.row(tr.pos);
  const double* qj = eff.items.row(tr.neg);
  double x = 0.0;
  for (std::int64_t k = 0; k < d; ++k) x += pu[k] * (qi[k] - qj[k]);
  const double coeff = -weight * (1.0 - sigmoid(x));  // d/dx of -w ln sigma(x)
  double* cu = cot.row(tr.user);
  double* ci = cot.row(n_users + tr.pos);
  double* cj = cot.row(n_users + tr.neg);
  for (std::int64_t k = 0; k < d; ++k) {
    const double r = qi[k] - qj[k];
    cu[k] += coeff * r;
    ci[k] += coeff * pu[k];
    cj[k] -= coeff * pu[k];
  }
}

std::pair<Matrix, Matrix> bpr_gradient(const ModelParams& params, const PropagationOperator* prop,
                                       std::span<const Triplet> triplets, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != triplets.size()) {
    throw std::invalid_argument("bpr_gradient: weights must align with triplets");
  }
  EffectiveEmbeddings eff = effective_embeddings(params, prop);
  const std::int32_t n_users = params.n_users();
  Matrix cot(params.n_users() + params.n_items(), params.dim());
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    accumulate_bpr_cotangent(eff, triplets[t], triplet_weight(weights, t), cot, n_users);
  }
  if (params.backbone == Backbone::LightGCN) {
    cot = prop->apply(cot);  // self-adjoint pullback
  }
  std::pair<Matrix, Matrix> grad;
  split_joint(cot, n_users, grad.first, grad.second);
  return grad;
}

ModelParams train(const InteractionDataset& ds, Backbone backbone, int layers, std::int64_t dim,
                  const TrainConfig& config, TrainTrace* trace, const std::vector<Interaction>* edges) {
  if (config.lr <= 0.0) throw std::invalid_argument("train: learning rate must be positive");
  if (config.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");

  const std::vector<Interaction>& train_edges = edges ? *edges : ds.train;
  ModelParams params = init_params(ds.n_users, ds.n_items, dim, stream_seed(config.seed, "init"), backbone, layers);
  PropagationOperator prop;
  const PropagationOperator* prop_ptr = nullptr;
  if (backbone == Backbone::LightGCN) {
    if (edges) {
      InteractionDataset view = with_train_edges(ds, *edges);
      prop = build_propagation(view, layers);
    } else {
      prop = build_propagation(ds, layers);
    }
    prop_ptr = &prop;
  }

  const std::int32_t n_nodes = ds.node_count();
  Matrix adam_m(n_nodes, dim), adam_v(n_nodes, dim);
  Matrix cot(n_nodes, dim);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::int64_t step = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    TripletSample sample = sample_triplets(ds, train_edges, config.negatives_per_positive,
                                           stream_seed(config.seed, "train-neg", epoch));
    if (trace) trace->skipped_edges += sample.skipped_edges;
    Rng order_rng(stream_seed(config.seed, "train-order", epoch));
    order_rng.shuffle(sample.triplets);

    double epoch_loss_sum = 0.0;
    const std::int64_t n_triplets = static_cast<std::int64_t>(sample.triplets.size());
    for (std::int64_t start = 0; start < n_triplets; start += config.batch_size) {
      const std::int64_t stop = std::min<std::int64_t>(start + config.batch_size, n_triplets);
      const double inv_batch = 1.0 / static_cast<double>(stop - start);

      EffectiveEmbeddings eff = effective_embeddings(params, prop_ptr);
      cot.set_zero();
      double batch_loss = 0.0;
      for (std::int64_t t = start; t < stop; ++t) {
        const Triplet& tr = sample.triplets[t];
        double diff = dot(eff.users.row_span(tr.user), eff.items.row_span(tr.pos)) -
                      dot(eff.users.row_span(tr.user), eff.items.row_span(tr.neg));
        batch_loss += -log_sigmoid_clamped(diff);
        accumulate_bpr_cotangent(eff, tr, inv_batch, cot, ds.n_users);
      }
      epoch_loss_sum += batch_loss;
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train: loss diverged (non-finite) at epoch " + std::to_string(epoch));
      }
      if (backbone == Backbone::LightGCN) cot = prop_ptr->apply(cot);

      ++step;
      const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::int32_t node = 0; node < n_nodes; ++node) {
        const double* g = cot.row(node);
        bool touched = false;
        for (std::int64_t k = 0; k < dim; ++k) {
          if (g[k] != 0.0) {
            touched = true;
            break;
          }
        }
        if (!touched) continue;
        double* theta = node < ds.n_users ? params.user_emb.row(node) : params.item_emb.row(node - ds.n_users);
        double* m = adam_m.row(node);
        double* v = adam_v.row(node);
        for (std::int64_t k = 0; k < dim; ++k) {
          m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
          v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
          const double mhat = m[k] / bias1;
          const double vhat = v[k] / bias2;
          theta[k] -= config.lr * (mhat / (std::sqrt(vhat) + eps) + config.weight_decay * theta[k]);
        }
      }
    }
    if (trace) {
      trace->positive_edge_visits += n_triplets;
      trace->epoch_loss.push_back(n_triplets > 0 ? epoch_loss_sum / static_cast<double>(n_triplets) : 0.0);
    }
  }
  return params;
}

namespace {

void write_f32_le(std::ofstream& out, double value) {
  auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                   static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
  out.write(bytes, 4);
}

double read_f32_le(std::ifstream& in, const std::string& path) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw std::runtime_error("load_checkpoint: " + path + " is truncated (embedding payload)");
  }
  std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
                       (static_cast<std::uint32_t>(bytes[2]) << 16) | (static_cast<std::uint32_t>(bytes[3]) << 24);
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot write " + path);
  out << "L2UR1 " << backbone_name(params.backbone) << ' ' << params.layers << ' ' << params.n_users() << ' '
      << params.n_items() << ' ' << params.dim() << '\n';
  for (double v : params.user_emb.data) write_f32_le(out, v);
  for (double v : params.item_emb.data) write_f32_le(out, v);
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("load_checkpoint: " + path + " is truncated (header)");
  std::istringstream hs(header);
  std::string magic, backbone;
  std::int64_t layers = -1, n_users = -1, n_items = -1, dim = -1;
  hs >> magic >> backbone >> layers >> n_users >> n_items >> dim;
  if (magic != "L2UR1") throw std::runtime_error("load_checkpoint: bad magic string '" + magic + "' in " + path);
  if (hs.fail()) throw std::runtime_error("load_checkpoint: malformed header fields in " + path);
  ModelParams params;
  params.backbone = parse_backbone(backbone);
  if (layers < 0) throw std::runtime_error("load_checkpoint: invalid layers field in " + path);
  if (n_users < 1) throw std::runtime_error("load_checkpoint: invalid n_users field in " + path);
  if (n_items < 1) throw std::runtime_error("load_checkpoint: invalid n_items field in " + path);
  if (dim < 1) throw std::runtime_error("load_checkpoint: invalid dim field in " + path);
  params.layers = static_cast<int>(layers);
  params.user_emb = Matrix(n_users, dim);
  params.item_emb = Matrix(n_items, dim);
  for (double& v : params.user_emb.data) v = read_f32_le(in, path);
  for (double& v : params.item_emb.data) v = read_f32_le(in, path);
  char extra;
  if (in.read(&extra, 1)) throw std::runtime_error("load_checkpoint: trailing bytes in " + path);
  return params;
}

}  // namespace unrank
