#include "unrank/unlearn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <unordered_set>

#include "unrank/rng.hpp"

namespace unrank {

std::string variant_name(UnlearnVariant v) {
  switch (v) {
    case UnlearnVariant::Full: return "full";
    case UnlearnVariant::NoScoping: return "no_scoping";
    case UnlearnVariant::UniformWeights: return "uniform_weights";
    case UnlearnVariant::BceLoss: return "bce_loss";
  }
  return "full";
}

UnlearnVariant parse_variant(const std::string& name) {
  if (name == "full") return UnlearnVariant::Full;
  if (name == "no_scoping") return UnlearnVariant::NoScoping;
  if (name == "uniform_weights") return UnlearnVariant::UniformWeights;
  if (name == "bce_loss") return UnlearnVariant::BceLoss;
  throw std::invalid_argument("unknown variant '" + name + "'");
}

std::string sign_name(UpdateSign s) { return s == UpdateSign::Paper ? "paper" : "flipped"; }

UpdateSign parse_sign(const std::string& name) {
  if (name == "paper") return UpdateSign::Paper;
  if (name == "flipped") return UpdateSign::Flipped;
  throw std::invalid_argument("unknown update sign '" + name + "'");
}

double ScopedParameterVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

ScopeTriplets build_scope_triplets(const InteractionDataset& ds, const InfluencedScope& scope,
                                   std::span<const Interaction> forget, int m, std::uint64_t seed) {
  std::unordered_set<std::int64_t> forget_ids;
  for (const auto& e : forget) {
    std::int64_t id = ds.train_edge_id(e.user, e.item);
    if (id < 0) throw std::invalid_argument("build_scope_triplets: forget edge is not a train edge");
    forget_ids.insert(id);
  }
  std::vector<Interaction> scope_edges;
  scope_edges.reserve(scope.edges.size());
  for (const auto& se : scope.edges) scope_edges.push_back(se.edge);

  TripletSample sample = sample_triplets(ds, scope_edges, m, seed);
  ScopeTriplets out;
  out.skipped_edges = sample.skipped_edges;
  for (const auto& t : sample.triplets) {
    std::int64_t id = ds.train_edge_id(t.user, t.pos);
    (forget_ids.count(id) ? out.forget : out.retained).push_back(t);
  }
  return out;
}

std::vector<double> triplet_weights(const InfluenceWeights& w, std::span<const Triplet> triplets,
                                    std::int32_t n_users) {
  std::vector<double> out(triplets.size());
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    out[t] = 0.5 * (w.weight_of(triplets[t].user) + w.weight_of(n_users + triplets[t].pos));
  }
  return out;
}

ScopedParameterVector gather_rows(const Matrix& joint, std::span<const std::int32_t> entities) {
  ScopedParameterVector v;
  v.entities.assign(entities.begin(), entities.end());
  v.dim = joint.cols;
  v.values.resize(entities.size() * joint.cols);
  for (std::size_t k = 0; k < entities.size(); ++k) {
    const double* src = joint.row(entities[k]);
    std::copy(src, src + joint.cols, v.values.begin() + k * joint.cols);
  }
  return v;
}

void scatter_rows(const ScopedParameterVector& v, Matrix& joint) {
  joint.set_zero();
  for (std::size_t k = 0; k < v.entities.size(); ++k) {
    std::copy(v.values.begin() + k * v.dim, v.values.begin() + (k + 1) * v.dim, joint.row(v.entities[k]));
  }
}

void add_scaled_rows(ModelParams& params, const ScopedParameterVector& v, double scale) {
  const std::int32_t n_users = params.n_users();
  for (std::size_t k = 0; k < v.entities.size(); ++k) {
    const std::int32_t node = v.entities[k];
    double* dst = node < n_users ? params.user_emb.row(node) : params.item_emb.row(node - n_users);
    const double* src = v.values.data() + k * v.dim;
    for (std::int64_t j = 0; j < v.dim; ++j) dst[j] += scale * src[j];
  }
}

ScopedParameterVector forget_gradient(const ModelParams& params, const PropagationOperator* prop,
                                      std::span<const std::int32_t> entities, std::span<const Triplet> triplets,
                                      std::span<const double> weights) {
  auto [gu, gi] = bpr_gradient(params, prop, triplets, weights);
  Matrix joint(gu.rows + gi.rows, params.dim());
  std::copy(gu.data.begin(), gu.data.end(), joint.data.begin());
  std::copy(gi.data.begin(), gi.data.end(), joint.data.begin() + gu.data.size());
  return gather_rows(joint, entities);
}

namespace {

// Shared machinery for the BPR and BCE Hessian-vector products: precomputed
// effective tables, per-sample curvature coefficients and reusable joint
// buffers. Row reads come from the effective coordinates; contributions to
// unscoped rows are dropped by the final gather.
struct HvpState {
  const ModelParams* params;
  const PropagationOperator* prop;
  std::vector<std::int32_t> entities;
  double damping;
  Matrix effective;  // joint N x d
  Matrix direction;  // scratch: scattered input, propagated for LightGCN
  Matrix acc;        // scratch: accumulated H * direction

  std::vector<Triplet> triplets;
  std::vector<LabeledPair> pairs;       // BCE mode when nonempty
  std::vector<double> coeff_curv;       // w * s * (1-s)
  std::vector<double> coeff_grad;       // BPR: -w(1-s); BCE: w(s-y)

  HvpState(const ModelParams& p, const PropagationOperator* pr, std::span<const std::int32_t> ents, double lambda)
      : params(&p), prop(pr), entities(ents.begin(), ents.end()), damping(lambda) {
    EffectiveEmbeddings eff = effective_embeddings(p, pr);
    effective = Matrix(eff.users.rows + eff.items.rows, p.dim());
    std::copy(eff.users.data.begin(), eff.users.data.end(), effective.data.begin());
    std::copy(eff.items.data.begin(), eff.items.data.end(), effective.data.begin() + eff.users.data.size());
    direction = Matrix(effective.rows, effective.cols);
    acc = Matrix(effective.rows, effective.cols);
  }

  void prepare_bpr(std::vector<Triplet> ts, std::vector<double> ws) {
    triplets = std::move(ts);
    const std::int32_t n_users = params->n_users();
    coeff_curv.resize(triplets.size());
    coeff_grad.resize(triplets.size());
    for (std::size_t t = 0; t < triplets.size(); ++t) {
      const auto& tr = triplets[t];
      const double* pu = effective.row(tr.user);
      const double* qi = effective.row(n_users + tr.pos);
      const double* qj = effective.row(n_users + tr.neg);
      double x = 0.0;
      for (std::int64_t k = 0; k < effective.cols; ++k) x += pu[k] * (qi[k] - qj[k]);
      const double s = sigmoid(x);
      const double w = ws.empty() ? 1.0 : ws[t];
      coeff_curv[t] = w * s * (1.0 - s);
      coeff_grad[t] = -w * (1.0 - s);
    }
  }

  void prepare_bce(std::vector<LabeledPair> ps) {
    pairs = std::move(ps);
    const std::int32_t n_users = params->n_users();
    coeff_curv.resize(pairs.size());
    coeff_grad.resize(pairs.size());
    for (std::size_t t = 0; t < pairs.size(); ++t) {
      const auto& pr_ = pairs[t];
      double x = dot(effective.row_span(pr_.user), effective.row_span(n_users + pr_.item));
      const double s = sigmoid(x);
      coeff_curv[t] = pr_.weight * s * (1.0 - s);
      coeff_grad[t] = pr_.weight * (s - pr_.label);
    }
  }

  void apply(std::span<const double> in, std::span<double> out) {
    const std::int64_t d = effective.cols;
    const std::int32_t n_users = params->n_users();

    direction.set_zero();
    for (std::size_t k = 0; k < entities.size(); ++k) {
      std::copy(in.begin() + k * d, in.begin() + (k + 1) * d, direction.row(entities[k]));
    }
    if (params->backbone == Backbone::LightGCN) direction = prop->apply(direction);

    acc.set_zero();
    if (pairs.empty()) {
      for (std::size_t t = 0; t < triplets.size(); ++t) {
        const auto& tr = triplets[t];
        const double* pu = effective.row(tr.user);
        const double* qi = effective.row(n_users + tr.pos);
        const double* qj = effective.row(n_users + tr.neg);
        const double* vu = direction.row(tr.user);
        const double* vi = direction.row(n_users + tr.pos);
        const double* vj = direction.row(n_users + tr.neg);
        double dx = 0.0;
        for (std::int64_t k = 0; k < d; ++k) dx += vu[k] * (qi[k] - qj[k]) + pu[k] * (vi[k] - vj[k]);
        const double c2dx = coeff_curv[t] * dx;
        const double c1 = coeff_grad[t];
        double* au = acc.row(tr.user);
        double* ai = acc.row(n_users + tr.pos);
        double* aj = acc.row(n_users + tr.neg);
        for (std::int64_t k = 0; k < d; ++k) {
          au[k] += c2dx * (qi[k] - qj[k]) + c1 * (vi[k] - vj[k]);
          ai[k] += c2dx * pu[k] + c1 * vu[k];
          aj[k] -= c2dx * pu[k] + c1 * vu[k];
        }
      }
    } else {
      for (std::size_t t = 0; t < pairs.size(); ++t) {
        const auto& pr_ = pairs[t];
        const double* eu = effective.row(pr_.user);
        const double* ei = effective.row(n_users + pr_.item);
        const double* vu = direction.row(pr_.user);
        const double* vi = direction.row(n_users + pr_.item);
        double dx = 0.0;
        for (std::int64_t k = 0; k < d; ++k) dx += vu[k] * ei[k] + eu[k] * vi[k];
        const double c2dx = coeff_curv[t] * dx;
        const double c1 = coeff_grad[t];
        double* au = acc.row(pr_.user);
        double* ai = acc.row(n_users + pr_.item);
        for (std::int64_t k = 0; k < d; ++k) {
          au[k] += c2dx * ei[k] + c1 * vi[k];
          ai[k] += c2dx * eu[k] + c1 * vu[k];
        }
      }
    }
    if (params->backbone == Backbone::LightGCN) acc = prop->apply(acc);

    for (std::size_t k = 0; k < entities.size(); ++k) {
      const double* src = acc.row(entities[k]);
      for (std::int64_t j = 0; j < d; ++j) out[k * d + j] = src[j] + damping * in[k * d + j];
    }
  }
};

LinearOperator wrap_operator(std::shared_ptr<HvpState> state) {
  LinearOperator op;
  op.dim = static_cast<std::int64_t>(state->entities.size()) * state->effective.cols;
  op.apply = [state](std::span<const double> in, std::span<double> out) { state->apply(in, out); };
  return op;
}

}  // namespace

LinearOperator hessian_operator(const ModelParams& params, const PropagationOperator* prop,
                                std::span<const std::int32_t> entities, std::vector<Triplet> triplets,
                                std::vector<double> weights, double damping) {
  if (damping < 0.0) throw std::invalid_argument("hessian_operator: damping must be >= 0");
  auto state = std::make_shared<HvpState>(params, prop, entities, damping);
  state->prepare_bpr(std::move(triplets), std::move(weights));
  return wrap_operator(std::move(state));
}

std::vector<LabeledPair> bce_pairs_from_triplets(std::span<const Triplet> triplets, const InfluenceWeights& w,
                                                 std::int32_t n_users) {
  std::vector<LabeledPair> pairs;
  pairs.reserve(triplets.size() * 2);
  for (const auto& t : triplets) {
    const double wu = w.weight_of(t.user);
    pairs.push_back({t.user, t.pos, 1.0, 0.5 * (wu + w.weight_of(n_users + t.pos))});
    pairs.push_back({t.user, t.neg, 0.0, 0.5 * (wu + w.weight_of(n_users + t.neg))});
  }
  return pairs;
}

double weighted_bce_loss(const ModelParams& params, const PropagationOperator* prop,
                         std::span<const LabeledPair> pairs) {
  EffectiveEmbeddings eff = effective_embeddings(params, prop);
  double loss = 0.0;
  for (const auto& p : pairs) {
    double x = dot(eff.users.row_span(p.user), eff.items.row_span(p.item));
    // ln(1 - sigma(x)) = ln sigma(-x)
    loss += -p.weight * (p.label * log_sigmoid_clamped(x) + (1.0 - p.label) * log_sigmoid_clamped(-x));
  }
  return loss;
}

ScopedParameterVector bce_gradient(const ModelParams& params, const PropagationOperator* prop,
                                   std::span<const std::int32_t> entities, std::span<const LabeledPair> pairs) {
  EffectiveEmbeddings eff = effective_embeddings(params, prop);
  const std::int32_t n_users = params.n_users();
  Matrix cot(params.n_users() + params.n_items(), params.dim());
  for (const auto& p : pairs) {
    const double* eu = eff.users.row(p.user);
    const double* ei = eff.items.row(p.item);
    double x = 0.0;
    for (std::int64_t k = 0; k < params.dim(); ++k) x += eu[k] * ei[k];
    const double c = p.weight * (sigmoid(x) - p.label);
    double* cu = cot.row(p.user);
    double* ci = cot.row(n_users + p.item);
    for (std::int64_t k = 0; k < params.dim(); ++k) {
      cu[k] += c * ei[k];
      ci[k] += c * eu[k];
    }
  }
  if (params.backbone == Backbone::LightGCN) cot = prop->apply(cot);
  return gather_rows(cot, entities);
}

LinearOperator bce_hessian_operator(const ModelParams& params, const PropagationOperator* prop,
                                    std::span<const std::int32_t> entities, std::vector<LabeledPair> pairs,
                                    double damping) {
  if (damping < 0.0) throw std::invalid_argument("bce_hessian_operator: damping must be >= 0");
  auto state = std::make_shared<HvpState>(params, prop, entities, damping);
  state->prepare_bce(std::move(pairs));
  return wrap_operator(std::move(state));
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::pair<ModelParams, UnlearnResult> unlearn(const ModelParams& params, const InteractionDataset& ds,
                                              std::span<const Interaction> forget, const UnlearnConfig& config) {
  if (forget.empty()) throw std::invalid_argument("unlearn: forget set is empty");
  if (config.eta <= 0.0 || config.eta > 1.0) throw std::invalid_argument("unlearn: eta must be in (0,1]");
  if (config.damping < 0.0) throw std::invalid_argument("unlearn: damping must be >= 0");
  if (config.hops < 0) throw std::invalid_argument("unlearn: hop count must be >= 0");

  PropagationOperator prop;
  const PropagationOperator* prop_ptr = nullptr;
  if (params.backbone == Backbone::LightGCN) {
    prop = build_propagation(ds, params.layers);
    prop_ptr = &prop;
  }

  UnlearnResult result;
  result.variant = config.variant;
  result.sign = config.sign;
  result.forget_edges = static_cast<std::int64_t>(forget.size());
  const auto t_total = std::chrono::steady_clock::now();

  auto t0 = std::chrono::steady_clock::now();
  InfluencedScope scope = config.variant == UnlearnVariant::NoScoping ? full_train_scope(ds, forget)
                                                                      : expand_scope(ds, forget, config.hops);
  result.scope_edges = static_cast<std::int64_t>(scope.edges.size());
  result.scope_entities = static_cast<std::int64_t>(scope.entities.size());
  result.timings.scope = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  InfluenceWeights weights = config.variant == UnlearnVariant::UniformWeights
                                 ? uniform_influence(scope)
                                 : influence_weights(scope, params, direct_entities(ds, forget), config.alpha);
  result.timings.influence = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  ScopeTriplets st = build_scope_triplets(ds, scope, forget, config.negatives_per_positive,
                                          stream_seed(config.seed, "unlearn-neg"));
  result.forget_triplets = static_cast<std::int64_t>(st.forget.size());
  result.retained_triplets = static_cast<std::int64_t>(st.retained.size());
  result.timings.triplets = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  ScopedParameterVector g;
  LinearOperator op;
  if (config.variant == UnlearnVariant::BceLoss) {
    auto forget_pairs = bce_pairs_from_triplets(st.forget, weights, ds.n_users);
    auto retained_pairs = bce_pairs_from_triplets(st.retained, weights, ds.n_users);
    g = bce_gradient(params, prop_ptr, scope.entities, forget_pairs);
    result.timings.gradient = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    op = bce_hessian_operator(params, prop_ptr, scope.entities, std::move(retained_pairs), config.damping);
  } else {
    auto fw = triplet_weights(weights, st.forget, ds.n_users);
    auto rw = triplet_weights(weights, st.retained, ds.n_users);
    g = forget_gradient(params, prop_ptr, scope.entities, st.forget, fw);
    result.timings.gradient = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    op = hessian_operator(params, prop_ptr, scope.entities, std::move(st.retained), std::move(rw), config.damping);
  }

  std::vector<double> rhs(g.values.size());
  for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = -g.values[k];
  auto [delta, cg_report] = cg_solve(op, rhs, config.cg);
  result.cg_report = std::move(cg_report);
  result.timings.cg = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  // eta multiplies the step. The update formula's division by eta contradicts
  // the reported eta sensitivity (small eta must mean a small, ineffective
  // update; large eta an unstable one), and dividing wrecks retain-set
  // utility at desk scale, so the multiplicative reading ships.
  const double scale = (config.sign == UpdateSign::Paper ? 1.0 : -1.0) * config.eta;
  result.applied_delta.entities = g.entities;
  result.applied_delta.dim = g.dim;
  result.applied_delta.values.resize(delta.size());
  for (std::size_t k = 0; k < delta.size(); ++k) {
    const double v = scale * delta[k];
    if (!std::isfinite(v)) throw std::runtime_error("unlearn: non-finite update, parameters left untouched");
    result.applied_delta.values[k] = v;
  }
  ModelParams updated = params;
  add_scaled_rows(updated, result.applied_delta, 1.0);
  result.update_norm = result.applied_delta.norm();
  result.timings.apply = seconds_since(t0);
  result.timings.total = seconds_since(t_total);
  return {std::move(updated), std::move(result)};
}

std::vector<double> predicted_score_change(const ModelParams& params, const PropagationOperator* prop,
                                           const ScopedParameterVector& applied_delta,
                                           std::span<const Interaction> pairs) {
  Matrix direction(params.n_users() + params.n_items(), params.dim());
  scatter_rows(applied_delta, direction);
  if (params.backbone == Backbone::LightGCN) direction = prop->apply(direction);
  EffectiveEmbeddings eff = effective_embeddings(params, prop);
  const std::int32_t n_users = params.n_users();

  std::vector<double> out(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& pr = pairs[k];
    out[k] = dot({direction.row(pr.user), static_cast<std::size_t>(direction.cols)}, eff.items.row_span(pr.item)) +
             dot(eff.users.row_span(pr.user), {direction.row(n_users + pr.item), static_cast<std::size_t>(direction.cols)});
  }
  return out;
}

}  // namespace unrank
