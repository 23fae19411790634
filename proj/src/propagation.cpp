#include "unrank/propagation.hpp"

#include <cmath>
#include <stdexcept>

namespace unrank {

Matrix PropagationOperator::propagate_once(const Matrix& x) const {
  const std::int32_t n = node_count();
  if (x.rows != n) throw std::invalid_argument("propagate_once: row count mismatch");
  Matrix out(n, x.cols);
  for (std::int32_t a = 0; a < n; ++a) {
    double* dst = out.row(a);
    for (std::int64_t p = offsets[a]; p < offsets[a + 1]; ++p) {
      const double* src = x.row(neighbors[p]);
      const double w = values[p];
      for (std::int64_t k = 0; k < x.cols; ++k) dst[k] += w * src[k];
    }
  }
  return out;
}

Matrix PropagationOperator::apply(const Matrix& x) const {
  const double layer_weight = 1.0 / (layers + 1);
  Matrix acc = x;
  Matrix cur = x;
  for (int k = 1; k <= layers; ++k) {
    cur = propagate_once(cur);
    for (std::size_t idx = 0; idx < acc.data.size(); ++idx) acc.data[idx] += cur.data[idx];
  }
  for (double& v : acc.data) v *= layer_weight;
  return acc;
}

PropagationOperator build_propagation(const InteractionDataset& ds, int layers) {
  if (layers < 0) throw std::invalid_argument("build_propagation: layers must be >= 0");
  PropagationOperator op;
  op.n_users = ds.n_users;
  op.n_items = ds.n_items;
  op.layers = layers;

  const std::int32_t n = op.node_count();
  op.offsets.assign(n + 1, 0);
  for (const auto& e : ds.train) {
    ++op.offsets[e.user + 1];
    ++op.offsets[ds.item_node(e.item) + 1];
  }
  for (std::int32_t v = 0; v < n; ++v) op.offsets[v + 1] += op.offsets[v];

  std::vector<double> inv_sqrt_deg(n, 0.0);
  for (std::int32_t v = 0; v < n; ++v) {
    std::int64_t deg = op.offsets[v + 1] - op.offsets[v];
    if (deg > 0) inv_sqrt_deg[v] = 1.0 / std::sqrt(static_cast<double>(deg));
  }

  op.neighbors.resize(2 * ds.train.size());
  op.values.resize(2 * ds.train.size());
  std::vector<std::int64_t> cur(op.offsets.begin(), op.offsets.end() - 1);
  for (const auto& e : ds.train) {
    const std::int32_t u = e.user;
    const std::int32_t i = ds.item_node(e.item);
    const double w = inv_sqrt_deg[u] * inv_sqrt_deg[i];
    op.neighbors[cur[u]] = i;
    op.values[cur[u]] = w;
    ++cur[u];
    op.neighbors[cur[i]] = u;
    op.values[cur[i]] = w;
    ++cur[i];
  }
  return op;
}

}  // namespace unrank
