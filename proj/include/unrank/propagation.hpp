#pragma once

#include <cstdint>
#include <vector>

#include "unrank/dataset.hpp"
#include "unrank/matrix.hpp"

namespace unrank {

// Symmetrically normalized bipartite adjacency D^{-1/2} A D^{-1/2} over the
// joint user+item node set, with K propagation layers averaged with uniform
// weights 1/(K+1). Rows of isolated nodes are all-zero. The operator is
// linear and, because the normalization is symmetric, self-adjoint, so the
// same apply() also serves as the gradient pullback.
struct PropagationOperator {
  std::int32_t n_users = 0;
  std::int32_t n_items = 0;
  int layers = 0;  // K
  std::vector<std::int64_t> offsets;   // node -> csr row
  std::vector<std::int32_t> neighbors;
  std::vector<double> values;          // 1/sqrt(deg_a * deg_b)

  std::int32_t node_count() const { return n_users + n_items; }

  // One application of the normalized adjacency to an N x d matrix.
  Matrix propagate_once(const Matrix& x) const;
  // (1/(K+1)) * sum_{k=0..K} A^k x
  Matrix apply(const Matrix& x) const;
};

PropagationOperator build_propagation(const InteractionDataset& ds, int layers);

}  // namespace unrank
