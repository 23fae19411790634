#pragma once

// Shared builders and independent oracles for the test suites. Oracles are
// deliberately implemented from the definitions (or delegated to Eigen), not
// through the library code paths they check.

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "unrank/cg.hpp"
#include "unrank/dataset.hpp"
#include "unrank/matrix.hpp"
#include "unrank/model.hpp"
#include "unrank/rng.hpp"

namespace testsupport {

inline unrank::InteractionDataset toy_dataset(std::int32_t n_users, std::int32_t n_items,
                                              std::vector<unrank::Interaction> train,
                                              std::vector<unrank::Interaction> val = {},
                                              std::vector<unrank::Interaction> test = {}) {
  unrank::InteractionDataset skeleton;
  skeleton.n_users = n_users;
  skeleton.n_items = n_items;
  for (std::int32_t u = 0; u < n_users; ++u) skeleton.user_ids.push_back("u" + std::to_string(u));
  for (std::int32_t i = 0; i < n_items; ++i) skeleton.item_ids.push_back("i" + std::to_string(i));
  unrank::InteractionDataset ds = unrank::with_train_edges(skeleton, std::move(train));
  std::sort(val.begin(), val.end());
  std::sort(test.begin(), test.end());
  ds.val = std::move(val);
  ds.test = std::move(test);
  return ds;
}

inline Eigen::MatrixXd operator_to_dense(const unrank::LinearOperator& op) {
  const auto n = static_cast<Eigen::Index>(op.dim);
  Eigen::MatrixXd dense(n, n);
  std::vector<double> e(op.dim, 0.0), col(op.dim, 0.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    op.apply(e, col);
    for (Eigen::Index i = 0; i < n; ++i) dense(i, j) = col[i];
    e[j] = 0.0;
  }
  return dense;
}

// Random SPD matrix with prescribed eigenvalues: Q diag(lambda) Q' with Q
// from the QR factorization of a seeded Gaussian matrix.
inline Eigen::MatrixXd spd_with_eigenvalues(const std::vector<double>& eigenvalues, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(eigenvalues.size());
  unrank::Rng rng(seed);
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
  }
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = eigenvalues[i];
  return q * d.asDiagonal() * q.transpose();
}

inline unrank::LinearOperator dense_operator(const Eigen::MatrixXd& a) {
  unrank::LinearOperator op;
  op.dim = a.rows();
  op.apply = [a](std::span<const double> in, std::span<double> out) {
    Eigen::Map<const Eigen::VectorXd> x(in.data(), a.cols());
    Eigen::Map<Eigen::VectorXd> y(out.data(), a.rows());
    y = a * x;
  };
  return op;
}

// Brute-force edge BFS from the hop-expansion definition: p times, add every
// train edge sharing an endpoint with an edge already in the set.
inline std::vector<std::pair<unrank::Interaction, int>> scope_oracle(const std::vector<unrank::Interaction>& train,
                                                                     const std::vector<unrank::Interaction>& forget,
                                                                     int hops) {
  std::set<std::pair<std::int32_t, std::int32_t>> in_scope;
  std::vector<std::pair<unrank::Interaction, int>> labelled;
  for (const auto& e : forget) {
    if (in_scope.insert({e.user, e.item}).second) labelled.push_back({e, 0});
  }
  for (int h = 1; h <= hops; ++h) {
    std::vector<unrank::Interaction> added;
    for (const auto& cand : train) {
      if (in_scope.count({cand.user, cand.item})) continue;
      bool touches = false;
      for (const auto& [edge, hop] : labelled) {
        if (edge.user == cand.user || edge.item == cand.item) {
          touches = true;
          break;
        }
      }
      if (touches) added.push_back(cand);
    }
    for (const auto& e : added) {
      in_scope.insert({e.user, e.item});
      labelled.push_back({e, h});
    }
    if (added.empty()) break;
  }
  return labelled;
}

// Central finite difference of a scalar function of one embedding entry.
template <typename LossFn>
double fd_derivative(unrank::ModelParams& params, bool user_table, std::int64_t row, std::int64_t col,
                     const LossFn& loss, double step = 1e-4) {
  unrank::Matrix& table = user_table ? params.user_emb : params.item_emb;
  const double saved = table.at(row, col);
  table.at(row, col) = saved + step;
  const double up = loss(params);
  table.at(row, col) = saved - step;
  const double down = loss(params);
  table.at(row, col) = saved;
  return (up - down) / (2.0 * step);
}

}  // namespace testsupport
