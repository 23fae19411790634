#include "unrank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unrank {

double RankingMetrics::ndcg_at(int k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return ndcg[i];
  }
  throw std::out_of_range("ndcg_at: k not evaluated");
}

double RankingMetrics::recall_at(int k) const {
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] == k) return recall[i];
  }
  throw std::out_of_range("recall_at: k not evaluated");
}

RankingMetrics ranking_metrics(const ModelParams& params, const PropagationOperator* prop,
                               const InteractionDataset& ds, std::span<const int> ks) {
  if (ds.test.empty()) throw std::invalid_argument("ranking_metrics: test split is empty");
  RankingMetrics out;
  out.ks.assign(ks.begin(), ks.end());
  out.ndcg.assign(ks.size(), 0.0);
  out.recall.assign(ks.size(), 0.0);

  // test items per user (test is (user,item)-sorted)
  std::vector<std::vector<std::int32_t>> test_items(ds.n_users);
  for (const auto& e : ds.test) test_items[e.user].push_back(e.item);

  EffectiveEmbeddings eff = effective_embeddings(params, prop);
  std::vector<char> is_test(ds.n_items, 0);

  for (std::int32_t u = 0; u < ds.n_users; ++u) {
    if (test_items[u].empty()) continue;
    ++out.evaluated_users;
    std::vector<double> scores = score_all(eff, u);
    std::vector<char> is_train(ds.n_items, 0);
    for (std::int64_t p = ds.user_adj.offsets[u]; p < ds.user_adj.offsets[u + 1]; ++p) {
      is_train[ds.user_adj.neighbors[p]] = 1;
    }
    std::vector<std::int32_t> candidates;
    candidates.reserve(ds.n_items);
    for (std::int32_t i = 0; i < ds.n_items; ++i) {
      if (!is_train[i]) candidates.push_back(i);
    }
    std::sort(candidates.begin(), candidates.end(), [&](std::int32_t a, std::int32_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return a < b;
    });
    for (std::int32_t i : test_items[u]) is_test[i] = 1;

    const std::int64_t n_test = static_cast<std::int64_t>(test_items[u].size());
    for (std::size_t ki = 0; ki < out.ks.size(); ++ki) {
      const std::int64_t k = out.ks[ki];
      double dcg = 0.0;
      std::int64_t hits = 0;
      const std::int64_t top = std::min<std::int64_t>(k, static_cast<std::int64_t>(candidates.size()));
      for (std::int64_t pos = 0; pos < top; ++pos) {
        if (is_test[candidates[pos]]) {
          dcg += 1.0 / std::log2(static_cast<double>(pos + 2));  // 1-based position
          ++hits;
        }
      }
      double idcg = 0.0;
      for (std::int64_t pos = 0; pos < std::min<std::int64_t>(k, n_test); ++pos) {
        idcg += 1.0 / std::log2(static_cast<double>(pos + 2));
      }
      out.ndcg[ki] += idcg > 0.0 ? dcg / idcg : 0.0;
      out.recall[ki] += static_cast<double>(hits) / static_cast<double>(std::min<std::int64_t>(k, n_test));
    }
    for (std::int32_t i : test_items[u]) is_test[i] = 0;
  }

  for (std::size_t ki = 0; ki < out.ks.size(); ++ki) {
    out.ndcg[ki] /= static_cast<double>(out.evaluated_users);
    out.recall[ki] /= static_cast<double>(out.evaluated_users);
  }
  return out;
}

namespace {

// 0-based rank of each requested item in the user's full item ordering
// (descending score, ascending index ties).
std::vector<std::int64_t> item_ranks(std::span<const double> scores, std::span<const std::int32_t> items) {
  std::vector<std::int64_t> ranks(items.size());
  for (std::size_t k = 0; k < items.size(); ++k) {
    const std::int32_t i = items[k];
    const double si = scores[i];
    std::int64_t r = 0;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (scores[j] > si || (scores[j] == si && static_cast<std::int32_t>(j) < i)) ++r;
    }
    ranks[k] = r;
  }
  return ranks;
}

}  // namespace

UrrReport unranking_rate(const ModelParams& before, const PropagationOperator* prop_before,
                         const ModelParams& after, const PropagationOperator* prop_after,
                         const InteractionDataset& ds, std::span<const Interaction> forget) {
  if (forget.empty()) throw std::invalid_argument("unranking_rate: forget set is empty");
  if (before.n_users() != after.n_users() || before.n_items() != after.n_items()) {
    throw std::invalid_argument("unranking_rate: parameter shapes differ");
  }

  EffectiveEmbeddings eff_before = effective_embeddings(before, prop_before);
  EffectiveEmbeddings eff_after = effective_embeddings(after, prop_after);

  // group pairs by user so each user's scores are computed once
  std::vector<std::vector<std::int32_t>> items_of(ds.n_users);
  for (const auto& e : forget) items_of[e.user].push_back(e.item);

  UrrReport report;
  report.pairs.reserve(forget.size());
  for (std::int32_t u = 0; u < ds.n_users; ++u) {
    if (items_of[u].empty()) continue;
    std::vector<double> s_before = score_all(eff_before, u);
    std::vector<double> s_after = score_all(eff_after, u);
    std::vector<std::int64_t> r_before = item_ranks(s_before, items_of[u]);
    std::vector<std::int64_t> r_after = item_ranks(s_after, items_of[u]);
    for (std::size_t k = 0; k < items_of[u].size(); ++k) {
      report.pairs.push_back({{u, items_of[u][k]}, r_before[k], r_after[k]});
    }
  }

  std::int64_t worsened = 0;
  double sum = 0.0;
  for (const auto& pr : report.pairs) {
    if (pr.rank_after > pr.rank_before) ++worsened;
    sum += static_cast<double>(pr.rank_after - pr.rank_before) / static_cast<double>(pr.rank_before + 1);
  }
  report.worsened_fraction = static_cast<double>(worsened) / static_cast<double>(report.pairs.size());
  report.urr = sum / static_cast<double>(report.pairs.size()) * report.worsened_fraction;
  return report;
}

double speedup_report(double retrain_seconds, double unlearn_seconds) {
  if (unlearn_seconds <= 0.0) throw std::invalid_argument("speedup_report: unlearn time must be positive");
  return retrain_seconds / unlearn_seconds;
}

void dump_urr_csv(const UrrReport& report, std::ostream& out) {
  out << "user,item,rank_before,rank_after\n";
  for (const auto& pr : report.pairs) {
    out << pr.pair.user << ',' << pr.pair.item << ',' << pr.rank_before << ',' << pr.rank_after << '\n';
  }
}

}  // namespace unrank
