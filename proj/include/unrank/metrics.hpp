#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "unrank/dataset.hpp"
#include "unrank/model.hpp"

namespace unrank {

struct RankingMetrics {
  std::vector<int> ks;
  std::vector<double> ndcg;    // aligned with ks
  std::vector<double> recall;  // aligned with ks
  std::int64_t evaluated_users = 0;

  double ndcg_at(int k) const;
  double recall_at(int k) const;
};

// Per user with test items: rank all items except the user's train
// positives, binary relevance on test items, DCG position 1-based,
// Recall normalized by min(k, #test items). Averaged over evaluable users.
RankingMetrics ranking_metrics(const ModelParams& params, const PropagationOperator* prop,
                               const InteractionDataset& ds, std::span<const int> ks);

struct PairRanks {
  Interaction pair;
  std::int64_t rank_before = 0;  // 0-based, full item list
  std::int64_t rank_after = 0;
};

struct UrrReport {
  double urr = 0.0;
  double worsened_fraction = 0.0;  // share of forget pairs whose rank got worse
  std::vector<PairRanks> pairs;
};

// Ranking degradation of the forget pairs: mean of (r' - r)/(r + 1) scaled by
// the worsened fraction. Ranks are 0-based over the full item list (train
// positives stay rankable).
UrrReport unranking_rate(const ModelParams& before, const PropagationOperator* prop_before,
                         const ModelParams& after, const PropagationOperator* prop_after,
                         const InteractionDataset& ds, std::span<const Interaction> forget);

double speedup_report(double retrain_seconds, double unlearn_seconds);

void dump_urr_csv(const UrrReport& report, std::ostream& out);

}  // namespace unrank
