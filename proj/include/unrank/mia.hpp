#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "unrank/dataset.hpp"
#include "unrank/model.hpp"

namespace unrank {

struct MiaReport {
  double fpr = 0.0;       // held-out non-members classified as members
  double accuracy = 0.0;  // held-out accuracy
  std::int64_t n_members = 0;
  std::int64_t n_nonmembers = 0;
};

struct AttackOutcome {
  double fpr = 0.0;
  double accuracy = 0.0;
};

// Feed-forward membership classifier (3 -> 32 -> 16 -> 8 -> 1, rectified
// linear units) trained full-batch with weight decay on a 70/30 stratified
// split of the given examples. Features are standardized with the training
// split's statistics. label 1 = member. Throws if the training split is
// single-class.
AttackOutcome train_attacker(std::span<const std::array<double, 3>> features, std::span<const int> labels,
                             std::uint64_t seed);

// Black-box probe: members are the forget pairs, non-members equally many
// seeded random pairs absent from the original train set. Per-pair features
// are [s_before, s_after, s_before - s_after]. Requires at least 20 forget
// pairs.
MiaReport mia_fpr(const ModelParams& before, const PropagationOperator* prop_before, const ModelParams& after,
                  const PropagationOperator* prop_after, const InteractionDataset& ds,
                  std::span<const Interaction> forget, std::uint64_t seed);

}  // namespace unrank
