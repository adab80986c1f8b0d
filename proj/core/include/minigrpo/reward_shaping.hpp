#pragma once

#include <vector>

namespace minigrpo {

// Group-normalized advantages. A group whose rewards have (population)
// standard deviation below 1e-8 is degenerate and maps to all zeros rather
// than an error: all-correct groups with identical lengths are legal inputs.
struct AdvantageVector {
  std::vector<double> a;
  bool degenerate = false;
};

// A_i = (r_i - mean(r)) / pop_std(r).
AdvantageVector group_advantages(const std::vector<double>& rewards);

// Length-aware shaping: only when every rollout in the group is correct,
// each reward gains lambda * (1 - L_i / L_max); otherwise rewards pass
// through untouched.
std::vector<double> lgrpo_shaped_rewards(const std::vector<double>& rewards,
                                         const std::vector<int>& lengths,
                                         int max_response_len, double lambda);

// Ablation: min-max normalized length bonus within all-correct groups.
// Equal lengths contribute zero (continuity-preserving convention).
std::vector<double> variant_minmax(const std::vector<double>& rewards,
                                   const std::vector<int>& lengths,
                                   double lambda);

// Ablation: shrink correct rewards to (G'-1)/G' (G' = count of nonzero
// rewards) and split a unit of length-based reward across incorrect rollouts.
// Conventions: a zero G' zeroes the first term; a zero bonus sum zeroes the
// second.
std::vector<double> variant_groupshare(const std::vector<double>& rewards,
                                       const std::vector<int>& lengths);

}  // namespace minigrpo
