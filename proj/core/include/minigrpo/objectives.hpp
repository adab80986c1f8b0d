#pragma once

#include <vector>

#include "minigrpo/policy.hpp"
#include "minigrpo/reward_shaping.hpp"
#include "minigrpo/rollout.hpp"

namespace minigrpo {

// Asymmetric clipping range [1-eps_low, 1+eps_high]; eps_high > eps_low is
// the clip-higher setting.
struct ClipConfig {
  double eps_low = 0.2;
  double eps_high = 0.2;
  void validate() const;
  static ClipConfig symmetric(double eps) { return {eps, eps}; }
};

struct ObjectiveCoeffs {
  double alpha = 0.0;   // entropy bonus weight
  double beta = 0.0;    // KL penalty weight
  double lambda = 0.0;  // length reward weight
  void validate() const;
};

// Ratios/clipping per generated token (default, numerically stable) or per
// whole sequence (the literal grouped-ratio form). Both normalize by the
// total generated-token count, so at old == new they produce identical
// gradients.
enum class Aggregation { sequence, token };

struct ObjectiveReport {
  double value = 0.0;
  GradBuffer grad;
  double clip_fraction = 0.0;
  double mean_kl = 0.0;       // k3 vs the reference policy when one exists,
                              // else vs the behavior policy (update-size diagnostic)
  double mean_entropy = 0.0;
  Aggregation aggregation = Aggregation::token;
};

// exp(new - old) in log space; values above 1e6 are clamped (the clipped
// surrogate branch takes over long before that, so the clamp is diagnostic).
double importance_ratio(double new_logp, double old_logp);

struct ClippedTerm {
  double value = 0.0;
  bool clipped = false;  // the clipped argument attained the min strictly
};

// min(ratio*A, clip(ratio, 1-eps_low, 1+eps_high)*A). Gradient flows only
// when the unclipped argument attains the min (ties included).
ClippedTerm clipped_term(double ratio, double advantage, const ClipConfig& clip);

// k3 estimator: with u = logp_ref - logp_new, exp(u) - u - 1. Nonnegative,
// zero iff u == 0; d/dlogp_new = 1 - exp(u).
double kl_k3(double logp_ref, double logp_new);

// --- generic assembly -------------------------------------------------------

struct TokenTrace {
  double ratio = 1.0;
  bool clipped = false;
  double policy_coeff = 0.0;  // pre-normalization d(term)/d logp_new
};

struct SurrogateTrace {
  std::vector<TokenTrace> tokens;  // (group, rollout, token) order
  int clamped_ratios = 0;
};

struct SurrogateOptions {
  double alpha = 0.0;
  double beta = 0.0;
  ClipConfig clip;
  Aggregation aggregation = Aggregation::token;
};

// Shared core of every objective: clipped policy term with fixed per-token
// advantages, optional k3 penalty against `ref_policy`, optional entropy
// bonus, exact gradient. Advantages are indexed [group][rollout][token];
// sequence aggregation requires them constant within a rollout.
ObjectiveReport assemble_surrogate(
    const std::vector<RolloutGroup>& groups,
    const std::vector<std::vector<std::vector<double>>>& token_advantages,
    const Policy& policy, const Policy& old_policy, const Policy* ref_policy,
    const SurrogateOptions& opts, SurrogateTrace* trace = nullptr);

// Expands one advantage per rollout to all its tokens.
std::vector<std::vector<std::vector<double>>> broadcast_advantages(
    const std::vector<RolloutGroup>& groups,
    const std::vector<std::vector<double>>& per_rollout);

// --- the objectives ---------------------------------------------------------

// Clipped surrogate with externally supplied per-token advantages (no value
// model here; token-level aggregation by definition).
ObjectiveReport ppo_surrogate(
    const std::vector<RolloutGroup>& groups, const Policy& policy,
    const Policy& old_policy,
    const std::vector<std::vector<std::vector<double>>>& token_advantages,
    const ClipConfig& clip, SurrogateTrace* trace = nullptr);

// Group-relative advantages, symmetric clip, k3 penalty against a reference.
ObjectiveReport grpo_objective(const std::vector<RolloutGroup>& groups,
                               const Policy& policy, const Policy& old_policy,
                               const Policy& ref_policy, double beta,
                               double eps, Aggregation agg = Aggregation::token,
                               SurrogateTrace* trace = nullptr);

// Clip-higher + entropy bonus, no KL term. Callers must pre-filter groups to
// 0 < c < G; a violating group is a contract error, not data.
ObjectiveReport grpopp_objective(const std::vector<RolloutGroup>& groups,
                                 const Policy& policy, const Policy& old_policy,
                                 double alpha, const ClipConfig& clip,
                                 Aggregation agg = Aggregation::token,
                                 SurrogateTrace* trace = nullptr);

// Length-shaped rewards, clip-higher, KL and entropy terms. Groups must
// satisfy c > 0.
ObjectiveReport lgrpo_objective(const std::vector<RolloutGroup>& groups,
                                const Policy& policy, const Policy& old_policy,
                                const Policy& ref_policy,
                                const ObjectiveCoeffs& coeffs,
                                const ClipConfig& clip, int max_response_len,
                                Aggregation agg = Aggregation::token,
                                SurrogateTrace* trace = nullptr);

// Reward-shaping scheme selector for the training loop (the two variants are
// ablations of the length bonus).
enum class LengthReward { none, lgrpo, minmax, groupshare };

std::vector<double> shaped_group_rewards(const RolloutGroup& group,
                                         LengthReward kind,
                                         int max_response_len, double lambda);

}  // namespace minigrpo
