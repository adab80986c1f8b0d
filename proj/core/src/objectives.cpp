#include "minigrpo/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "minigrpo/errors.hpp"

namespace minigrpo {

namespace {
constexpr double kRatioClamp = 1e6;
constexpr double kLogRatioClamp = 13.815510557964274;  // ln 1e6
}  // namespace

void ClipConfig::validate() const {
  if (!(eps_low > 0.0) || !(eps_low < 1.0)) {
    throw ConfigError("eps_low must lie in (0, 1)");
  }
  if (eps_high < eps_low) {
    throw ConfigError("eps_high must be >= eps_low");
  }
}

void ObjectiveCoeffs::validate() const {
  if (alpha < 0.0 || beta < 0.0 || lambda < 0.0) {
    throw ConfigError("objective coefficients must be nonnegative");
  }
}

double importance_ratio(double new_logp, double old_logp) {
  if (!std::isfinite(new_logp) || !std::isfinite(old_logp)) {
    throw InputError("non-finite log-prob in importance_ratio");
  }
  const double d = new_logp - old_logp;
  if (d > kLogRatioClamp) return kRatioClamp;
  return std::exp(d);
}

ClippedTerm clipped_term(double ratio, double advantage, const ClipConfig& clip) {
  const double clipped_ratio =
      std::clamp(ratio, 1.0 - clip.eps_low, 1.0 + clip.eps_high);
  const double raw = ratio * advantage;
  const double capped = clipped_ratio * advantage;
  ClippedTerm t;
  if (capped < raw) {
    t.value = capped;
    t.clipped = true;
  } else {
    t.value = raw;  // ties resolve to the unclipped branch
    t.clipped = false;
  }
  return t;
}

double kl_k3(double logp_ref, double logp_new) {
  if (!std::isfinite(logp_ref) || !std::isfinite(logp_new)) {
    throw InputError("non-finite log-prob in kl_k3");
  }
  const double u = logp_ref - logp_new;
  return std::exp(u) - u - 1.0;
}

std::vector<std::vector<std::vector<double>>> broadcast_advantages(
    const std::vector<RolloutGroup>& groups,
    const std::vector<std::vector<double>>& per_rollout) {
  if (per_rollout.size() != groups.size()) {
    throw ContractViolation("advantages/groups size mismatch");
  }
  std::vector<std::vector<std::vector<double>>> out(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (per_rollout[g].size() != groups[g].rollouts.size()) {
      throw ContractViolation("advantages/rollouts size mismatch");
    }
    out[g].resize(groups[g].rollouts.size());
    for (std::size_t i = 0; i < groups[g].rollouts.size(); ++i) {
      out[g][i].assign(groups[g].rollouts[i].tokens.size(), per_rollout[g][i]);
    }
  }
  return out;
}

ObjectiveReport assemble_surrogate(
    const std::vector<RolloutGroup>& groups,
    const std::vector<std::vector<std::vector<double>>>& token_advantages,
    const Policy& policy, const Policy& old_policy, const Policy* ref_policy,
    const SurrogateOptions& opts, SurrogateTrace* trace) {
  if (groups.empty()) throw ContractViolation("empty batch");
  if (token_advantages.size() != groups.size()) {
    throw ContractViolation("advantages/groups size mismatch");
  }

  std::size_t total_tokens = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (token_advantages[g].size() != groups[g].rollouts.size()) {
      throw ContractViolation("advantages/rollouts size mismatch");
    }
    for (std::size_t i = 0; i < groups[g].rollouts.size(); ++i) {
      const Rollout& r = groups[g].rollouts[i];
      if (r.tokens.empty()) throw ContractViolation("empty rollout");
      if (token_advantages[g][i].size() != r.tokens.size()) {
        throw ContractViolation("advantages/tokens size mismatch");
      }
      total_tokens += r.tokens.size();
    }
  }
  const double n = static_cast<double>(total_tokens);

  std::vector<WeightedItem> items;
  items.reserve(total_tokens);
  std::vector<Context> entropy_ctxs;
  entropy_ctxs.reserve(total_tokens);

  double policy_sum = 0.0;
  double kl_sum = 0.0;
  double entropy_sum = 0.0;
  std::size_t clipped = 0;
  std::size_t clip_denom = 0;
  int clamped = 0;

  for (std::size_t g = 0; g < groups.size(); ++g) {
    const std::vector<TokenId>& prompt = groups[g].question.prompt;
    for (std::size_t i = 0; i < groups[g].rollouts.size(); ++i) {
      const Rollout& roll = groups[g].rollouts[i];
      const std::vector<double>& adv = token_advantages[g][i];
      const std::size_t len = roll.tokens.size();

      if (opts.aggregation == Aggregation::sequence) {
        for (std::size_t t = 1; t < len; ++t) {
          if (adv[t] != adv[0]) {
            throw ContractViolation(
                "sequence aggregation requires one advantage per rollout");
          }
        }
      }

      std::vector<double> new_lp(len), old_lp(len), ref_lp;
      std::vector<double> token_entropy(len);
      if (ref_policy != nullptr) ref_lp.resize(len);

      Context ctx = policy.context_from(prompt);
      const std::size_t item_base = items.size();
      for (std::size_t t = 0; t < len; ++t) {
        const TokenId tok = roll.tokens[t];
        const std::vector<double> lp = policy.token_log_probs(ctx);
        new_lp[t] = lp[static_cast<std::size_t>(tok)];
        double h = 0.0;
        for (double l : lp) h -= std::exp(l) * l;
        token_entropy[t] = h;
        old_lp[t] = old_policy.token_log_probs(ctx)[static_cast<std::size_t>(tok)];
        if (ref_policy != nullptr) {
          ref_lp[t] = ref_policy->token_log_probs(ctx)[static_cast<std::size_t>(tok)];
        }
        entropy_ctxs.push_back(ctx);
        items.push_back(WeightedItem{ctx, tok, 0.0});
        Policy::push_context(ctx, tok);
      }

      // Policy term and its per-token coefficients.
      if (opts.aggregation == Aggregation::token) {
        for (std::size_t t = 0; t < len; ++t) {
          const double ratio = importance_ratio(new_lp[t], old_lp[t]);
          if (ratio >= kRatioClamp) ++clamped;
          const ClippedTerm ct = clipped_term(ratio, adv[t], opts.clip);
          policy_sum += ct.value;
          ++clip_denom;
          if (ct.clipped) ++clipped;
          const double coeff = ct.clipped ? 0.0 : ratio * adv[t];
          items[item_base + t].coeff = coeff;
          if (trace != nullptr) trace->tokens.push_back({ratio, ct.clipped, coeff});
        }
      } else {
        double new_total = 0.0, old_total = 0.0;
        for (std::size_t t = 0; t < len; ++t) {
          new_total += new_lp[t];
          old_total += old_lp[t];
        }
        const double ratio = importance_ratio(new_total, old_total);
        if (ratio >= kRatioClamp) ++clamped;
        const ClippedTerm ct = clipped_term(ratio, adv[0], opts.clip);
        policy_sum += ct.value;
        ++clip_denom;
        if (ct.clipped) ++clipped;
        // d ratio / d logp_t = ratio for every token of the sequence.
        const double coeff = ct.clipped ? 0.0 : ratio * adv[0];
        for (std::size_t t = 0; t < len; ++t) {
          items[item_base + t].coeff = coeff;
          if (trace != nullptr) trace->tokens.push_back({ratio, ct.clipped, coeff});
        }
      }

      // KL penalty (and diagnostic) plus entropy bookkeeping.
      for (std::size_t t = 0; t < len; ++t) {
        const double anchor_lp = ref_policy != nullptr ? ref_lp[t] : old_lp[t];
        kl_sum += kl_k3(anchor_lp, new_lp[t]);
        if (ref_policy != nullptr && opts.beta != 0.0) {
          const double u = anchor_lp - new_lp[t];
          items[item_base + t].coeff -= opts.beta * (1.0 - std::exp(u));
        }
        entropy_sum += token_entropy[t];
      }
    }
  }

  for (WeightedItem& item : items) item.coeff /= n;

  ObjectiveReport report;
  report.aggregation = opts.aggregation;
  report.mean_kl = kl_sum / n;
  report.mean_entropy = entropy_sum / n;
  report.clip_fraction =
      static_cast<double>(clipped) / static_cast<double>(clip_denom);
  report.value = (policy_sum - (ref_policy != nullptr ? opts.beta * kl_sum : 0.0)) / n +
                 opts.alpha * report.mean_entropy;
  report.grad = weighted_logprob_grad(policy, items);
  if (opts.alpha != 0.0) {
    report.grad.add(entropy_grad(policy, entropy_ctxs, opts.alpha));
  }
  if (trace != nullptr) trace->clamped_ratios = clamped;
  return report;
}

namespace {

std::vector<double> raw_rewards(const RolloutGroup& group) {
  std::vector<double> r;
  r.reserve(group.rollouts.size());
  for (const Rollout& roll : group.rollouts) {
    r.push_back(static_cast<double>(roll.reward));
  }
  return r;
}

std::vector<int> rollout_lengths(const RolloutGroup& group) {
  std::vector<int> l;
  l.reserve(group.rollouts.size());
  for (const Rollout& roll : group.rollouts) l.push_back(roll.length);
  return l;
}

void require_filter(const std::vector<RolloutGroup>& groups, FilterMode mode,
                    const char* objective) {
  for (const RolloutGroup& g : groups) {
    const int n = static_cast<int>(g.rollouts.size());
    if (!group_passes(mode, g.correct_count, n)) {
      throw ContractViolation(
          std::string(objective) + ": group with correct_count=" +
          std::to_string(g.correct_count) + "/" + std::to_string(n) +
          " violates the " + filter_mode_name(mode) +
          " constraint; filtering is the caller's job");
    }
  }
}

}  // namespace

ObjectiveReport ppo_surrogate(
    const std::vector<RolloutGroup>& groups, const Policy& policy,
    const Policy& old_policy,
    const std::vector<std::vector<std::vector<double>>>& token_advantages,
    const ClipConfig& clip, SurrogateTrace* trace) {
  clip.validate();
  SurrogateOptions opts;
  opts.clip = clip;
  opts.aggregation = Aggregation::token;
  return assemble_surrogate(groups, token_advantages, policy, old_policy,
                            nullptr, opts, trace);
}

ObjectiveReport grpo_objective(const std::vector<RolloutGroup>& groups,
                               const Policy& policy, const Policy& old_policy,
                               const Policy& ref_policy, double beta, double eps,
                               Aggregation agg, SurrogateTrace* trace) {
  std::vector<std::vector<double>> adv(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    adv[g] = group_advantages(raw_rewards(groups[g])).a;
  }
  SurrogateOptions opts;
  opts.beta = beta;
  opts.clip = ClipConfig::symmetric(eps);
  opts.clip.validate();
  opts.aggregation = agg;
  return assemble_surrogate(groups, broadcast_advantages(groups, adv), policy,
                            old_policy, &ref_policy, opts, trace);
}

ObjectiveReport grpopp_objective(const std::vector<RolloutGroup>& groups,
                                 const Policy& policy, const Policy& old_policy,
                                 double alpha, const ClipConfig& clip,
                                 Aggregation agg, SurrogateTrace* trace) {
  clip.validate();
  require_filter(groups, FilterMode::stage1, "grpopp_objective");
  std::vector<std::vector<double>> adv(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    adv[g] = group_advantages(raw_rewards(groups[g])).a;
  }
  SurrogateOptions opts;
  opts.alpha = alpha;
  opts.clip = clip;
  opts.aggregation = agg;
  return assemble_surrogate(groups, broadcast_advantages(groups, adv), policy,
                            old_policy, nullptr, opts, trace);
}

ObjectiveReport lgrpo_objective(const std::vector<RolloutGroup>& groups,
                                const Policy& policy, const Policy& old_policy,
                                const Policy& ref_policy,
                                const ObjectiveCoeffs& coeffs,
                                const ClipConfig& clip, int max_response_len,
                                Aggregation agg, SurrogateTrace* trace) {
  clip.validate();
  coeffs.validate();
  require_filter(groups, FilterMode::stage2, "lgrpo_objective");
  std::vector<std::vector<double>> adv(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    adv[g] = group_advantages(lgrpo_shaped_rewards(raw_rewards(groups[g]),
                                                   rollout_lengths(groups[g]),
                                                   max_response_len,
                                                   coeffs.lambda))
                 .a;
  }
  SurrogateOptions opts;
  opts.alpha = coeffs.alpha;
  opts.beta = coeffs.beta;
  opts.clip = clip;
  opts.aggregation = agg;
  return assemble_surrogate(groups, broadcast_advantages(groups, adv), policy,
                            old_policy, &ref_policy, opts, trace);
}

std::vector<double> shaped_group_rewards(const RolloutGroup& group,
                                         LengthReward kind,
                                         int max_response_len, double lambda) {
  const std::vector<double> r = raw_rewards(group);
  switch (kind) {
    case LengthReward::none:
      return r;
    case LengthReward::lgrpo:
      return lgrpo_shaped_rewards(r, rollout_lengths(group), max_response_len,
                                  lambda);
    case LengthReward::minmax:
      return variant_minmax(r, rollout_lengths(group), lambda);
    case LengthReward::groupshare:
      return variant_groupshare(r, rollout_lengths(group));
  }
  return r;
}

}  // namespace minigrpo
