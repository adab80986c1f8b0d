#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "minigrpo/policy.hpp"
#include "minigrpo/task.hpp"

namespace minigrpo {

// One sampled response. behavior_logp holds the temperature-1 log-probability
// of each generated token under the policy that produced it, recorded at
// sampling time.
struct Rollout {
  std::vector<TokenId> tokens;
  std::vector<double> behavior_logp;
  int length = 0;  // == tokens.size(); <eos> counts, the prompt does not
  bool truncated = false;
  ParsedResponse parsed;
  int reward = 0;
};

struct RolloutGroup {
  Question question;
  std::vector<Rollout> rollouts;
  int correct_count = 0;
};

// Group admission rule for dynamic sampling. stage1 keeps mixed groups only
// (0 < c < G); stage2 keeps any group with at least one correct rollout.
enum class FilterMode { stage1, stage2, none };

std::string filter_mode_name(FilterMode m);
bool group_passes(FilterMode mode, int correct_count, int group_size);

struct SamplingParams {
  int group_size = 8;
  int max_response_len = 24;
  double temperature = 1.0;
  double top_p = 1.0;
};

// Samples a single response: autoregressive until <eos> or max_response_len.
Rollout sample_response(const Policy& policy, const Question& q,
                        int max_response_len, double temperature, double top_p,
                        RngStream& rng);

// G rollouts for one question. Each rollout's RNG stream is derived from
// (seed, step, question id, rollout index), so the group is identical no
// matter how rollouts are scheduled.
RolloutGroup rollout_group(const Policy& policy, const Question& q,
                           const SamplingParams& sp, std::uint64_t seed,
                           std::uint64_t step);

using QuestionSource = std::function<Question(std::uint64_t attempt_index)>;

struct FilledBatch {
  std::vector<RolloutGroup> groups;
  std::vector<RolloutGroup> rejected;  // kept for logging and dumps
  int discarded = 0;
  int sampled = 0;
};

// Draws questions and rolls out groups, discarding those that violate the
// filter, until `batch_groups` are collected. Throws BatchStarvation when
// max_attempts runs out first; the cap turns pathological saturation into a
// typed error instead of a hang.
FilledBatch fill_filtered_batch(const Policy& policy, const QuestionSource& questions,
                                int batch_groups, const SamplingParams& sp,
                                FilterMode mode, int max_attempts,
                                std::uint64_t seed, std::uint64_t step);

}  // namespace minigrpo
