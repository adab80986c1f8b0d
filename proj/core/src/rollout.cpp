#include "minigrpo/rollout.hpp"

#include <string>

#include "minigrpo/errors.hpp"

namespace minigrpo {

std::string filter_mode_name(FilterMode m) {
  switch (m) {
    case FilterMode::stage1: return "STAGE1";
    case FilterMode::stage2: return "STAGE2";
    case FilterMode::none: return "NONE";
  }
  return "?";
}

bool group_passes(FilterMode mode, int correct_count, int group_size) {
  switch (mode) {
    case FilterMode::stage1:
      return correct_count > 0 && correct_count < group_size;
    case FilterMode::stage2:
      return correct_count > 0;
    case FilterMode::none:
      return true;
  }
  return true;
}

Rollout sample_response(const Policy& policy, const Question& q,
                        int max_response_len, double temperature, double top_p,
                        RngStream& rng) {
  if (max_response_len < 1) {
    throw ConfigError("max_response_len must be >= 1");
  }
  const Vocab& vocab = policy.vocab();
  Rollout r;
  r.tokens.reserve(static_cast<std::size_t>(max_response_len));
  r.behavior_logp.reserve(static_cast<std::size_t>(max_response_len));

  Context ctx = policy.context_from(q.prompt);
  bool saw_eos = false;
  for (int t = 0; t < max_response_len; ++t) {
    const TokenId tok = policy.sample_token(ctx, temperature, top_p, rng);
    // Log-probs are always the temperature-1 model distribution.
    r.behavior_logp.push_back(
        policy.token_log_probs(ctx)[static_cast<std::size_t>(tok)]);
    r.tokens.push_back(tok);
    Policy::push_context(ctx, tok);
    if (tok == vocab.eos) {
      saw_eos = true;
      break;
    }
  }
  r.length = static_cast<int>(r.tokens.size());
  r.truncated = !saw_eos;
  r.parsed = parse_response(vocab, r.tokens);
  r.reward = accuracy_reward(r.parsed, q.answer);
  return r;
}

RolloutGroup rollout_group(const Policy& policy, const Question& q,
                           const SamplingParams& sp, std::uint64_t seed,
                           std::uint64_t step) {
  if (sp.group_size < 2) {
    throw ConfigError("group_size must be >= 2");
  }
  RolloutGroup g;
  g.question = q;
  g.rollouts.reserve(static_cast<std::size_t>(sp.group_size));
  for (int i = 0; i < sp.group_size; ++i) {
    RngStream rng = RngStream::keyed(seed, RngPurpose::rollout, step, q.id,
                                     static_cast<std::uint64_t>(i));
    g.rollouts.push_back(sample_response(policy, q, sp.max_response_len,
                                         sp.temperature, sp.top_p, rng));
    g.correct_count += g.rollouts.back().reward;
  }
  return g;
}

FilledBatch fill_filtered_batch(const Policy& policy, const QuestionSource& questions,
                                int batch_groups, const SamplingParams& sp,
                                FilterMode mode, int max_attempts,
                                std::uint64_t seed, std::uint64_t step) {
  if (batch_groups < 1) throw ConfigError("batch_groups must be >= 1");
  if (max_attempts < batch_groups) {
    throw ConfigError("max_attempts must be >= batch_groups");
  }
  FilledBatch out;
  out.groups.reserve(static_cast<std::size_t>(batch_groups));
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    if (static_cast<int>(out.groups.size()) == batch_groups) break;
    const Question q = questions(static_cast<std::uint64_t>(attempt));
    RolloutGroup g = rollout_group(policy, q, sp, seed, step);
    ++out.sampled;
    if (group_passes(mode, g.correct_count, sp.group_size)) {
      out.groups.push_back(std::move(g));
    } else {
      ++out.discarded;
      out.rejected.push_back(std::move(g));
    }
  }
  if (static_cast<int>(out.groups.size()) < batch_groups) {
    throw BatchStarvation(
        "batch starvation under filter " + filter_mode_name(mode) + ": collected " +
            std::to_string(out.groups.size()) + "/" + std::to_string(batch_groups) +
            " groups after " + std::to_string(out.sampled) + " attempts (" +
            std::to_string(out.discarded) + " discarded)",
        static_cast<int>(out.groups.size()), out.discarded);
  }
  return out;
}

}  // namespace minigrpo
