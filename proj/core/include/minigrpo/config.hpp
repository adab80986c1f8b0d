#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "minigrpo/objectives.hpp"
#include "minigrpo/rollout.hpp"
#include "minigrpo/task.hpp"
#include "minigrpo/vocab.hpp"

namespace minigrpo {

enum class Algorithm { grpo, grpopp, lgrpo, ppo_diagnostic };

// resample: redraw questions until the batch is full (the default).
// mask: sample exactly batch_groups groups once and drop the violating ones
// from the update, so a step may train on fewer groups.
enum class FillMode { resample, mask };

std::string algorithm_name(Algorithm a);
std::string fill_mode_name(FillMode m);

struct PolicyDims {
  int context_window = 8;
  int embed_dim = 12;
  int hidden_dim = 64;
};

// Supervised template imprint run before stage 1. It stands in for the
// pretrained base model the RL recipe assumes: demonstrations carry the
// prompt template with think spans of varying length and answers drawn from
// the task's answer distribution (not the true answers), so the format is
// learned while accuracy stays low until RL earns it.
struct WarmupConfig {
  int steps = 120;
  double lr = 0.01;
  int questions_per_step = 16;
  int copies_min = 1;  // expression repetitions inside the think span
  int copies_max = 4;
};

struct StageConfig {
  Algorithm algorithm = Algorithm::grpopp;
  int steps = 600;
  int batch_groups = 8;
  int group_size = 8;
  int max_response_len = 24;
  double lr = 3e-3;
  double eps_low = 0.2;
  double eps_high = 0.28;
  double alpha = 0.001;
  double beta = 0.0;
  double lambda = 0.0;
  double temperature = 1.0;
  double top_p = 1.0;
  FilterMode filter_mode = FilterMode::stage1;
  FillMode fill_mode = FillMode::resample;
  int inner_epochs = 1;
  DifficultyMix mix;
  int checkpoint_interval = 50;
  int max_attempts_factor = 40;  // max_attempts = factor * batch_groups
  LengthReward length_reward = LengthReward::none;
  Aggregation aggregation = Aggregation::token;

  void validate(const std::string& which) const;
  ClipConfig clip() const { return ClipConfig{eps_low, eps_high}; }
  SamplingParams sampling() const {
    return SamplingParams{group_size, max_response_len, temperature, top_p};
  }
};

struct EvalConfig {
  int questions = 64;
  std::uint64_t seed = 9001;
  int samples_per_question = 8;
  double temperature = 0.6;
  double top_p = 0.95;
  int max_response_len = 24;
  int interval = 0;  // extra in-stage evals every N steps; 0 = boundaries only
  DifficultyMix mix;

  void validate() const;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::vector<std::string> vocab_tokens;  // empty = Vocab::standard()
  PolicyDims policy;
  std::optional<WarmupConfig> warmup;
  StageConfig stage1;
  StageConfig stage2;
  EvalConfig eval;
  std::string output_dir = "run_out";
  bool dump_rollouts = false;

  void validate() const;
  Vocab make_vocab() const;
};

// Named presets: "desk" trains in minutes on one core; "paper-scaled" keeps
// the published coefficients (lr 1e-6 scaled up only as far as the tiny
// policy requires, eps 0.2/0.28, alpha 1e-3, beta 0.01, lambda 2e-6, G=32)
// at dimensions this engine can actually run, for documentation and
// experimentation rather than the acceptance gates.
RunConfig desk_preset();
RunConfig paper_scaled_preset();
RunConfig preset_by_name(const std::string& name);

// Parses a JSON run config, overlaying any present field onto `base`.
// Unknown keys are config errors.
RunConfig load_run_config(const std::filesystem::path& path,
                          const RunConfig& base);

}  // namespace minigrpo
