#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "minigrpo/adam.hpp"
#include "minigrpo/checkpoint.hpp"
#include "minigrpo/config.hpp"
#include "minigrpo/corpus.hpp"
#include "minigrpo/objectives.hpp"
#include "minigrpo/policy.hpp"
#include "minigrpo/rollout.hpp"

namespace minigrpo {

// One training step's logged scalars. pass_rate, the length columns and
// empty_think_frac are measured over every group sampled that step (before
// filtering); mean_reward is over the kept training batch; entropy/KL/clip
// come from the last gradient pass.
struct MetricsRow {
  std::string stage;
  int step = 0;
  double pass_rate = 0.0;
  double mean_reward = 0.0;
  double mean_len = 0.0;
  double mean_len_correct = 0.0;
  double mean_len_incorrect = 0.0;
  double mean_entropy = 0.0;
  double mean_kl = 0.0;
  double clip_fraction = 0.0;
  int groups_discarded = 0;
  double grad_norm = 0.0;
  double empty_think_frac = 0.0;
};

// Fixed header, floats at 9 significant digits; byte-identical across runs
// with the same config and seed.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRow>& rows);
std::string metrics_csv_string(const std::vector<MetricsRow>& rows);

struct EvalQuestionRow {
  std::uint64_t question_id = 0;
  double mean_reward = 0.0;
  double mean_len = 0.0;
};

struct EvalResult {
  double pass_at_1 = 0.0;
  double mean_len = 0.0;
  std::vector<EvalQuestionRow> per_question;
};

// Pass@1 = mean over questions of mean reward over samples, sampled at the
// given temperature/top-p. Deterministic given the seed.
EvalResult evaluate(const Policy& policy, const std::vector<Question>& eval_set,
                    int samples_per_question, double temperature, double top_p,
                    int max_response_len, std::uint64_t seed);

struct EvalPoint {
  std::string label;
  double pass_at_1 = 0.0;
  double mean_len = 0.0;
};

void write_evals_csv(const std::filesystem::path& path,
                     const std::vector<EvalPoint>& points);

// Supervised template imprint (see WarmupConfig). Returns the warmed policy.
Policy warmup_policy(Policy policy, const WarmupConfig& cfg,
                     const DifficultyMix& mix, std::uint64_t run_seed);

struct StageResult {
  Policy policy;
  std::vector<MetricsRow> metrics;
  std::vector<std::filesystem::path> checkpoints;
};

struct StageHooks {
  CorpusWriter* dumper = nullptr;              // rollout dump, optional
  const EvalConfig* eval_cfg = nullptr;        // periodic in-stage evals
  const std::vector<Question>* eval_set = nullptr;
  std::vector<EvalPoint>* eval_out = nullptr;
  // Task override; default draws fresh questions from cfg.mix per attempt.
  std::function<QuestionSource(int step)> questions;
};

// One stage of the pipeline. Per step: fill a filtered batch under the
// current policy, take inner_epochs gradient passes against that snapshot,
// log a MetricsRow, checkpoint on the configured interval and at the end.
// BatchStarvation is rethrown with step context; a non-finite objective
// aborts after writing a last-good checkpoint.
StageResult train_stage(const StageConfig& cfg, const std::string& stage_name,
                        int stage_index, Policy policy, const Policy* ref_policy,
                        std::uint64_t run_seed,
                        const std::filesystem::path& out_dir,
                        const StageHooks& hooks = {});

struct RunResult {
  Policy policy;
  std::vector<MetricsRow> metrics;
  std::vector<EvalPoint> evals;
  std::filesystem::path stage1_checkpoint;
  std::filesystem::path stage2_checkpoint;
};

// Warmup (if configured), then stage 1, then stage 2 with the stage-1 final
// checkpoint as the KL reference. Writes metrics.csv, evals.csv and
// checkpoints under cfg.output_dir.
RunResult run_two_stage(const RunConfig& cfg);

}  // namespace minigrpo
