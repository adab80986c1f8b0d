#include "minigrpo/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "minigrpo/errors.hpp"
#include "minigrpo/reward_shaping.hpp"

namespace minigrpo {

namespace {

std::string fmt9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

struct BatchStats {
  double pass_rate = 0.0;
  double mean_len = 0.0;
  double mean_len_correct = 0.0;
  double mean_len_incorrect = 0.0;
  double empty_think_frac = 0.0;
};

BatchStats batch_stats(const FilledBatch& batch) {
  long n = 0, n_correct = 0, n_wf = 0, n_wf_empty_think = 0;
  double len_sum = 0, len_correct = 0, len_incorrect = 0;
  auto absorb = [&](const std::vector<RolloutGroup>& groups) {
    for (const RolloutGroup& g : groups) {
      for (const Rollout& r : g.rollouts) {
        ++n;
        len_sum += r.length;
        if (r.reward == 1) {
          ++n_correct;
          len_correct += r.length;
        } else {
          len_incorrect += r.length;
        }
        if (r.parsed.well_formed) {
          ++n_wf;
          if (r.parsed.think_span.empty()) ++n_wf_empty_think;
        }
      }
    }
  };
  absorb(batch.groups);
  absorb(batch.rejected);

  BatchStats s;
  const long n_incorrect = n - n_correct;
  s.pass_rate = n > 0 ? static_cast<double>(n_correct) / static_cast<double>(n) : 0.0;
  s.mean_len = n > 0 ? len_sum / static_cast<double>(n) : 0.0;
  s.mean_len_correct =
      n_correct > 0 ? len_correct / static_cast<double>(n_correct)
                    : std::nan("");
  s.mean_len_incorrect =
      n_incorrect > 0 ? len_incorrect / static_cast<double>(n_incorrect)
                      : std::nan("");
  s.empty_think_frac =
      n_wf > 0 ? static_cast<double>(n_wf_empty_think) / static_cast<double>(n_wf)
               : std::nan("");
  return s;
}

double mean_raw_reward(const std::vector<RolloutGroup>& groups) {
  long n = 0;
  double sum = 0;
  for (const RolloutGroup& g : groups) {
    for (const Rollout& r : g.rollouts) {
      ++n;
      sum += r.reward;
    }
  }
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

ObjectiveReport compute_objective(const StageConfig& cfg,
                                  const std::vector<RolloutGroup>& groups,
                                  const Policy& policy, const Policy& old_policy,
                                  const Policy* ref_policy,
                                  SurrogateTrace* trace) {
  switch (cfg.algorithm) {
    case Algorithm::grpopp:
      return grpopp_objective(groups, policy, old_policy, cfg.alpha, cfg.clip(),
                              cfg.aggregation, trace);
    case Algorithm::grpo: {
      if (ref_policy == nullptr) {
        throw ContractViolation("GRPO stage needs a reference policy");
      }
      return grpo_objective(groups, policy, old_policy, *ref_policy, cfg.beta,
                            cfg.eps_low, cfg.aggregation, trace);
    }
    case Algorithm::lgrpo: {
      if (ref_policy == nullptr) {
        throw ContractViolation("LGRPO stage needs a reference policy");
      }
      if (cfg.length_reward == LengthReward::lgrpo) {
        return lgrpo_objective(groups, policy, old_policy, *ref_policy,
                               ObjectiveCoeffs{cfg.alpha, cfg.beta, cfg.lambda},
                               cfg.clip(), cfg.max_response_len, cfg.aggregation,
                               trace);
      }
      // Ablation variants replace the length shaping; the surrounding
      // objective (clip, KL, entropy) is unchanged.
      std::vector<std::vector<double>> adv(groups.size());
      for (std::size_t g = 0; g < groups.size(); ++g) {
        adv[g] = group_advantages(shaped_group_rewards(groups[g], cfg.length_reward,
                                                       cfg.max_response_len,
                                                       cfg.lambda))
                     .a;
      }
      SurrogateOptions opts;
      opts.alpha = cfg.alpha;
      opts.beta = cfg.beta;
      opts.clip = cfg.clip();
      opts.aggregation = cfg.aggregation;
      return assemble_surrogate(groups, broadcast_advantages(groups, adv), policy,
                                old_policy, ref_policy, opts, trace);
    }
    case Algorithm::ppo_diagnostic: {
      std::vector<std::vector<double>> adv(groups.size());
      for (std::size_t g = 0; g < groups.size(); ++g) {
        std::vector<double> rewards;
        rewards.reserve(groups[g].rollouts.size());
        for (const Rollout& r : groups[g].rollouts) {
          rewards.push_back(static_cast<double>(r.reward));
        }
        adv[g] = group_advantages(rewards).a;
      }
      return ppo_surrogate(groups, policy, old_policy,
                           broadcast_advantages(groups, adv), cfg.clip(), trace);
    }
  }
  throw ContractViolation("unhandled algorithm");
}

}  // namespace

std::string metrics_csv_string(const std::vector<MetricsRow>& rows) {
  std::string out =
      "stage,step,pass_rate,mean_reward,mean_len,mean_len_correct,"
      "mean_len_incorrect,mean_entropy,mean_kl,clip_fraction,"
      "groups_discarded,grad_norm,empty_think_frac\n";
  for (const MetricsRow& r : rows) {
    out += r.stage;
    out += ',' + std::to_string(r.step);
    out += ',' + fmt9(r.pass_rate);
    out += ',' + fmt9(r.mean_reward);
    out += ',' + fmt9(r.mean_len);
    out += ',' + fmt9(r.mean_len_correct);
    out += ',' + fmt9(r.mean_len_incorrect);
    out += ',' + fmt9(r.mean_entropy);
    out += ',' + fmt9(r.mean_kl);
    out += ',' + fmt9(r.clip_fraction);
    out += ',' + std::to_string(r.groups_discarded);
    out += ',' + fmt9(r.grad_norm);
    out += ',' + fmt9(r.empty_think_frac);
    out += '\n';
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write metrics csv: " + path.string());
  out << metrics_csv_string(rows);
}

void write_evals_csv(const std::filesystem::path& path,
                     const std::vector<EvalPoint>& points) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("cannot write evals csv: " + path.string());
  out << "label,pass_at_1,mean_len\n";
  for (const EvalPoint& p : points) {
    out << p.label << ',' << fmt9(p.pass_at_1) << ',' << fmt9(p.mean_len) << '\n';
  }
}

EvalResult evaluate(const Policy& policy, const std::vector<Question>& eval_set,
                    int samples_per_question, double temperature, double top_p,
                    int max_response_len, std::uint64_t seed) {
  if (samples_per_question < 1) {
    throw ConfigError("samples_per_question must be >= 1");
  }
  EvalResult out;
  double len_sum = 0.0;
  long len_n = 0;
  for (const Question& q : eval_set) {
    double reward_sum = 0.0;
    double q_len_sum = 0.0;
    for (int s = 0; s < samples_per_question; ++s) {
      RngStream rng = RngStream::keyed(seed, RngPurpose::evaluation, q.id,
                                       static_cast<std::uint64_t>(s));
      const Rollout r = sample_response(policy, q, max_response_len, temperature,
                                        top_p, rng);
      reward_sum += r.reward;
      q_len_sum += r.length;
      len_sum += r.length;
      ++len_n;
    }
    out.per_question.push_back(EvalQuestionRow{
        q.id, reward_sum / samples_per_question, q_len_sum / samples_per_question});
    out.pass_at_1 += reward_sum / samples_per_question;
  }
  if (!eval_set.empty()) out.pass_at_1 /= static_cast<double>(eval_set.size());
  out.mean_len = len_n > 0 ? len_sum / static_cast<double>(len_n) : 0.0;
  return out;
}

Policy warmup_policy(Policy policy, const WarmupConfig& cfg,
                     const DifficultyMix& mix, std::uint64_t run_seed) {
  AdamState adam(policy.param_count());
  const Vocab& vocab = policy.vocab();
  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<WeightedItem> items;
    for (int qi = 0; qi < cfg.questions_per_step; ++qi) {
      RngStream rng = RngStream::keyed(run_seed, RngPurpose::warmup,
                                       static_cast<std::uint64_t>(step),
                                       static_cast<std::uint64_t>(qi));
      const Question q = generate_question(vocab, rng.key(), mix, rng);
      const int copies =
          cfg.copies_min +
          static_cast<int>(rng.next_below(
              static_cast<std::uint64_t>(cfg.copies_max - cfg.copies_min + 1)));
      const std::int64_t value = sample_answer_value(q, rng);
      const std::vector<TokenId> demo = canonical_response(vocab, q, copies, value);

      Context ctx = policy.context_from(q.prompt);
      for (TokenId tok : demo) {
        items.push_back(WeightedItem{ctx, tok, 1.0});
        Policy::push_context(ctx, tok);
      }
    }
    const double scale = 1.0 / static_cast<double>(items.size());
    for (WeightedItem& item : items) item.coeff = scale;
    const GradBuffer grad = weighted_logprob_grad(policy, items);
    adam_step(policy, grad, adam, cfg.lr);
  }
  return policy;
}

StageResult train_stage(const StageConfig& cfg, const std::string& stage_name,
                        int stage_index, Policy policy, const Policy* ref_policy,
                        std::uint64_t run_seed,
                        const std::filesystem::path& out_dir,
                        const StageHooks& hooks) {
  cfg.validate(stage_name);
  const Vocab& vocab = policy.vocab();
  const std::uint64_t stage_seed =
      mix64(mix64(run_seed) ^ (0x51a6e000ull + static_cast<std::uint64_t>(stage_index)));

  StageResult result{std::move(policy), {}, {}};
  std::filesystem::create_directories(out_dir / "checkpoints");
  AdamState adam(result.policy.param_count());

  auto save = [&](int step, const std::string& suffix) {
    const std::filesystem::path path =
        out_dir / "checkpoints" / (stage_name + "_" + suffix + ".ckpt");
    save_checkpoint(result.policy, CheckpointMeta{stage_name, step, run_seed}, path);
    result.checkpoints.push_back(path);
  };

  for (int step = 1; step <= cfg.steps; ++step) {
    const std::vector<double> pre_step_weights = result.policy.weights();

    QuestionSource source;
    if (hooks.questions) {
      source = hooks.questions(step);
    } else {
      source = [&](std::uint64_t attempt) {
        RngStream rng = RngStream::keyed(stage_seed, RngPurpose::question_gen,
                                         static_cast<std::uint64_t>(step), attempt);
        return generate_question(vocab, rng.key(), cfg.mix, rng);
      };
    }

    FilledBatch batch;
    try {
      if (cfg.fill_mode == FillMode::resample) {
        batch = fill_filtered_batch(result.policy, source, cfg.batch_groups,
                                    cfg.sampling(), cfg.filter_mode,
                                    cfg.max_attempts_factor * cfg.batch_groups,
                                    stage_seed, static_cast<std::uint64_t>(step));
      } else {
        // mask mode: one fixed draw, violating groups masked out of the update
        FilledBatch raw = fill_filtered_batch(
            result.policy, source, cfg.batch_groups, cfg.sampling(),
            FilterMode::none, cfg.batch_groups, stage_seed,
            static_cast<std::uint64_t>(step));
        for (RolloutGroup& g : raw.groups) {
          if (group_passes(cfg.filter_mode, g.correct_count, cfg.group_size)) {
            batch.groups.push_back(std::move(g));
          } else {
            batch.rejected.push_back(std::move(g));
            ++batch.discarded;
          }
        }
        batch.sampled = raw.sampled;
      }
    } catch (const BatchStarvation& e) {
      throw BatchStarvation(stage_name + " step " + std::to_string(step) + ": " +
                                e.what(),
                            e.collected(), e.discarded());
    }

    if (hooks.dumper != nullptr) {
      for (const RolloutGroup& g : batch.groups) hooks.dumper->add(vocab, g);
      for (const RolloutGroup& g : batch.rejected) hooks.dumper->add(vocab, g);
    }

    MetricsRow row;
    row.stage = stage_name;
    row.step = step;
    const BatchStats stats = batch_stats(batch);
    row.pass_rate = stats.pass_rate;
    row.mean_len = stats.mean_len;
    row.mean_len_correct = stats.mean_len_correct;
    row.mean_len_incorrect = stats.mean_len_incorrect;
    row.empty_think_frac = stats.empty_think_frac;
    row.groups_discarded = batch.discarded;
    row.mean_reward = mean_raw_reward(batch.groups);

    if (!batch.groups.empty()) {
      const Policy old_policy = result.policy;
      for (int epoch = 0; epoch < cfg.inner_epochs; ++epoch) {
        SurrogateTrace trace;
        const ObjectiveReport report = compute_objective(
            cfg, batch.groups, result.policy, old_policy, ref_policy, &trace);
        if (!std::isfinite(report.value) || !report.grad.all_finite()) {
          result.policy.weights() = pre_step_weights;
          save(step - 1, "lastgood");
          throw NumericalError(stage_name + " step " + std::to_string(step) +
                               ": non-finite objective; last-good checkpoint saved");
        }
        if (trace.clamped_ratios > 0) {
          std::cerr << stage_name << " step " << step << ": "
                    << trace.clamped_ratios << " importance ratios clamped at 1e6\n";
        }
        adam_step(result.policy, report.grad, adam, cfg.lr);
        if (epoch == cfg.inner_epochs - 1) {
          row.mean_entropy = report.mean_entropy;
          row.mean_kl = report.mean_kl;
          row.clip_fraction = report.clip_fraction;
          row.grad_norm = report.grad.l2_norm();
        }
      }
    }

    result.metrics.push_back(std::move(row));

    if (step % cfg.checkpoint_interval == 0) save(step, std::to_string(step));
    if (hooks.eval_cfg != nullptr && hooks.eval_out != nullptr &&
        hooks.eval_set != nullptr && hooks.eval_cfg->interval > 0 &&
        step % hooks.eval_cfg->interval == 0) {
      const EvalResult ev = evaluate(
          result.policy, *hooks.eval_set, hooks.eval_cfg->samples_per_question,
          hooks.eval_cfg->temperature, hooks.eval_cfg->top_p,
          hooks.eval_cfg->max_response_len, hooks.eval_cfg->seed);
      hooks.eval_out->push_back(EvalPoint{
          stage_name + ":" + std::to_string(step), ev.pass_at_1, ev.mean_len});
    }
  }

  save(cfg.steps, "final");
  return result;
}

RunResult run_two_stage(const RunConfig& cfg) {
  cfg.validate();
  const Vocab vocab = cfg.make_vocab();
  const std::filesystem::path out_dir(cfg.output_dir);
  std::filesystem::create_directories(out_dir);

  Policy policy = Policy::init(vocab, cfg.policy.context_window,
                               cfg.policy.embed_dim, cfg.policy.hidden_dim,
                               cfg.seed);
  if (cfg.warmup.has_value()) {
    policy = warmup_policy(std::move(policy), *cfg.warmup, cfg.stage1.mix, cfg.seed);
  }

  const std::vector<Question> eval_set =
      generate_questions(vocab, cfg.eval.questions, cfg.eval.seed, cfg.eval.mix);

  RunResult result{std::move(policy), {}, {}, {}, {}};

  auto eval_point = [&](const std::string& label) {
    const EvalResult ev = evaluate(result.policy, eval_set,
                                   cfg.eval.samples_per_question,
                                   cfg.eval.temperature, cfg.eval.top_p,
                                   cfg.eval.max_response_len, cfg.eval.seed);
    result.evals.push_back(EvalPoint{label, ev.pass_at_1, ev.mean_len});
    std::cout << "[eval] " << label << " pass@1=" << ev.pass_at_1
              << " mean_len=" << ev.mean_len << std::endl;
  };

  eval_point("init");

  std::optional<CorpusWriter> dump1;
  StageHooks hooks1;
  if (cfg.dump_rollouts) {
    dump1.emplace(out_dir / "rollouts_stage1.jsonl");
    hooks1.dumper = &*dump1;
  }
  hooks1.eval_cfg = &cfg.eval;
  hooks1.eval_set = &eval_set;
  hooks1.eval_out = &result.evals;

  StageResult s1 = train_stage(cfg.stage1, "stage1", 1, std::move(result.policy),
                               nullptr, cfg.seed, out_dir, hooks1);
  result.policy = std::move(s1.policy);
  result.metrics = std::move(s1.metrics);
  result.stage1_checkpoint = out_dir / "checkpoints" / "stage1_final.ckpt";
  eval_point("stage1_final");

  const Policy ref = result.policy;

  std::optional<CorpusWriter> dump2;
  StageHooks hooks2 = hooks1;
  hooks2.dumper = nullptr;
  if (cfg.dump_rollouts) {
    dump2.emplace(out_dir / "rollouts_stage2.jsonl");
    hooks2.dumper = &*dump2;
  }

  StageResult s2 = train_stage(cfg.stage2, "stage2", 2, std::move(result.policy),
                               &ref, cfg.seed, out_dir, hooks2);
  result.policy = std::move(s2.policy);
  for (MetricsRow& row : s2.metrics) result.metrics.push_back(std::move(row));
  result.stage2_checkpoint = out_dir / "checkpoints" / "stage2_final.ckpt";
  eval_point("stage2_final");

  write_metrics_csv(out_dir / "metrics.csv", result.metrics);
  write_evals_csv(out_dir / "evals.csv", result.evals);
  return result;
}

}  // namespace minigrpo
