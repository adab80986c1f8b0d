// Command-line front end: train / eval / analyze / gen-questions.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "minigrpo/analysis.hpp"
#include "minigrpo/checkpoint.hpp"
#include "minigrpo/config.hpp"
#include "minigrpo/corpus.hpp"
#include "minigrpo/errors.hpp"
#include "minigrpo/trainer.hpp"

namespace {

using minigrpo::ConfigError;
using nlohmann::json;

json number_or_null(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

minigrpo::RunConfig resolve_config(const std::string& preset,
                                   const std::string& config_path) {
  minigrpo::RunConfig cfg = minigrpo::preset_by_name(preset);
  if (!config_path.empty()) {
    cfg = minigrpo::load_run_config(config_path, cfg);
  }
  return cfg;
}

int run_train(const std::string& preset, const std::string& config_path,
              const std::string& output_override, bool dump_rollouts,
              std::uint64_t seed_override, bool has_seed) {
  minigrpo::RunConfig cfg = resolve_config(preset, config_path);
  if (!output_override.empty()) cfg.output_dir = output_override;
  if (dump_rollouts) cfg.dump_rollouts = true;
  if (has_seed) cfg.seed = seed_override;
  cfg.validate();

  const minigrpo::RunResult result = minigrpo::run_two_stage(cfg);
  std::cout << "metrics: " << cfg.output_dir << "/metrics.csv\n"
            << "evals:   " << cfg.output_dir << "/evals.csv\n"
            << "final checkpoint: " << result.stage2_checkpoint.string() << "\n";
  return 0;
}

int run_eval(const std::string& checkpoint_path, const std::string& preset,
             const std::string& config_path) {
  const minigrpo::RunConfig cfg = resolve_config(preset, config_path);
  const minigrpo::LoadedCheckpoint loaded =
      minigrpo::load_checkpoint(checkpoint_path);

  const std::vector<minigrpo::Question> eval_set = minigrpo::generate_questions(
      loaded.policy.vocab(), cfg.eval.questions, cfg.eval.seed, cfg.eval.mix);
  const minigrpo::EvalResult result = minigrpo::evaluate(
      loaded.policy, eval_set, cfg.eval.samples_per_question,
      cfg.eval.temperature, cfg.eval.top_p, cfg.eval.max_response_len,
      cfg.eval.seed);

  json out;
  out["checkpoint"] = checkpoint_path;
  out["stage"] = loaded.meta.stage;
  out["step"] = loaded.meta.step;
  out["pass_at_1"] = result.pass_at_1;
  out["mean_len"] = result.mean_len;
  json rows = json::array();
  for (const minigrpo::EvalQuestionRow& r : result.per_question) {
    rows.push_back({{"question_id", r.question_id},
                    {"mean_reward", r.mean_reward},
                    {"mean_len", r.mean_len}});
  }
  out["per_question"] = rows;
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int run_keywords(const std::string& corpus_path, const std::string& pool_path,
                 bool overlapping) {
  minigrpo::KeywordPool pool = pool_path.empty()
                                   ? minigrpo::KeywordPool::default_pool()
                                   : minigrpo::KeywordPool::from_file(pool_path);
  const std::vector<minigrpo::CorpusRow> rows =
      minigrpo::read_corpus_jsonl(corpus_path);
  const std::vector<minigrpo::KeywordCount> counts =
      minigrpo::count_keywords(rows, pool, overlapping);

  json out;
  out["corpus"] = corpus_path;
  out["responses"] = rows.size();
  json table = json::object();
  for (const minigrpo::KeywordCount& c : counts) table[c.phrase] = c.count;
  out["counts"] = table;
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int run_lengths(const std::string& corpus_path, const std::string& unit_name) {
  minigrpo::LengthUnit unit;
  if (unit_name == "tokens") {
    unit = minigrpo::LengthUnit::tokens;
  } else if (unit_name == "chars") {
    unit = minigrpo::LengthUnit::chars;
  } else {
    throw ConfigError("unknown unit '" + unit_name + "' (expected tokens|chars)");
  }
  const std::vector<minigrpo::CorpusRow> rows =
      minigrpo::read_corpus_jsonl(corpus_path);
  const minigrpo::LengthReport report = minigrpo::length_stats(rows, unit);

  json out;
  out["corpus"] = corpus_path;
  out["unit"] = unit_name;
  out["n_total"] = report.n_total;
  out["n_correct"] = report.n_correct;
  out["n_incorrect"] = report.n_incorrect;
  out["mean_len_total"] = number_or_null(report.mean_len_total);
  out["mean_len_correct"] = number_or_null(report.mean_len_correct);
  out["mean_len_incorrect"] = number_or_null(report.mean_len_incorrect);
  json paired = json::array();
  for (const minigrpo::PairedLengths& p : report.per_question) {
    paired.push_back({{"question_id", p.question_id},
                      {"mean_correct_len", p.mean_correct},
                      {"mean_incorrect_len", p.mean_incorrect}});
  }
  out["per_question"] = paired;
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int run_curves(const std::string& metrics_path, const std::string& out_dir) {
  const auto written = minigrpo::emit_curves(metrics_path, out_dir);
  for (const auto& path : written) std::cout << path.string() << '\n';
  return 0;
}

int run_gen_questions(int n, std::uint64_t seed, double easy, double medium,
                      double hard, const std::string& out_path) {
  minigrpo::DifficultyMix mix{easy, medium, hard};
  const minigrpo::Vocab vocab = minigrpo::Vocab::standard();
  const std::vector<minigrpo::Question> qs =
      minigrpo::generate_questions(vocab, n, seed, mix);
  if (out_path.empty() || out_path == "-") {
    minigrpo::write_questions_jsonl(std::cout, qs);
  } else {
    minigrpo::write_questions_jsonl(std::filesystem::path(out_path), qs);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage group-relative RL trainer with length-aware rewards"};
  app.require_subcommand(1);

  // train
  std::string train_preset = "desk", train_config, train_output;
  bool train_dump = false;
  std::uint64_t train_seed = 0;
  auto* train = app.add_subcommand("train", "run the two-stage pipeline");
  train->add_option("--config", train_config, "JSON run config (overlays the preset)");
  train->add_option("--preset", train_preset, "desk|paper-scaled")
      ->default_str("desk");
  train->add_option("--output", train_output, "override output_dir");
  train->add_flag("--dump-rollouts", train_dump, "dump per-step rollouts as JSONL");
  auto* seed_opt = train->add_option("--seed", train_seed, "override run seed");

  // eval
  std::string eval_ckpt, eval_preset = "desk", eval_config;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint (pass@1)");
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
  eval->add_option("--config", eval_config, "JSON run config (for the eval block)");
  eval->add_option("--preset", eval_preset, "desk|paper-scaled");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "corpus and metrics diagnostics");
  analyze->require_subcommand(1);
  std::string kw_corpus, kw_pool;
  bool kw_overlapping = false;
  auto* keywords = analyze->add_subcommand("keywords", "reflection keyword counts");
  keywords->add_option("--corpus", kw_corpus, "response corpus JSONL")->required();
  keywords->add_option("--pool", kw_pool, "keyword pool file (one phrase per line)");
  keywords->add_flag("--overlapping", kw_overlapping,
                     "count overlapping matches instead of consuming them");

  std::string len_corpus, len_unit = "tokens";
  auto* lengths = analyze->add_subcommand("lengths", "correct/incorrect length stats");
  lengths->add_option("--corpus", len_corpus, "response corpus JSONL")->required();
  lengths->add_option("--unit", len_unit, "tokens|chars");

  std::string curves_metrics, curves_out;
  auto* curves = analyze->add_subcommand("curves", "emit plot-ready TSVs");
  curves->add_option("--metrics", curves_metrics, "metrics CSV")->required();
  curves->add_option("--out", curves_out, "output directory")->required();

  // gen-questions
  int gen_n = 64;
  std::uint64_t gen_seed = 1;
  double gen_easy = 1.0, gen_medium = 0.0, gen_hard = 0.0;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-questions", "export a question set as JSONL");
  gen->add_option("--n", gen_n, "number of questions");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--easy", gen_easy, "easy weight");
  gen->add_option("--medium", gen_medium, "medium weight");
  gen->add_option("--hard", gen_hard, "hard weight");
  gen->add_option("--out", gen_out, "output path ('-' = stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      return run_train(train_preset, train_config, train_output, train_dump,
                       train_seed, seed_opt->count() > 0);
    }
    if (eval->parsed()) return run_eval(eval_ckpt, eval_preset, eval_config);
    if (analyze->parsed()) {
      if (keywords->parsed()) return run_keywords(kw_corpus, kw_pool, kw_overlapping);
      if (lengths->parsed()) return run_lengths(len_corpus, len_unit);
      if (curves->parsed()) return run_curves(curves_metrics, curves_out);
    }
    if (gen->parsed()) {
      return run_gen_questions(gen_n, gen_seed, gen_easy, gen_medium, gen_hard,
                               gen_out);
    }
  } catch (const minigrpo::ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const minigrpo::BatchStarvation& e) {
    std::cerr << "batch starvation: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
