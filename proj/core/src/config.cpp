#include "minigrpo/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "minigrpo/errors.hpp"

namespace minigrpo {

using nlohmann::json;

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::grpo: return "GRPO";
    case Algorithm::grpopp: return "GRPOPP";
    case Algorithm::lgrpo: return "LGRPO";
    case Algorithm::ppo_diagnostic: return "PPO-DIAGNOSTIC";
  }
  return "?";
}

std::string fill_mode_name(FillMode m) {
  return m == FillMode::resample ? "resample" : "mask";
}

namespace {

Algorithm algorithm_from_name(const std::string& s) {
  if (s == "GRPO") return Algorithm::grpo;
  if (s == "GRPOPP") return Algorithm::grpopp;
  if (s == "LGRPO") return Algorithm::lgrpo;
  if (s == "PPO" || s == "PPO-DIAGNOSTIC") return Algorithm::ppo_diagnostic;
  throw ConfigError("unknown algorithm '" + s + "'");
}

FilterMode filter_from_name(const std::string& s) {
  if (s == "STAGE1") return FilterMode::stage1;
  if (s == "STAGE2") return FilterMode::stage2;
  if (s == "NONE") return FilterMode::none;
  throw ConfigError("unknown filter_mode '" + s + "'");
}

FillMode fill_from_name(const std::string& s) {
  if (s == "resample") return FillMode::resample;
  if (s == "mask") return FillMode::mask;
  throw ConfigError("unknown fill_mode '" + s + "'");
}

LengthReward length_reward_from_name(const std::string& s) {
  if (s == "NONE") return LengthReward::none;
  if (s == "LGRPO") return LengthReward::lgrpo;
  if (s == "MINMAX") return LengthReward::minmax;
  if (s == "GROUPSHARE") return LengthReward::groupshare;
  throw ConfigError("unknown length_reward '" + s + "'");
}

Aggregation aggregation_from_name(const std::string& s) {
  if (s == "TOKEN") return Aggregation::token;
  if (s == "SEQUENCE") return Aggregation::sequence;
  throw ConfigError("unknown aggregation '" + s + "'");
}

void check_keys(const json& obj, const std::set<std::string>& known,
                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known.contains(it.key())) {
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

template <typename T>
void maybe(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) {
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
  }
}

void maybe_string(const json& obj, const char* key, std::string& out) {
  maybe<std::string>(obj, key, out);
}

DifficultyMix parse_mix(const json& obj, const std::string& where) {
  check_keys(obj, {"easy", "medium", "hard"}, where);
  DifficultyMix mix;
  mix.easy = 0.0;
  maybe(obj, "easy", mix.easy);
  maybe(obj, "medium", mix.medium);
  maybe(obj, "hard", mix.hard);
  return mix;
}

void parse_stage(const json& obj, const std::string& where, StageConfig& cfg) {
  check_keys(obj,
             {"algorithm", "steps", "batch_groups", "group_size",
              "max_response_len", "lr", "eps_low", "eps_high", "alpha", "beta",
              "lambda", "temperature", "top_p", "filter_mode", "fill_mode",
              "inner_epochs", "mix", "checkpoint_interval",
              "max_attempts_factor", "length_reward", "aggregation"},
             where);
  if (obj.contains("algorithm")) {
    cfg.algorithm = algorithm_from_name(obj.at("algorithm").get<std::string>());
    // keep derived defaults in sync unless the file overrides them below
    switch (cfg.algorithm) {
      case Algorithm::grpopp: cfg.filter_mode = FilterMode::stage1; break;
      case Algorithm::lgrpo: cfg.filter_mode = FilterMode::stage2; break;
      default: cfg.filter_mode = FilterMode::none; break;
    }
  }
  maybe(obj, "steps", cfg.steps);
  maybe(obj, "batch_groups", cfg.batch_groups);
  maybe(obj, "group_size", cfg.group_size);
  maybe(obj, "max_response_len", cfg.max_response_len);
  maybe(obj, "lr", cfg.lr);
  maybe(obj, "eps_low", cfg.eps_low);
  maybe(obj, "eps_high", cfg.eps_high);
  maybe(obj, "alpha", cfg.alpha);
  maybe(obj, "beta", cfg.beta);
  maybe(obj, "lambda", cfg.lambda);
  maybe(obj, "temperature", cfg.temperature);
  maybe(obj, "top_p", cfg.top_p);
  if (obj.contains("filter_mode")) {
    cfg.filter_mode = filter_from_name(obj.at("filter_mode").get<std::string>());
  }
  if (obj.contains("fill_mode")) {
    cfg.fill_mode = fill_from_name(obj.at("fill_mode").get<std::string>());
  }
  maybe(obj, "inner_epochs", cfg.inner_epochs);
  if (obj.contains("mix")) cfg.mix = parse_mix(obj.at("mix"), where + ".mix");
  maybe(obj, "checkpoint_interval", cfg.checkpoint_interval);
  maybe(obj, "max_attempts_factor", cfg.max_attempts_factor);
  if (obj.contains("length_reward")) {
    cfg.length_reward =
        length_reward_from_name(obj.at("length_reward").get<std::string>());
  }
  if (obj.contains("aggregation")) {
    cfg.aggregation =
        aggregation_from_name(obj.at("aggregation").get<std::string>());
  }
}

}  // namespace

void StageConfig::validate(const std::string& which) const {
  if (steps < 0) throw ConfigError(which + ": steps must be >= 0");
  if (batch_groups < 1) throw ConfigError(which + ": batch_groups must be >= 1");
  if (group_size < 2) throw ConfigError(which + ": group_size must be >= 2");
  if (max_response_len < 1) {
    throw ConfigError(which + ": max_response_len must be >= 1");
  }
  if (!(lr > 0.0)) throw ConfigError(which + ": lr must be positive");
  clip().validate();
  if (alpha < 0 || beta < 0 || lambda < 0) {
    throw ConfigError(which + ": alpha/beta/lambda must be nonnegative");
  }
  if (!(temperature > 0.0)) throw ConfigError(which + ": temperature must be positive");
  if (!(top_p > 0.0) || top_p > 1.0) throw ConfigError(which + ": top_p must lie in (0,1]");
  if (inner_epochs < 1) throw ConfigError(which + ": inner_epochs must be >= 1");
  mix.validate();
  if (checkpoint_interval < 1) {
    throw ConfigError(which + ": checkpoint_interval must be >= 1");
  }
  if (max_attempts_factor < 1) {
    throw ConfigError(which + ": max_attempts_factor must be >= 1");
  }
  switch (algorithm) {
    case Algorithm::grpopp:
      if (filter_mode != FilterMode::stage1) {
        throw ConfigError(which + ": GRPOPP requires filter_mode STAGE1");
      }
      if (beta != 0.0) {
        throw ConfigError(which + ": GRPOPP has no KL term; beta must be 0");
      }
      break;
    case Algorithm::lgrpo:
      if (filter_mode != FilterMode::stage2) {
        throw ConfigError(which + ": LGRPO requires filter_mode STAGE2");
      }
      if (length_reward == LengthReward::none) {
        throw ConfigError(which + ": LGRPO needs a length_reward scheme");
      }
      break;
    case Algorithm::grpo:
      if (eps_low != eps_high) {
        throw ConfigError(which + ": GRPO uses a symmetric clip range");
      }
      break;
    case Algorithm::ppo_diagnostic:
      break;
  }
}

void EvalConfig::validate() const {
  if (questions < 1) throw ConfigError("eval: questions must be >= 1");
  if (samples_per_question < 1) {
    throw ConfigError("eval: samples_per_question must be >= 1");
  }
  if (!(temperature > 0.0)) throw ConfigError("eval: temperature must be positive");
  if (!(top_p > 0.0) || top_p > 1.0) throw ConfigError("eval: top_p must lie in (0,1]");
  if (max_response_len < 1) throw ConfigError("eval: max_response_len must be >= 1");
  if (interval < 0) throw ConfigError("eval: interval must be >= 0");
  mix.validate();
}

void RunConfig::validate() const {
  if (policy.context_window < 1 || policy.embed_dim < 1 || policy.hidden_dim < 1) {
    throw ConfigError("policy dims must be positive");
  }
  if (warmup.has_value()) {
    if (warmup->steps < 0) throw ConfigError("warmup: steps must be >= 0");
    if (!(warmup->lr > 0.0)) throw ConfigError("warmup: lr must be positive");
    if (warmup->questions_per_step < 1) {
      throw ConfigError("warmup: questions_per_step must be >= 1");
    }
    if (warmup->copies_min < 0 || warmup->copies_max < warmup->copies_min) {
      throw ConfigError("warmup: need 0 <= copies_min <= copies_max");
    }
  }
  stage1.validate("stage1");
  stage2.validate("stage2");
  eval.validate();
  if (output_dir.empty()) throw ConfigError("output_dir must be non-empty");
  make_vocab();  // validates token list
}

Vocab RunConfig::make_vocab() const {
  if (vocab_tokens.empty()) return Vocab::standard();
  return Vocab::from_tokens(vocab_tokens);
}

RunConfig desk_preset() {
  RunConfig cfg;
  cfg.seed = 1;
  cfg.policy = PolicyDims{8, 12, 64};
  cfg.warmup = WarmupConfig{120, 0.01, 16, 1, 4};

  cfg.stage1.algorithm = Algorithm::grpopp;
  cfg.stage1.steps = 600;
  cfg.stage1.batch_groups = 8;
  cfg.stage1.group_size = 8;
  cfg.stage1.max_response_len = 24;
  cfg.stage1.lr = 3e-3;
  cfg.stage1.eps_low = 0.2;
  cfg.stage1.eps_high = 0.28;
  cfg.stage1.alpha = 0.001;
  cfg.stage1.beta = 0.0;
  cfg.stage1.lambda = 0.0;
  cfg.stage1.temperature = 1.0;
  cfg.stage1.top_p = 1.0;
  cfg.stage1.filter_mode = FilterMode::stage1;
  cfg.stage1.mix = DifficultyMix{1.0, 0.0, 0.0};
  cfg.stage1.length_reward = LengthReward::none;

  cfg.stage2 = cfg.stage1;
  cfg.stage2.algorithm = Algorithm::lgrpo;
  cfg.stage2.steps = 150;
  cfg.stage2.lr = 1e-3;
  cfg.stage2.beta = 0.01;
  cfg.stage2.lambda = 2e-6;
  cfg.stage2.filter_mode = FilterMode::stage2;
  cfg.stage2.length_reward = LengthReward::lgrpo;

  cfg.eval.questions = 64;
  cfg.eval.seed = 9001;
  cfg.eval.samples_per_question = 8;
  cfg.eval.temperature = 0.6;
  cfg.eval.top_p = 0.95;
  cfg.eval.max_response_len = 24;
  cfg.eval.interval = 50;
  cfg.eval.mix = DifficultyMix{1.0, 0.0, 0.0};

  cfg.output_dir = "desk_run";
  return cfg;
}

RunConfig paper_scaled_preset() {
  RunConfig cfg = desk_preset();
  cfg.policy = PolicyDims{12, 16, 96};
  cfg.warmup = WarmupConfig{200, 0.01, 16, 1, 4};

  cfg.stage1.steps = 300;
  cfg.stage1.batch_groups = 16;
  cfg.stage1.group_size = 32;
  cfg.stage1.max_response_len = 256;
  cfg.stage1.lr = 1e-5;
  cfg.stage1.mix = DifficultyMix{0.5, 0.4, 0.1};

  cfg.stage2.steps = 75;
  cfg.stage2.batch_groups = 16;
  cfg.stage2.group_size = 32;
  cfg.stage2.max_response_len = 256;
  cfg.stage2.lr = 1e-5;
  cfg.stage2.mix = DifficultyMix{0.8, 0.2, 0.0};

  cfg.eval.samples_per_question = 32;
  cfg.eval.max_response_len = 256;
  cfg.eval.mix = DifficultyMix{0.5, 0.4, 0.1};
  cfg.output_dir = "paper_scaled_run";
  return cfg;
}

RunConfig preset_by_name(const std::string& name) {
  if (name == "desk") return desk_preset();
  if (name == "paper-scaled") return paper_scaled_preset();
  throw ConfigError("unknown preset '" + name + "' (expected desk|paper-scaled)");
}

RunConfig load_run_config(const std::filesystem::path& path,
                          const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");

  check_keys(root,
             {"seed", "vocab", "policy", "warmup", "stage1", "stage2", "eval",
              "output_dir", "dump_rollouts"},
             "config");

  RunConfig cfg = base;
  maybe(root, "seed", cfg.seed);
  if (root.contains("vocab")) {
    cfg.vocab_tokens = root.at("vocab").get<std::vector<std::string>>();
  }
  if (root.contains("policy")) {
    const json& p = root.at("policy");
    check_keys(p, {"k", "e", "h"}, "policy");
    maybe(p, "k", cfg.policy.context_window);
    maybe(p, "e", cfg.policy.embed_dim);
    maybe(p, "h", cfg.policy.hidden_dim);
  }
  if (root.contains("warmup")) {
    const json& w = root.at("warmup");
    if (w.is_null()) {
      cfg.warmup.reset();
    } else {
      check_keys(w, {"steps", "lr", "questions_per_step", "copies_min", "copies_max"},
                 "warmup");
      WarmupConfig wc = cfg.warmup.value_or(WarmupConfig{});
      maybe(w, "steps", wc.steps);
      maybe(w, "lr", wc.lr);
      maybe(w, "questions_per_step", wc.questions_per_step);
      maybe(w, "copies_min", wc.copies_min);
      maybe(w, "copies_max", wc.copies_max);
      cfg.warmup = wc;
    }
  }
  if (root.contains("stage1")) parse_stage(root.at("stage1"), "stage1", cfg.stage1);
  if (root.contains("stage2")) parse_stage(root.at("stage2"), "stage2", cfg.stage2);
  if (root.contains("eval")) {
    const json& e = root.at("eval");
    check_keys(e,
               {"questions", "seed", "samples_per_question", "temperature",
                "top_p", "max_response_len", "interval", "mix"},
               "eval");
    maybe(e, "questions", cfg.eval.questions);
    maybe(e, "seed", cfg.eval.seed);
    maybe(e, "samples_per_question", cfg.eval.samples_per_question);
    maybe(e, "temperature", cfg.eval.temperature);
    maybe(e, "top_p", cfg.eval.top_p);
    maybe(e, "max_response_len", cfg.eval.max_response_len);
    maybe(e, "interval", cfg.eval.interval);
    if (e.contains("mix")) cfg.eval.mix = parse_mix(e.at("mix"), "eval.mix");
  }
  maybe_string(root, "output_dir", cfg.output_dir);
  maybe(root, "dump_rollouts", cfg.dump_rollouts);

  cfg.validate();
  return cfg;
}

}  // namespace minigrpo
