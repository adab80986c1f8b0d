#include "minigrpo/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "minigrpo/errors.hpp"

namespace minigrpo {

namespace {

bool word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
}

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string text;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) text.push_back(' ');
    text += tokens[i];
  }
  return text;
}

}  // namespace

KeywordPool KeywordPool::default_pool() {
  KeywordPool pool;
  pool.phrases = {"check",      "rethink",  "reassess",   "evaluate",
                  "re-evaluate", "evaluation", "examine",  "however",
                  "reconsider", "analyze",  "double-check", "check again",
                  "recheck",    "verify",   "wait"};
  return pool;
}

KeywordPool KeywordPool::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open keyword pool: " + path.string());
  KeywordPool pool;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) pool.phrases.push_back(line);
  }
  pool.validate();
  return pool;
}

void KeywordPool::validate() const {
  for (const std::string& p : phrases) {
    if (p.empty()) throw ConfigError("empty phrase in keyword pool");
    if (p != lowercase(p)) {
      throw ConfigError("keyword pool phrases must be lowercase: '" + p + "'");
    }
    if (std::count(phrases.begin(), phrases.end(), p) != 1) {
      throw ConfigError("duplicate phrase in keyword pool: '" + p + "'");
    }
  }
}

std::vector<long> count_keywords_in_text(const std::string& raw,
                                         const KeywordPool& pool,
                                         bool overlapping) {
  const std::string text = lowercase(raw);
  const std::size_t n = text.size();

  // Longest phrase wins at each position; ties keep pool order.
  std::vector<std::size_t> order(pool.phrases.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pool.phrases[a].size() > pool.phrases[b].size();
  });

  std::vector<long> counts(pool.phrases.size(), 0);
  std::size_t i = 0;
  while (i < n) {
    const bool word_start =
        word_char(text[i]) && (i == 0 || !word_char(text[i - 1]));
    if (!word_start) {
      ++i;
      continue;
    }
    bool consumed = false;
    for (std::size_t pi : order) {
      const std::string& phrase = pool.phrases[pi];
      if (phrase.size() > n - i) continue;
      if (text.compare(i, phrase.size(), phrase) != 0) continue;
      const std::size_t end = i + phrase.size();
      if (end < n && word_char(text[end])) continue;  // not a word boundary
      ++counts[pi];
      if (!overlapping) {
        i = end;
        consumed = true;
      }
      break;
    }
    if (!consumed) ++i;
  }
  return counts;
}

std::vector<KeywordCount> count_keywords(const std::vector<CorpusRow>& rows,
                                         const KeywordPool& pool,
                                         bool overlapping) {
  pool.validate();
  std::vector<long> totals(pool.phrases.size(), 0);
  for (const CorpusRow& row : rows) {
    const std::vector<long> c =
        count_keywords_in_text(join_tokens(row.tokens), pool, overlapping);
    for (std::size_t i = 0; i < totals.size(); ++i) totals[i] += c[i];
  }
  std::vector<KeywordCount> out;
  out.reserve(pool.phrases.size());
  for (std::size_t i = 0; i < pool.phrases.size(); ++i) {
    out.push_back(KeywordCount{pool.phrases[i], totals[i]});
  }
  return out;
}

LengthReport length_stats(const std::vector<CorpusRow>& rows, LengthUnit unit) {
  LengthReport report;
  double sum_total = 0, sum_correct = 0, sum_incorrect = 0;

  struct PerQuestion {
    long n_correct = 0;
    long n_incorrect = 0;
    double len_correct = 0;
    double len_incorrect = 0;
  };
  std::map<std::uint64_t, PerQuestion> by_question;

  for (const CorpusRow& row : rows) {
    const double len = unit == LengthUnit::tokens
                           ? static_cast<double>(row.length)
                           : static_cast<double>(join_tokens(row.tokens).size());
    const bool correct = row.reward >= 0.5;
    ++report.n_total;
    sum_total += len;
    PerQuestion& pq = by_question[row.question_id];
    if (correct) {
      ++report.n_correct;
      sum_correct += len;
      ++pq.n_correct;
      pq.len_correct += len;
    } else {
      ++report.n_incorrect;
      sum_incorrect += len;
      ++pq.n_incorrect;
      pq.len_incorrect += len;
    }
  }

  report.mean_len_total =
      report.n_total > 0 ? sum_total / static_cast<double>(report.n_total) : 0.0;
  report.mean_len_correct =
      report.n_correct > 0 ? sum_correct / static_cast<double>(report.n_correct)
                           : std::nan("");
  report.mean_len_incorrect = report.n_incorrect > 0
                                  ? sum_incorrect / static_cast<double>(report.n_incorrect)
                                  : std::nan("");

  for (const auto& [qid, pq] : by_question) {
    if (pq.n_correct > 0 && pq.n_incorrect > 0) {
      report.per_question.push_back(
          PairedLengths{qid, pq.len_correct / static_cast<double>(pq.n_correct),
                        pq.len_incorrect / static_cast<double>(pq.n_incorrect)});
    }
  }
  return report;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<std::filesystem::path> emit_curves(
    const std::filesystem::path& metrics_csv,
    const std::filesystem::path& out_dir) {
  std::ifstream in(metrics_csv);
  if (!in) throw IoError("cannot open metrics csv: " + metrics_csv.string());

  std::string header;
  if (!std::getline(in, header)) {
    throw InputError("metrics csv is empty (no header): " + metrics_csv.string());
  }
  const std::vector<std::string> cols = split_csv_line(header);
  auto col_index = [&](const std::string& name) {
    const auto it = std::find(cols.begin(), cols.end(), name);
    if (it == cols.end()) {
      throw InputError("metrics csv missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - cols.begin());
  };
  const std::size_t stage_col = col_index("stage");
  const std::size_t step_col = col_index("step");
  const std::size_t pass_col = col_index("pass_rate");
  const std::size_t len_col = col_index("mean_len");

  struct StageRows {
    std::vector<std::pair<std::string, std::string>> pass;
    std::vector<std::pair<std::string, std::string>> len;
  };
  std::vector<std::string> stage_order;
  std::map<std::string, StageRows> per_stage;

  std::string line;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    const std::size_t needed =
        std::max({stage_col, step_col, pass_col, len_col}) + 1;
    if (fields.size() < needed) {
      throw InputError(metrics_csv.string() + " line " + std::to_string(lineno) +
                       ": expected at least " + std::to_string(needed) + " fields");
    }
    const std::string& stage = fields[stage_col];
    if (!per_stage.contains(stage)) stage_order.push_back(stage);
    per_stage[stage].pass.emplace_back(fields[step_col], fields[pass_col]);
    per_stage[stage].len.emplace_back(fields[step_col], fields[len_col]);
  }

  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  auto write_tsv = [&](const std::filesystem::path& path, const char* value_name,
                       const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "step\t" << value_name << '\n';
    for (const auto& [step, value] : rows) out << step << '\t' << value << '\n';
    written.push_back(path);
  };

  if (stage_order.empty()) {
    write_tsv(out_dir / "curve_pass_rate.tsv", "pass_rate", {});
    write_tsv(out_dir / "curve_mean_len.tsv", "mean_len", {});
    return written;
  }
  for (const std::string& stage : stage_order) {
    write_tsv(out_dir / ("curve_" + stage + "_pass_rate.tsv"), "pass_rate",
              per_stage[stage].pass);
    write_tsv(out_dir / ("curve_" + stage + "_mean_len.tsv"), "mean_len",
              per_stage[stage].len);
  }
  return written;
}

}  // namespace minigrpo
