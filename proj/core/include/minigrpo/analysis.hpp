#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "minigrpo/corpus.hpp"

namespace minigrpo {

// Reflection-keyword pool. Phrases must be lowercase and unique; counting is
// case-insensitive, word-boundary, longest-match-first and non-overlapping
// (so "double-check" never also counts "check").
struct KeywordPool {
  std::vector<std::string> phrases;

  static KeywordPool default_pool();
  // One phrase per line; blank lines ignored.
  static KeywordPool from_file(const std::filesystem::path& path);
  void validate() const;
};

struct KeywordCount {
  std::string phrase;
  long count = 0;
};

// Counts over each response's token stream rendered as space-joined text.
// Results follow pool order. `overlapping` disables match consumption.
std::vector<KeywordCount> count_keywords(const std::vector<CorpusRow>& rows,
                                         const KeywordPool& pool,
                                         bool overlapping = false);

// Exposed for tests: counting over one already-rendered text.
std::vector<long> count_keywords_in_text(const std::string& text,
                                         const KeywordPool& pool,
                                         bool overlapping = false);

enum class LengthUnit { tokens, chars };

struct PairedLengths {
  std::uint64_t question_id = 0;
  double mean_correct = 0.0;
  double mean_incorrect = 0.0;
};

// Correct/incorrect length statistics. The degenerate means are NaN when a
// side is empty; per_question holds only questions with both at least one
// correct and one incorrect response, ordered by question id.
struct LengthReport {
  long n_total = 0;
  long n_correct = 0;
  long n_incorrect = 0;
  double mean_len_total = 0.0;
  double mean_len_correct = 0.0;
  double mean_len_incorrect = 0.0;
  std::vector<PairedLengths> per_question;
};

LengthReport length_stats(const std::vector<CorpusRow>& rows, LengthUnit unit);

// Projects a metrics CSV into plot-ready TSVs: per stage, (step, pass_rate)
// and (step, mean_len), values copied verbatim. A metrics file with no data
// rows yields unlabeled header-only TSVs. Returns the written paths.
std::vector<std::filesystem::path> emit_curves(
    const std::filesystem::path& metrics_csv,
    const std::filesystem::path& out_dir);

}  // namespace minigrpo
