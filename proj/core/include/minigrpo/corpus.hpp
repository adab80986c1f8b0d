#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "minigrpo/rollout.hpp"
#include "minigrpo/task.hpp"

namespace minigrpo {

// One response in the analysis corpus format:
// {"question_id":..., "tokens":[...], "reward":..., "length":...}
struct CorpusRow {
  std::uint64_t question_id = 0;
  std::vector<std::string> tokens;
  double reward = 0.0;
  int length = 0;
};

// Errors name the offending line number.
std::vector<CorpusRow> read_corpus_jsonl(const std::filesystem::path& path);

void write_corpus_jsonl(const std::filesystem::path& path,
                        const std::vector<CorpusRow>& rows);

std::string corpus_row_json(const CorpusRow& row);

CorpusRow corpus_row_from(const Vocab& vocab, const Question& q,
                          const Rollout& rollout);

// Appends every rollout of every sampled group, one JSON object per line.
class CorpusWriter {
 public:
  explicit CorpusWriter(const std::filesystem::path& path);
  void add(const Vocab& vocab, const RolloutGroup& group);
  void flush();

 private:
  std::ofstream out_;
};

// Question sets as JSONL: {"id","op","a","b","answer","difficulty"}.
void write_questions_jsonl(std::ostream& out, const std::vector<Question>& qs);
void write_questions_jsonl(const std::filesystem::path& path,
                           const std::vector<Question>& qs);

}  // namespace minigrpo
