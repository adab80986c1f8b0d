#include "minigrpo/corpus.hpp"

#include <json.hpp>

#include "minigrpo/errors.hpp"

namespace minigrpo {

using nlohmann::json;

std::vector<CorpusRow> read_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus: " + path.string());
  std::vector<CorpusRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw InputError(path.string() + " line " + std::to_string(lineno) +
                       ": " + e.what());
    }
    CorpusRow row;
    try {
      row.question_id = obj.at("question_id").get<std::uint64_t>();
      row.tokens = obj.at("tokens").get<std::vector<std::string>>();
      row.reward = obj.at("reward").get<double>();
      row.length = obj.at("length").get<int>();
    } catch (const json::exception& e) {
      throw InputError(path.string() + " line " + std::to_string(lineno) +
                       ": " + e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string corpus_row_json(const CorpusRow& row) {
  json obj;
  obj["question_id"] = row.question_id;
  obj["tokens"] = row.tokens;
  obj["reward"] = row.reward;
  obj["length"] = row.length;
  return obj.dump();
}

void write_corpus_jsonl(const std::filesystem::path& path,
                        const std::vector<CorpusRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open corpus for writing: " + path.string());
  for (const CorpusRow& row : rows) out << corpus_row_json(row) << '\n';
}

CorpusRow corpus_row_from(const Vocab& vocab, const Question& q,
                          const Rollout& rollout) {
  CorpusRow row;
  row.question_id = q.id;
  row.tokens.reserve(rollout.tokens.size());
  for (TokenId t : rollout.tokens) row.tokens.push_back(vocab.name(t));
  row.reward = static_cast<double>(rollout.reward);
  row.length = rollout.length;
  return row;
}

CorpusWriter::CorpusWriter(const std::filesystem::path& path)
    : out_(path, std::ios::trunc) {
  if (!out_) throw IoError("cannot open rollout dump: " + path.string());
}

void CorpusWriter::add(const Vocab& vocab, const RolloutGroup& group) {
  for (const Rollout& r : group.rollouts) {
    out_ << corpus_row_json(corpus_row_from(vocab, group.question, r)) << '\n';
  }
}

void CorpusWriter::flush() { out_.flush(); }

void write_questions_jsonl(std::ostream& out, const std::vector<Question>& qs) {
  for (const Question& q : qs) {
    json obj;
    obj["id"] = q.id;
    obj["op"] = op_name(q.op);
    obj["a"] = q.a;
    obj["b"] = q.b;
    obj["answer"] = q.answer;
    obj["difficulty"] = difficulty_name(q.difficulty);
    out << obj.dump() << '\n';
  }
}

void write_questions_jsonl(const std::filesystem::path& path,
                           const std::vector<Question>& qs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open question file for writing: " + path.string());
  write_questions_jsonl(out, qs);
}

}  // namespace minigrpo
