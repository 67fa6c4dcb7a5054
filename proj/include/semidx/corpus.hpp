#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "semidx/types.hpp"

namespace semidx {

struct Document {
  std::string id;
  std::string title;
  std::string abstract_text;
  LabelSet labels;  // sorted ascending, unique
};

// Bijection between descriptor strings and dense ids 0..size-1, assigned in
// first-seen order.
class LabelVocabulary {
 public:
  LabelId intern(const std::string& descriptor);
  std::optional<LabelId> find(const std::string& descriptor) const;
  const std::string& descriptor(LabelId id) const;
  std::size_t size() const { return descriptors_.size(); }
  const std::vector<std::string>& descriptors() const { return descriptors_; }

 private:
  std::vector<std::string> descriptors_;
  std::unordered_map<std::string, LabelId> index_;
};

class Corpus {
 public:
  void add(Document doc);  // throws on duplicate or empty id
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const std::vector<Document>& docs() const { return docs_; }
  const Document* find(const std::string& doc_id) const;

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct CorpusSplit {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;
};

// Maps the logical record fields to the JSON keys of the input file, so that
// differently named exports load without preprocessing.
struct FieldMap {
  std::string id = "id";
  std::string title = "title";
  std::string abstract_text = "abstract";
  std::string labels = "labels";
};

struct IngestStats {
  std::size_t lines = 0;     // non-blank input lines
  std::size_t rejected = 0;  // lines dropped for a recorded reason
  std::vector<std::string> messages;  // first few reject diagnostics
};

struct IngestResult {
  Corpus corpus;
  LabelVocabulary vocabulary;
  IngestStats stats;
};

// Reads a JSONL corpus. Each non-blank line must be an object carrying the
// mapped fields; lines missing a mandatory field or failing to parse are
// rejected and counted. Duplicate doc ids abort. When `existing` is given the
// vocabulary is fixed: lines naming labels outside it are rejected. With
// allow_unlabeled, the labels field may be absent or empty (test corpora).
IngestResult ingest_jsonl(const std::string& path, const FieldMap& field_map,
                          bool allow_unlabeled = false,
                          const LabelVocabulary* existing = nullptr);

// Deterministic shuffle split; remainder after dev and test becomes train.
CorpusSplit split_corpus(const Corpus& corpus, std::size_t dev_size,
                         std::size_t test_size, std::uint64_t seed);

struct LabelStats {
  std::size_t min_labels = 0;
  std::size_t max_labels = 0;
  double avg_labels = 0.0;
  std::vector<std::uint64_t> occurrences;  // indexed by label id
};

LabelStats label_stats(const Corpus& corpus, const LabelVocabulary& vocab);

// Directory layout: vocabulary.txt (descriptor per line, line number = id),
// docs.jsonl (normalized records), splits.json.
void save_corpus(const std::string& dir, const Corpus& corpus,
                 const LabelVocabulary& vocab, const CorpusSplit& split);

struct LoadedCorpus {
  Corpus corpus;
  LabelVocabulary vocabulary;
  CorpusSplit split;
};

LoadedCorpus load_corpus(const std::string& dir);

// doc_id -> gold label set, for predictors and evaluation.
std::unordered_map<std::string, LabelSet> gold_map(const Corpus& corpus);

}  // namespace semidx
