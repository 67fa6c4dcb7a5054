#include "semidx/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "semidx/rng.hpp"

namespace semidx {

namespace {

constexpr std::size_t kMaxRejectMessages = 10;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

void reject(IngestStats& stats, const std::string& path, std::size_t line_no,
            const std::string& why) {
  ++stats.rejected;
  if (stats.messages.size() < kMaxRejectMessages) {
    stats.messages.push_back(path + ":" + std::to_string(line_no) + ": " + why);
  }
}

}  // namespace

LabelId LabelVocabulary::intern(const std::string& descriptor) {
  auto it = index_.find(descriptor);
  if (it != index_.end()) return it->second;
  const LabelId id = static_cast<LabelId>(descriptors_.size());
  descriptors_.push_back(descriptor);
  index_.emplace(descriptor, id);
  return id;
}

std::optional<LabelId> LabelVocabulary::find(
    const std::string& descriptor) const {
  auto it = index_.find(descriptor);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& LabelVocabulary::descriptor(LabelId id) const {
  if (id >= descriptors_.size()) {
    throw std::out_of_range("label id " + std::to_string(id) +
                            " outside vocabulary of size " +
                            std::to_string(descriptors_.size()));
  }
  return descriptors_[id];
}

void Corpus::add(Document doc) {
  if (doc.id.empty()) throw std::runtime_error("document with empty id");
  auto [it, inserted] = by_id_.emplace(doc.id, docs_.size());
  if (!inserted) {
    throw std::runtime_error("duplicate document id: " + doc.id);
  }
  docs_.push_back(std::move(doc));
}

const Document* Corpus::find(const std::string& doc_id) const {
  auto it = by_id_.find(doc_id);
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

IngestResult ingest_jsonl(const std::string& path, const FieldMap& field_map,
                          bool allow_unlabeled,
                          const LabelVocabulary* existing) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);

  IngestResult result;
  if (existing) result.vocabulary = *existing;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    ++result.stats.lines;

    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      reject(result.stats, path, line_no, std::string("invalid JSON: ") + e.what());
      continue;
    }
    if (!rec.is_object()) {
      reject(result.stats, path, line_no, "line is not a JSON object");
      continue;
    }

    Document doc;
    if (!rec.contains(field_map.id) || !rec[field_map.id].is_string() ||
        rec[field_map.id].get<std::string>().empty()) {
      reject(result.stats, path, line_no,
             "missing or empty id field '" + field_map.id + "'");
      continue;
    }
    doc.id = rec[field_map.id].get<std::string>();
    if (!rec.contains(field_map.title) || !rec[field_map.title].is_string()) {
      reject(result.stats, path, line_no,
             "missing title field '" + field_map.title + "'");
      continue;
    }
    doc.title = rec[field_map.title].get<std::string>();
    if (!rec.contains(field_map.abstract_text) ||
        !rec[field_map.abstract_text].is_string()) {
      reject(result.stats, path, line_no,
             "missing abstract field '" + field_map.abstract_text + "'");
      continue;
    }
    doc.abstract_text = rec[field_map.abstract_text].get<std::string>();

    const bool has_labels =
        rec.contains(field_map.labels) && rec[field_map.labels].is_array();
    if (!has_labels && !allow_unlabeled) {
      reject(result.stats, path, line_no,
             "missing labels field '" + field_map.labels + "'");
      continue;
    }
    bool bad = false;
    if (has_labels) {
      for (const auto& l : rec[field_map.labels]) {
        if (!l.is_string()) {
          reject(result.stats, path, line_no, "labels must be strings");
          bad = true;
          break;
        }
        // Descriptors are case-significant; only surrounding space is dropped.
        const std::string descriptor = trim(l.get<std::string>());
        if (descriptor.empty()) {
          reject(result.stats, path, line_no, "empty label string");
          bad = true;
          break;
        }
        LabelId id;
        if (existing) {
          auto found = result.vocabulary.find(descriptor);
          if (!found) {
            reject(result.stats, path, line_no,
                   "label outside the supplied vocabulary: " + descriptor);
            bad = true;
            break;
          }
          id = *found;
        } else {
          id = result.vocabulary.intern(descriptor);
        }
        doc.labels.push_back(id);
      }
      if (bad) continue;
      std::sort(doc.labels.begin(), doc.labels.end());
      doc.labels.erase(std::unique(doc.labels.begin(), doc.labels.end()),
                       doc.labels.end());
    }
    if (doc.labels.empty() && !allow_unlabeled) {
      reject(result.stats, path, line_no, "document has no labels");
      continue;
    }
    result.corpus.add(std::move(doc));  // throws on duplicate id
  }
  return result;
}

CorpusSplit split_corpus(const Corpus& corpus, std::size_t dev_size,
                         std::size_t test_size, std::uint64_t seed) {
  if (dev_size + test_size > corpus.size()) {
    throw std::runtime_error(
        "split sizes exceed corpus: dev " + std::to_string(dev_size) +
        " + test " + std::to_string(test_size) + " > " +
        std::to_string(corpus.size()) + " documents");
  }
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);

  CorpusSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::string& id = corpus.docs()[order[i]].id;
    if (i < dev_size) {
      split.dev.push_back(id);
    } else if (i < dev_size + test_size) {
      split.test.push_back(id);
    } else {
      split.train.push_back(id);
    }
  }
  return split;
}

LabelStats label_stats(const Corpus& corpus, const LabelVocabulary& vocab) {
  if (corpus.empty()) throw std::runtime_error("label_stats on empty corpus");
  LabelStats stats;
  stats.occurrences.assign(vocab.size(), 0);
  stats.min_labels = corpus.docs()[0].labels.size();
  std::uint64_t total = 0;
  for (const Document& d : corpus.docs()) {
    stats.min_labels = std::min(stats.min_labels, d.labels.size());
    stats.max_labels = std::max(stats.max_labels, d.labels.size());
    total += d.labels.size();
    for (LabelId l : d.labels) ++stats.occurrences.at(l);
  }
  stats.avg_labels =
      static_cast<double>(total) / static_cast<double>(corpus.size());
  return stats;
}

void save_corpus(const std::string& dir, const Corpus& corpus,
                 const LabelVocabulary& vocab, const CorpusSplit& split) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir + "/vocabulary.txt", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + dir + "/vocabulary.txt");
    for (const std::string& d : vocab.descriptors()) out << d << '\n';
  }
  {
    std::ofstream out(dir + "/docs.jsonl", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + dir + "/docs.jsonl");
    for (const Document& d : corpus.docs()) {
      nlohmann::json rec;
      rec["id"] = d.id;
      rec["title"] = d.title;
      rec["abstract"] = d.abstract_text;
      auto labels = nlohmann::json::array();
      for (LabelId l : d.labels) labels.push_back(vocab.descriptor(l));
      rec["labels"] = std::move(labels);
      out << rec.dump() << '\n';
    }
  }
  {
    std::ofstream out(dir + "/splits.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + dir + "/splits.json");
    nlohmann::json j;
    j["train"] = split.train;
    j["dev"] = split.dev;
    j["test"] = split.test;
    out << j.dump(2) << '\n';
  }
}

LoadedCorpus load_corpus(const std::string& dir) {
  LoadedCorpus loaded;
  {
    std::ifstream in(dir + "/vocabulary.txt");
    if (!in) throw std::runtime_error("cannot open " + dir + "/vocabulary.txt");
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      loaded.vocabulary.intern(line);
    }
  }
  // The saved records always use the canonical keys. Unlabeled documents are
  // legal here: a saved test corpus may carry empty label lists.
  IngestResult res = ingest_jsonl(dir + "/docs.jsonl", FieldMap{},
                                  /*allow_unlabeled=*/true, &loaded.vocabulary);
  if (res.stats.rejected > 0) {
    throw std::runtime_error(dir + "/docs.jsonl: " +
                             std::to_string(res.stats.rejected) +
                             " corrupt lines; first: " +
                             (res.stats.messages.empty()
                                  ? std::string("(no detail)")
                                  : res.stats.messages.front()));
  }
  loaded.corpus = std::move(res.corpus);

  const std::string splits_path = dir + "/splits.json";
  if (std::filesystem::exists(splits_path)) {
    std::ifstream in(splits_path);
    if (!in) throw std::runtime_error("cannot open " + splits_path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(splits_path + ": invalid JSON: " + e.what());
    }
    for (const char* key : {"train", "dev", "test"}) {
      if (!j.contains(key)) continue;
      auto& dst = key == std::string("train")
                      ? loaded.split.train
                      : key == std::string("dev") ? loaded.split.dev
                                                  : loaded.split.test;
      for (const auto& id : j[key]) dst.push_back(id.get<std::string>());
    }
  } else {
    for (const Document& d : loaded.corpus.docs()) {
      loaded.split.train.push_back(d.id);
    }
  }
  return loaded;
}

std::unordered_map<std::string, LabelSet> gold_map(const Corpus& corpus) {
  std::unordered_map<std::string, LabelSet> gold;
  gold.reserve(corpus.size());
  for (const Document& d : corpus.docs()) gold.emplace(d.id, d.labels);
  return gold;
}

}  // namespace semidx
