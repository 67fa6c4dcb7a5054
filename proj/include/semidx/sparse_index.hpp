#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "semidx/textrep.hpp"
#include "semidx/types.hpp"

namespace semidx {

struct Bm25Params {
  double k1 = 1.2;  // term-frequency saturation
  double b = 0.75;  // document-length normalization, in [0, 1]
};

// Rescales BM25 scores (non-increasing, all positive) into pseudo-distances:
// d_i = 1 - s_i / s_max, clamped to >= kMinDistance so inverse-square
// neighbor weights stay finite. Throws when a score is not positive or the
// input is empty or out of order.
std::vector<double> normalize_scores(const std::vector<double>& scores);

// Inverted index with BM25 ranking. Immutable after build; queries are
// thread-safe.
class InvertedIndex {
 public:
  using Posting = std::pair<std::uint32_t, std::uint32_t>;  // ordinal, tf

  // Document ordinals follow input order. Throws on empty input, duplicate
  // doc ids, or empty term strings.
  static InvertedIndex build(
      const std::vector<std::pair<std::string, TermBag>>& docs);

  // OR-query: every document matching at least one bag term is scored with
  //   score(d) = sum over bag terms of IDF(t) * tf * (k1+1) /
  //              (tf + k1 * (1 - b + b * len(d) / avg_len)),
  //   IDF(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
  // Top k by score descending, ties by doc id ascending; scores are then
  // normalized to pseudo-distances. Repeated bag terms contribute with their
  // multiplicity. Returns fewer than k results when fewer documents match.
  std::vector<Neighbor> query(const TermBag& bag, std::size_t k,
                              const Bm25Params& params = {}) const;

  // Single-file binary format (magic SIDX1); bit-exact round trip. The
  // representation config used at build time rides along as an opaque JSON
  // string so that query-time extraction can replay it.
  void save(const std::string& path) const;
  static InvertedIndex load(const std::string& path);

  void set_repr_json(std::string json) { repr_json_ = std::move(json); }
  const std::string& repr_json() const { return repr_json_; }

  std::size_t doc_count() const { return doc_ids_.size(); }
  std::size_t term_count() const { return postings_.size(); }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  const std::vector<std::uint32_t>& doc_lengths() const { return doc_lengths_; }
  double avg_doc_length() const { return avg_doc_length_; }
  const std::vector<Posting>* postings(const Term& term) const;
  const std::map<Term, std::vector<Posting>>& all_postings() const {
    return postings_;
  }

 private:
  std::map<Term, std::vector<Posting>> postings_;
  std::vector<std::string> doc_ids_;
  std::vector<std::uint32_t> doc_lengths_;
  double avg_doc_length_ = 0.0;
  std::string repr_json_ = "{}";
};

}  // namespace semidx
