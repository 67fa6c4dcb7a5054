#include "semidx/sparse_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "semidx/io_util.hpp"

namespace semidx {

namespace {

constexpr char kMagic[5] = {'S', 'I', 'D', 'X', '1'};

// Deduplicated query terms in canonical (channel, text) order, with their
// multiplicity in the bag. The fixed order makes scores independent of bag
// ordering and reproducible down to the last bit.
std::vector<std::pair<Term, std::uint32_t>> canonical_terms(const TermBag& bag) {
  std::map<Term, std::uint32_t> counts;
  for (const Term& t : bag.terms) ++counts[t];
  return {counts.begin(), counts.end()};
}

}  // namespace

std::vector<double> normalize_scores(const std::vector<double>& scores) {
  if (scores.empty()) {
    throw std::runtime_error("normalize_scores: empty score list");
  }
  const double s_max = scores.front();
  std::vector<double> distances;
  distances.reserve(scores.size());
  double prev = s_max;
  for (double s : scores) {
    if (!(s > 0.0)) {
      throw std::runtime_error(
          "normalize_scores: non-positive score " + std::to_string(s) +
          " (matching documents always score positive under this BM25)");
    }
    if (s > prev) {
      throw std::runtime_error("normalize_scores: scores must be non-increasing");
    }
    prev = s;
    distances.push_back(std::max(1.0 - s / s_max, kMinDistance));
  }
  return distances;
}

InvertedIndex InvertedIndex::build(
    const std::vector<std::pair<std::string, TermBag>>& docs) {
  if (docs.empty()) {
    throw std::runtime_error("cannot build an index from zero documents");
  }
  InvertedIndex index;
  index.doc_ids_.reserve(docs.size());
  index.doc_lengths_.reserve(docs.size());

  std::unordered_set<std::string> seen_ids;
  seen_ids.reserve(docs.size());
  std::uint64_t total_length = 0;

  for (std::uint32_t ordinal = 0; ordinal < docs.size(); ++ordinal) {
    const auto& [doc_id, bag] = docs[ordinal];
    if (doc_id.empty()) throw std::runtime_error("document with empty id");
    if (!seen_ids.insert(doc_id).second) {
      throw std::runtime_error("duplicate document id: " + doc_id);
    }
    std::unordered_map<Term, std::uint32_t, TermHash> counts;
    counts.reserve(bag.terms.size());
    for (const Term& t : bag.terms) {
      if (t.text.empty()) {
        throw std::runtime_error("empty term string in document " + doc_id);
      }
      ++counts[t];
    }
    for (const auto& [term, tf] : counts) {
      index.postings_[term].emplace_back(ordinal, tf);
    }
    index.doc_ids_.push_back(doc_id);
    index.doc_lengths_.push_back(static_cast<std::uint32_t>(bag.terms.size()));
    total_length += bag.terms.size();
  }
  // Postings were appended in ascending ordinal order by construction; sort
  // is unnecessary. Average length over all documents, empty ones included.
  index.avg_doc_length_ =
      static_cast<double>(total_length) / static_cast<double>(docs.size());
  return index;
}

const std::vector<InvertedIndex::Posting>* InvertedIndex::postings(
    const Term& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? nullptr : &it->second;
}

std::vector<Neighbor> InvertedIndex::query(const TermBag& bag, std::size_t k,
                                           const Bm25Params& params) const {
  if (k < 1) throw std::runtime_error("query k must be >= 1");
  if (params.k1 < 0.0 || params.b < 0.0 || params.b > 1.0) {
    throw std::runtime_error("invalid BM25 parameters: k1 must be >= 0 and b in [0, 1]");
  }
  const double n_docs = static_cast<double>(doc_count());

  std::vector<double> scores(doc_count(), 0.0);
  std::vector<std::uint32_t> matched;
  std::vector<char> touched(doc_count(), 0);

  for (const auto& [term, qtf] : canonical_terms(bag)) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const auto& plist = it->second;
    const double df = static_cast<double>(plist.size());
    const double idf = std::log(1.0 + (n_docs - df + 0.5) / (df + 0.5));
    for (const auto& [ordinal, tf] : plist) {
      const double tfd = static_cast<double>(tf);
      const double norm =
          params.k1 * (1.0 - params.b +
                       params.b * static_cast<double>(doc_lengths_[ordinal]) /
                           avg_doc_length_);
      const double contribution =
          idf * tfd * (params.k1 + 1.0) / (tfd + norm);
      scores[ordinal] += static_cast<double>(qtf) * contribution;
      if (!touched[ordinal]) {
        touched[ordinal] = 1;
        matched.push_back(ordinal);
      }
    }
  }
  if (matched.empty()) return {};

  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return doc_ids_[a] < doc_ids_[b];
  };
  if (matched.size() > k) {
    std::partial_sort(matched.begin(), matched.begin() + k, matched.end(),
                      better);
    matched.resize(k);
  } else {
    std::sort(matched.begin(), matched.end(), better);
  }

  std::vector<double> top_scores;
  top_scores.reserve(matched.size());
  for (std::uint32_t ordinal : matched) top_scores.push_back(scores[ordinal]);
  const std::vector<double> distances = normalize_scores(top_scores);

  std::vector<Neighbor> result;
  result.reserve(matched.size());
  for (std::size_t i = 0; i < matched.size(); ++i) {
    result.push_back(
        Neighbor{doc_ids_[matched[i]], distances[i], top_scores[i]});
  }
  return result;
}

void InvertedIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write index file: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(doc_count()));
  write_le<std::uint64_t>(out, static_cast<std::uint64_t>(term_count()));
  write_string(out, repr_json_);
  for (const std::string& id : doc_ids_) write_string(out, id);
  for (std::uint32_t len : doc_lengths_) write_le<std::uint32_t>(out, len);
  for (const auto& [term, plist] : postings_) {
    out.put(static_cast<char>(term.channel));
    write_string(out, term.text);
    write_varint(out, plist.size());
    std::uint32_t prev = 0;
    bool first = true;
    for (const auto& [ordinal, tf] : plist) {
      // Gap encoding: first entry stores the ordinal itself.
      write_varint(out, first ? ordinal : ordinal - prev);
      write_varint(out, tf);
      prev = ordinal;
      first = false;
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

InvertedIndex InvertedIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open index file: " + path);
  char magic[5];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path + ": not an SIDX1 index file");
  }
  InvertedIndex index;
  const std::uint32_t doc_count = read_le<std::uint32_t>(in, "doc count");
  const std::uint64_t term_count = read_le<std::uint64_t>(in, "term count");
  index.repr_json_ = read_string(in, "repr config");

  index.doc_ids_.reserve(doc_count);
  std::unordered_set<std::string> seen;
  for (std::uint32_t i = 0; i < doc_count; ++i) {
    std::string id = read_string(in, "doc id");
    if (id.empty() || !seen.insert(id).second) {
      throw std::runtime_error(path + ": empty or duplicate doc id in file");
    }
    index.doc_ids_.push_back(std::move(id));
  }
  index.doc_lengths_.reserve(doc_count);
  std::uint64_t total_length = 0;
  for (std::uint32_t i = 0; i < doc_count; ++i) {
    index.doc_lengths_.push_back(read_le<std::uint32_t>(in, "doc length"));
    total_length += index.doc_lengths_.back();
  }
  index.avg_doc_length_ =
      doc_count == 0
          ? 0.0
          : static_cast<double>(total_length) / static_cast<double>(doc_count);

  Term prev_term;
  for (std::uint64_t t = 0; t < term_count; ++t) {
    const int channel_byte = in.get();
    if (channel_byte == EOF) {
      throw std::runtime_error(path + ": unexpected end of file in term dictionary");
    }
    if (channel_byte > static_cast<int>(Channel::kKeywords)) {
      throw std::runtime_error(path + ": invalid channel tag " +
                               std::to_string(channel_byte));
    }
    Term term{static_cast<Channel>(channel_byte), read_string(in, "term text")};
    if (term.text.empty()) {
      throw std::runtime_error(path + ": empty term string");
    }
    if (t > 0 && !(prev_term < term)) {
      throw std::runtime_error(path + ": term dictionary out of order");
    }
    const std::uint64_t n_postings = read_varint(in, "posting count");
    if (n_postings == 0 || n_postings > doc_count) {
      throw std::runtime_error(path + ": invalid posting count");
    }
    std::vector<Posting> plist;
    plist.reserve(n_postings);
    std::uint64_t ordinal = 0;
    for (std::uint64_t p = 0; p < n_postings; ++p) {
      const std::uint64_t gap = read_varint(in, "posting gap");
      if (p == 0) {
        ordinal = gap;
      } else {
        if (gap == 0) throw std::runtime_error(path + ": zero posting gap");
        ordinal += gap;
      }
      const std::uint64_t tf = read_varint(in, "term frequency");
      if (ordinal >= doc_count || tf == 0 || tf > UINT32_MAX) {
        throw std::runtime_error(path + ": corrupt posting entry");
      }
      plist.emplace_back(static_cast<std::uint32_t>(ordinal),
                         static_cast<std::uint32_t>(tf));
    }
    index.postings_.emplace(term, std::move(plist));
    prev_term = std::move(term);
  }
  if (in.peek() != EOF) {
    throw std::runtime_error(path + ": trailing bytes after postings");
  }
  return index;
}

}  // namespace semidx
