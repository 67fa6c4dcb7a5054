#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace semidx {

// Index-term channels. A term's identity is the (channel, text) pair, so the
// same string indexed under two channels never collides.
enum class Channel : std::uint8_t {
  kStems = 0,
  kLemmas = 1,
  kNps = 2,
  kDeps = 3,
  kNers = 4,
  kKeywords = 5,
};

const char* channel_name(Channel c);
Channel channel_from_name(std::string_view name);  // throws on unknown names

struct Term {
  Channel channel;
  std::string text;

  bool operator==(const Term& o) const {
    return channel == o.channel && text == o.text;
  }
  bool operator<(const Term& o) const {
    if (channel != o.channel) return channel < o.channel;
    return text < o.text;
  }
};

struct TermHash {
  std::size_t operator()(const Term& t) const {
    return std::hash<std::string>()(t.text) * 31 +
           static_cast<std::size_t>(t.channel);
  }
};

// Multiset of index terms; duplicates carry term frequency.
struct TermBag {
  std::vector<Term> terms;
};

struct TextRankConfig {
  std::size_t window = 4;
  double damping = 0.85;
  std::size_t iterations = 100;
  std::size_t top_n = 10;
};

// Everything needed to turn a document into index terms.
struct ReprConfig {
  std::set<Channel> enabled{Channel::kStems};
  std::unordered_set<std::string> stopwords;
  TextRankConfig textrank;
};

// Lowercases and splits on non-alphanumeric boundaries. Bytes >= 0x80 are
// kept as token characters so UTF-8 sequences are never split mid-character.
std::vector<std::string> tokenize(std::string_view text);

// Tokenize, drop stopwords, stem the survivors. Tagged kStems.
TermBag extract_stems(std::string_view text,
                      const std::unordered_set<std::string>& stopwords);

// Ranks every distinct token of the sequence by TextRank score over the
// sliding-window co-occurrence graph. Returns (token, score) pairs sorted by
// score descending, token ascending; scores are normalized to sum to 1.
std::vector<std::pair<std::string, double>> rank_tokens(
    const std::vector<std::string>& tokens, const TextRankConfig& cfg);

// Top-n TextRank keywords over the stemmed content tokens. Tagged kKeywords.
TermBag extract_keywords(std::string_view text,
                         const std::unordered_set<std::string>& stopwords,
                         const TextRankConfig& cfg);

struct ExternalTermStats {
  std::size_t lines = 0;
  std::size_t unknown_doc_skipped = 0;
};

// Reads pre-extracted terms from JSONL lines {"doc_id":..., "terms":[...]}.
// Only the externally produced channels are accepted; terms are stored
// verbatim as opaque strings. Lines naming a doc_id outside known_doc_ids are
// skipped with a warning count.
std::unordered_map<std::string, TermBag> ingest_external_terms(
    const std::string& path, Channel channel,
    const std::unordered_set<std::string>& known_doc_ids,
    ExternalTermStats* stats = nullptr);

// Multiset union of the given bags restricted to enabled channels.
TermBag combine(const std::vector<TermBag>& bags,
                const std::set<Channel>& enabled);

// Channel set for a named representation: stems, keywords, multi (ners, nps
// and keywords together), all, or a single channel name.
std::set<Channel> representation_channels(std::string_view name);

// Per-document external term bags keyed by channel.
using ExternalTerms =
    std::map<Channel, std::unordered_map<std::string, TermBag>>;

// Full representation of one document's text under cfg: native extractors for
// stems/keywords plus any externally ingested bags for the enabled channels.
TermBag document_terms(const std::string& title, const std::string& abstract,
                       const std::string& doc_id, const ReprConfig& cfg,
                       const ExternalTerms& external = {});

}  // namespace semidx
