#include "semidx/textrep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "semidx/stemmer.hpp"

namespace semidx {

namespace {

bool is_token_char(unsigned char c) {
  if (c >= 0x80) return true;  // UTF-8 continuation or lead byte
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9');
}

char ascii_lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                : static_cast<char>(c);
}

// Stopword removal happens on the raw lowercased token, stemming afterwards.
std::vector<std::string> content_stems(
    std::string_view text, const std::unordered_set<std::string>& stopwords) {
  std::vector<std::string> out;
  for (std::string& tok : tokenize(text)) {
    if (stopwords.count(tok)) continue;
    out.push_back(stem_english(tok));
  }
  return out;
}

}  // namespace

const char* channel_name(Channel c) {
  switch (c) {
    case Channel::kStems:
      return "stems";
    case Channel::kLemmas:
      return "lemmas";
    case Channel::kNps:
      return "nps";
    case Channel::kDeps:
      return "deps";
    case Channel::kNers:
      return "ners";
    case Channel::kKeywords:
      return "keywords";
  }
  return "?";
}

Channel channel_from_name(std::string_view name) {
  for (Channel c : {Channel::kStems, Channel::kLemmas, Channel::kNps,
                    Channel::kDeps, Channel::kNers, Channel::kKeywords}) {
    if (name == channel_name(c)) return c;
  }
  throw std::runtime_error("unknown channel name: " + std::string(name));
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (is_token_char(c)) {
      cur += ascii_lower(c);
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

TermBag extract_stems(std::string_view text,
                      const std::unordered_set<std::string>& stopwords) {
  TermBag bag;
  for (std::string& s : content_stems(text, stopwords)) {
    bag.terms.push_back(Term{Channel::kStems, std::move(s)});
  }
  return bag;
}

std::vector<std::pair<std::string, double>> rank_tokens(
    const std::vector<std::string>& tokens, const TextRankConfig& cfg) {
  if (tokens.empty()) return {};
  if (cfg.damping <= 0.0 || cfg.damping >= 1.0) {
    throw std::runtime_error("damping factor must lie strictly in (0, 1)");
  }

  // Vertex ids follow the lexicographic order of the distinct tokens so that
  // the iteration (and any tie handling) is independent of input order.
  std::vector<std::string> vocab(tokens.begin(), tokens.end());
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  const std::size_t n = vocab.size();
  auto vertex_of = [&](const std::string& t) {
    return static_cast<std::size_t>(
        std::lower_bound(vocab.begin(), vocab.end(), t) - vocab.begin());
  };

  // Undirected co-occurrence graph: tokens closer than `window` positions in
  // the sequence gain one unit of edge weight. Self edges are skipped.
  std::vector<std::map<std::size_t, double>> adj(n);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::size_t a = vertex_of(tokens[i]);
    const std::size_t stop = std::min(tokens.size(), i + cfg.window);
    for (std::size_t j = i + 1; j < stop; ++j) {
      const std::size_t b = vertex_of(tokens[j]);
      if (a == b) continue;
      adj[a][b] += 1.0;
      adj[b][a] += 1.0;
    }
  }
  std::vector<double> out_weight(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    for (const auto& [u, w] : adj[v]) out_weight[v] += w;
  }

  // Weighted PageRank. Mass of vertices without edges is spread uniformly,
  // which keeps the total at 1 and matches a column-stochastic power
  // iteration on the same graph.
  std::vector<double> score(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n, 0.0);
  const double base = (1.0 - cfg.damping) / static_cast<double>(n);
  for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
    double dangling = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (out_weight[v] == 0.0) dangling += score[v];
    }
    double max_change = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      double in = dangling / static_cast<double>(n);
      for (const auto& [u, w] : adj[v]) {
        in += score[u] * w / out_weight[u];
      }
      next[v] = base + cfg.damping * in;
      max_change = std::max(max_change, std::abs(next[v] - score[v]));
    }
    score.swap(next);
    if (max_change < 1e-6) break;
  }

  double total = 0.0;
  for (double s : score) total += s;
  std::vector<std::pair<std::string, double>> ranked(n);
  for (std::size_t v = 0; v < n; ++v) {
    ranked[v] = {vocab[v], score[v] / total};
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return ranked;
}

TermBag extract_keywords(std::string_view text,
                         const std::unordered_set<std::string>& stopwords,
                         const TextRankConfig& cfg) {
  if (cfg.top_n < 1) throw std::runtime_error("textrank top_n must be >= 1");
  auto ranked = rank_tokens(content_stems(text, stopwords), cfg);
  TermBag bag;
  const std::size_t take = std::min(cfg.top_n, ranked.size());
  bag.terms.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    bag.terms.push_back(Term{Channel::kKeywords, ranked[i].first});
  }
  return bag;
}

std::unordered_map<std::string, TermBag> ingest_external_terms(
    const std::string& path, Channel channel,
    const std::unordered_set<std::string>& known_doc_ids,
    ExternalTermStats* stats) {
  switch (channel) {
    case Channel::kLemmas:
    case Channel::kNps:
    case Channel::kDeps:
    case Channel::kNers:
      break;
    default:
      throw std::runtime_error(
          std::string("channel ") + channel_name(channel) +
          " is extracted natively and cannot be loaded from a term file");
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open term file: " + path);

  std::unordered_map<std::string, TermBag> result;
  ExternalTermStats local;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ++local.lines;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": invalid JSON: " + e.what());
    }
    if (!rec.contains("doc_id") || !rec["doc_id"].is_string() ||
        !rec.contains("terms") || !rec["terms"].is_array()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected {\"doc_id\":..., \"terms\":[...]}");
    }
    const std::string doc_id = rec["doc_id"].get<std::string>();
    if (!known_doc_ids.count(doc_id)) {
      ++local.unknown_doc_skipped;
      continue;
    }
    TermBag& bag = result[doc_id];
    for (const auto& t : rec["terms"]) {
      if (!t.is_string()) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": terms must be strings");
      }
      std::string text = t.get<std::string>();
      if (text.empty()) continue;
      bag.terms.push_back(Term{channel, std::move(text)});
    }
  }
  if (stats) *stats = local;
  return result;
}

TermBag combine(const std::vector<TermBag>& bags,
                const std::set<Channel>& enabled) {
  TermBag out;
  for (const TermBag& bag : bags) {
    for (const Term& t : bag.terms) {
      if (enabled.count(t.channel)) out.terms.push_back(t);
    }
  }
  return out;
}

std::set<Channel> representation_channels(std::string_view name) {
  if (name == "multi") {
    return {Channel::kNers, Channel::kNps, Channel::kKeywords};
  }
  if (name == "all") {
    return {Channel::kStems, Channel::kLemmas, Channel::kNps, Channel::kDeps,
            Channel::kNers, Channel::kKeywords};
  }
  return {channel_from_name(name)};
}

TermBag document_terms(const std::string& title, const std::string& abstract,
                       const std::string& doc_id, const ReprConfig& cfg,
                       const ExternalTerms& external) {
  if (cfg.enabled.empty()) {
    throw std::runtime_error("representation has no enabled channels");
  }
  std::string text = title;
  if (!title.empty() && !abstract.empty()) text += ' ';
  text += abstract;

  std::vector<TermBag> bags;
  if (cfg.enabled.count(Channel::kStems)) {
    bags.push_back(extract_stems(text, cfg.stopwords));
  }
  if (cfg.enabled.count(Channel::kKeywords)) {
    bags.push_back(extract_keywords(text, cfg.stopwords, cfg.textrank));
  }
  for (const auto& [channel, by_doc] : external) {
    if (!cfg.enabled.count(channel)) continue;
    auto it = by_doc.find(doc_id);
    if (it != by_doc.end()) bags.push_back(it->second);
  }
  return combine(bags, cfg.enabled);
}

}  // namespace semidx
