#include "semidx/stopwords.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <stdexcept>

namespace semidx {

namespace {

// Classic English list. Contracted forms are stored as the fragments the
// tokenizer actually produces ("don't" tokenizes to "don", "t").
constexpr const char* kDefaultList[] = {
    "i",       "me",      "my",       "myself",  "we",        "our",
    "ours",    "ourselves", "you",    "your",    "yours",     "yourself",
    "yourselves", "he",   "him",      "his",     "himself",   "she",
    "her",     "hers",    "herself",  "it",      "its",       "itself",
    "they",    "them",    "their",    "theirs",  "themselves", "what",
    "which",   "who",     "whom",     "this",    "that",      "these",
    "those",   "am",      "is",       "are",     "was",       "were",
    "be",      "been",    "being",    "have",    "has",       "had",
    "having",  "do",      "does",     "did",     "doing",     "a",
    "an",      "the",     "and",      "but",     "if",        "or",
    "because", "as",      "until",    "while",   "of",        "at",
    "by",      "for",     "with",     "about",   "against",   "between",
    "into",    "through", "during",   "before",  "after",     "above",
    "below",   "to",      "from",     "up",      "down",      "in",
    "out",     "on",      "off",      "over",    "under",     "again",
    "further", "then",    "once",     "here",    "there",     "when",
    "where",   "why",     "how",      "all",     "any",       "both",
    "each",    "few",     "more",     "most",    "other",     "some",
    "such",    "no",      "nor",      "not",     "only",      "own",
    "same",    "so",      "than",     "too",     "very",      "s",
    "t",       "can",     "will",     "just",    "don",       "should",
    "now",     "d",       "ll",       "m",       "o",         "re",
    "ve",      "y",       "ain",      "aren",    "couldn",    "didn",
    "doesn",   "hadn",    "hasn",     "haven",   "isn",       "ma",
    "mightn",  "mustn",   "needn",    "shan",    "shouldn",   "wasn",
    "weren",   "won",     "wouldn",
};

}  // namespace

const std::unordered_set<std::string>& default_stopwords() {
  static const std::unordered_set<std::string> set(std::begin(kDefaultList),
                                                   std::end(kDefaultList));
  return set;
}

std::unordered_set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open stopword file: " + path);
  std::unordered_set<std::string> set;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                             line.back() == '\t')) {
      line.pop_back();
    }
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    line.erase(0, start);
    if (line.empty() || line[0] == '#') continue;
    std::transform(line.begin(), line.end(), line.begin(), [](unsigned char c) {
      return static_cast<char>(std::tolower(c));
    });
    set.insert(line);
  }
  return set;
}

}  // namespace semidx
