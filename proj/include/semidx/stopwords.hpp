#pragma once

#include <string>
#include <unordered_set>

namespace semidx {

// The classic English stopword list. Returned set is built once and shared.
const std::unordered_set<std::string>& default_stopwords();

// Loads a stopword file: one token per line, blank lines and lines starting
// with '#' ignored, entries lowercased. Throws on unreadable files.
std::unordered_set<std::string> load_stopwords(const std::string& path);

}  // namespace semidx
