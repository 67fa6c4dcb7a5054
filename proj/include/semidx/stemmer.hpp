#pragma once

#include <string>
#include <string_view>

namespace semidx {

// Reduces an English word to its stem with the Snowball English (Porter2)
// algorithm. The input is expected to be lowercase; bytes outside a-z are
// treated as consonants, so tokens containing digits pass through the same
// suffix rules deterministically. Words of length <= 2 are returned as is.
std::string stem_english(std::string_view word);

}  // namespace semidx
