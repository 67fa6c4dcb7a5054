#include "semidx/stemmer.hpp"

#include <array>
#include <cstddef>

// Snowball English stemmer (Porter2). The implementation follows the
// published algorithm description step by step. Regions R1/R2 are kept as
// byte offsets into the working string; an offset >= length denotes the empty
// region. The letter y is marked as the consonant 'Y' when it appears at the
// start of the word or after a vowel, and restored at the end.

namespace semidx {

namespace {

bool is_vowel(char c) {
  switch (c) {
    case 'a':
    case 'e':
    case 'i':
    case 'o':
    case 'u':
    case 'y':
      return true;
    default:
      return false;
  }
}

bool ends_with(const std::string& w, std::string_view suf) {
  return w.size() >= suf.size() &&
         w.compare(w.size() - suf.size(), suf.size(), suf) == 0;
}

// True if w[from, to) contains at least one vowel.
bool contains_vowel(const std::string& w, std::size_t from, std::size_t to) {
  for (std::size_t i = from; i < to && i < w.size(); ++i) {
    if (is_vowel(w[i])) return true;
  }
  return false;
}

// Region start: the position just past the first non-vowel that follows a
// vowel, scanning from `from`. Returns w.size() when no such pattern exists.
std::size_t mark_region(const std::string& w, std::size_t from) {
  std::size_t i = from;
  while (i < w.size() && !is_vowel(w[i])) ++i;
  if (i == w.size()) return w.size();
  ++i;  // past the vowel
  while (i < w.size() && is_vowel(w[i])) ++i;
  if (i == w.size()) return w.size();
  return i + 1;  // past the non-vowel
}

// Short-syllable test at position `end`, looking left: either
// consonant-vowel-consonant where the last consonant is not w, x, or Y, or a
// vowel-consonant pair that starts the word.
bool short_syllable_before(const std::string& w, std::size_t end) {
  if (end >= 3) {
    const char c = w[end - 1];
    if (!is_vowel(c) && c != 'w' && c != 'x' && c != 'Y' &&
        is_vowel(w[end - 2]) && !is_vowel(w[end - 3])) {
      return true;
    }
  }
  if (end == 2 && is_vowel(w[0]) && !is_vowel(w[1])) return true;
  return false;
}

bool is_double_ending(const std::string& w) {
  if (w.size() < 2) return false;
  const char c = w[w.size() - 1];
  if (c != w[w.size() - 2]) return false;
  switch (c) {
    case 'b':
    case 'd':
    case 'f':
    case 'g':
    case 'm':
    case 'n':
    case 'p':
    case 'r':
    case 't':
      return true;
    default:
      return false;
  }
}

bool valid_li_ending(char c) {
  switch (c) {
    case 'c':
    case 'd':
    case 'e':
    case 'g':
    case 'h':
    case 'k':
    case 'm':
    case 'n':
    case 'r':
    case 't':
      return true;
    default:
      return false;
  }
}

struct Stem {
  std::string w;
  std::size_t p1 = 0;  // R1 start
  std::size_t p2 = 0;  // R2 start

  bool in_r1(std::size_t pos) const { return pos >= p1; }
  bool in_r2(std::size_t pos) const { return pos >= p2; }

  void replace_suffix(std::size_t len, std::string_view repl) {
    w.replace(w.size() - len, len, repl);
  }
  void drop_suffix(std::size_t len) { w.erase(w.size() - len); }
};

// Whole-word special cases applied before any suffix step.
const char* exceptional_form(const std::string& w) {
  struct Entry {
    const char* word;
    const char* stem;
  };
  static constexpr std::array<Entry, 18> kTable{{
      {"skis", "ski"},
      {"skies", "sky"},
      {"dying", "die"},
      {"lying", "lie"},
      {"tying", "tie"},
      {"idly", "idl"},
      {"gently", "gentl"},
      {"ugly", "ugli"},
      {"early", "earli"},
      {"only", "onli"},
      {"singly", "singl"},
      {"sky", "sky"},
      {"news", "news"},
      {"howe", "howe"},
      {"atlas", "atlas"},
      {"cosmos", "cosmos"},
      {"bias", "bias"},
      {"andes", "andes"},
  }};
  for (const auto& e : kTable) {
    if (w == e.word) return e.stem;
  }
  return nullptr;
}

// Forms left untouched once step 1a has run (their endings look like
// inflections but are not).
bool invariant_after_1a(const std::string& w) {
  static constexpr std::array<const char*, 8> kWords{
      "inning", "outing",  "canning", "herring",
      "earring", "proceed", "exceed",  "succeed",
  };
  for (const char* s : kWords) {
    if (w == s) return true;
  }
  return false;
}

// Step 0: strip the longest of the possessive endings ', 's, 's'.
void step0(Stem& s) {
  if (ends_with(s.w, "'s'")) {
    s.drop_suffix(3);
  } else if (ends_with(s.w, "'s")) {
    s.drop_suffix(2);
  } else if (ends_with(s.w, "'")) {
    s.drop_suffix(1);
  }
}

// Step 1a: plural endings.
void step1a(Stem& s) {
  if (ends_with(s.w, "sses")) {
    s.replace_suffix(4, "ss");
    return;
  }
  if (ends_with(s.w, "ied") || ends_with(s.w, "ies")) {
    // Replace by i after a stem of more than one letter, else by ie.
    s.replace_suffix(3, s.w.size() - 3 > 1 ? "i" : "ie");
    return;
  }
  if (ends_with(s.w, "us") || ends_with(s.w, "ss")) return;
  if (ends_with(s.w, "s")) {
    // Delete only when a vowel occurs before the letter preceding the s.
    if (s.w.size() >= 3 && contains_vowel(s.w, 0, s.w.size() - 2)) {
      s.drop_suffix(1);
    }
  }
}

// Step 1b: -ed/-ing endings with restoration of lost e or doubled letter.
void step1b(Stem& s) {
  static constexpr std::array<std::string_view, 2> kEe{"eedly", "eed"};
  for (std::string_view suf : kEe) {
    if (ends_with(s.w, suf)) {
      if (s.in_r1(s.w.size() - suf.size())) s.replace_suffix(suf.size(), "ee");
      return;
    }
  }
  static constexpr std::array<std::string_view, 4> kDel{"ingly", "edly", "ing",
                                                        "ed"};
  for (std::string_view suf : kDel) {
    if (!ends_with(s.w, suf)) continue;
    if (!contains_vowel(s.w, 0, s.w.size() - suf.size())) return;
    s.drop_suffix(suf.size());
    if (ends_with(s.w, "at") || ends_with(s.w, "bl") || ends_with(s.w, "iz")) {
      s.w += 'e';
    } else if (is_double_ending(s.w)) {
      s.drop_suffix(1);
    } else if (s.p1 == s.w.size() && short_syllable_before(s.w, s.w.size())) {
      s.w += 'e';
    }
    return;
  }
}

// Step 1c: final y/Y preceded by a non-vowel that is not the first letter.
void step1c(Stem& s) {
  if (s.w.size() < 3) return;
  const char c = s.w.back();
  if ((c == 'y' || c == 'Y') && !is_vowel(s.w[s.w.size() - 2])) {
    s.w.back() = 'i';
  }
}

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
};

// Applies the longest matching rule if the suffix lies in R1. Returns after
// the first (longest) match whether or not the region condition held.
void step2(Stem& s) {
  static constexpr std::array<Rule, 21> kRules{{
      {"ational", "ate"},
      {"fulness", "ful"},
      {"iveness", "ive"},
      {"ization", "ize"},
      {"ousness", "ous"},
      {"biliti", "ble"},
      {"lessli", "less"},
      {"tional", "tion"},
      {"alism", "al"},
      {"aliti", "al"},
      {"ation", "ate"},
      {"entli", "ent"},
      {"fulli", "ful"},
      {"iviti", "ive"},
      {"ousli", "ous"},
      {"abli", "able"},
      {"alli", "al"},
      {"anci", "ance"},
      {"ator", "ate"},
      {"enci", "ence"},
      {"izer", "ize"},
  }};
  for (const Rule& r : kRules) {
    if (ends_with(s.w, r.suffix)) {
      const std::size_t start = s.w.size() - r.suffix.size();
      if (s.in_r1(start)) s.replace_suffix(r.suffix.size(), r.replacement);
      return;
    }
  }
  if (ends_with(s.w, "bli")) {
    if (s.in_r1(s.w.size() - 3)) s.replace_suffix(3, "ble");
    return;
  }
  if (ends_with(s.w, "ogi")) {
    if (s.in_r1(s.w.size() - 3) && s.w.size() >= 4 && s.w[s.w.size() - 4] == 'l') {
      s.replace_suffix(3, "og");
    }
    return;
  }
  if (ends_with(s.w, "li")) {
    if (s.in_r1(s.w.size() - 2) && s.w.size() >= 3 &&
        valid_li_ending(s.w[s.w.size() - 3])) {
      s.drop_suffix(2);
    }
  }
}

void step3(Stem& s) {
  static constexpr std::array<Rule, 9> kRules{{
      {"ational", "ate"},
      {"tional", "tion"},
      {"ative", ""},  // deleted only when inside R2, tested below
      {"alize", "al"},
      {"icate", "ic"},
      {"iciti", "ic"},
      {"ical", "ic"},
      {"ness", ""},
      {"ful", ""},
  }};
  for (const Rule& r : kRules) {
    if (!ends_with(s.w, r.suffix)) continue;
    const std::size_t start = s.w.size() - r.suffix.size();
    if (r.suffix == "ative") {
      if (s.in_r2(start)) s.drop_suffix(5);
    } else if (s.in_r1(start)) {
      s.replace_suffix(r.suffix.size(), r.replacement);
    }
    return;
  }
}

void step4(Stem& s) {
  // Longest match first; ion carries an extra preceding-letter condition and,
  // like every entry, blocks shorter candidates even when its condition fails.
  static constexpr std::array<std::string_view, 18> kSuffixes{
      "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ism",
      "ate",   "iti",  "ous",  "ive",  "ize",  "ion",  "al",  "er",  "ic",
  };
  for (std::string_view suf : kSuffixes) {
    if (!ends_with(s.w, suf)) continue;
    const std::size_t start = s.w.size() - suf.size();
    if (suf == "ion") {
      if (s.in_r2(start) && start >= 1 &&
          (s.w[start - 1] == 's' || s.w[start - 1] == 't')) {
        s.drop_suffix(3);
      }
    } else if (s.in_r2(start)) {
      s.drop_suffix(suf.size());
    }
    return;
  }
}

void step5(Stem& s) {
  if (ends_with(s.w, "e")) {
    const std::size_t pos = s.w.size() - 1;
    if (s.in_r2(pos) ||
        (s.in_r1(pos) && !short_syllable_before(s.w, pos))) {
      s.drop_suffix(1);
    }
    return;
  }
  if (ends_with(s.w, "l")) {
    const std::size_t pos = s.w.size() - 1;
    if (s.in_r2(pos) && s.w.size() >= 2 && s.w[s.w.size() - 2] == 'l') {
      s.drop_suffix(1);
    }
  }
}

}  // namespace

std::string stem_english(std::string_view word) {
  std::string w(word);
  if (const char* ex = exceptional_form(w)) return ex;
  if (w.size() <= 2) return w;

  if (w.front() == '\'') w.erase(0, 1);

  // Mark y as consonant where it cannot act as a vowel.
  if (!w.empty() && w.front() == 'y') w.front() = 'Y';
  for (std::size_t i = 1; i < w.size(); ++i) {
    if (w[i] == 'y' && is_vowel(w[i - 1])) w[i] = 'Y';
  }

  Stem s;
  s.w = std::move(w);
  // Words starting gener-, commun-, arsen- take R1 after that prefix.
  static constexpr std::array<std::string_view, 3> kPrefixes{"gener", "commun",
                                                             "arsen"};
  s.p1 = std::string::npos;
  for (std::string_view pre : kPrefixes) {
    if (s.w.size() >= pre.size() && s.w.compare(0, pre.size(), pre) == 0) {
      s.p1 = pre.size();
      break;
    }
  }
  if (s.p1 == std::string::npos) s.p1 = mark_region(s.w, 0);
  s.p2 = mark_region(s.w, s.p1);

  step0(s);
  step1a(s);
  if (!invariant_after_1a(s.w)) {
    step1b(s);
    step1c(s);
    step2(s);
    step3(s);
    step4(s);
    step5(s);
  }

  for (char& c : s.w) {
    if (c == 'Y') c = 'y';
  }
  return s.w;
}

}  // namespace semidx
