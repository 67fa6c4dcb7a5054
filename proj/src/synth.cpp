#include "semidx/synth.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "semidx/rng.hpp"

namespace semidx {

namespace {

// Consonant-only alphabet, no 's' and no 'y': words built from it carry no
// vowel, so the stemmer passes them through unchanged and none of them can
// collide with a stopword.
constexpr char kAlphabet[] = "bcdfghjklmnpqrtvwxz";
constexpr std::size_t kAlphabetSize = sizeof(kAlphabet) - 1;

std::string random_word(Rng& rng) {
  const std::size_t len = 4 + rng.next_below(4);
  std::string w(len, '\0');
  for (auto& c : w) c = kAlphabet[rng.next_below(kAlphabetSize)];
  return w;
}

std::vector<std::string> unique_words(Rng& rng, std::size_t count,
                                      std::unordered_set<std::string>& used) {
  std::vector<std::string> words;
  words.reserve(count);
  while (words.size() < count) {
    std::string w = random_word(rng);
    if (used.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

std::string two_digits(std::size_t v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

}  // namespace

void validate_synth_config(const SynthConfig& config) {
  std::vector<std::string> faults;
  if (config.docs == 0) faults.push_back("docs must be positive");
  if (config.clusters == 0) faults.push_back("clusters must be positive");
  if (config.labels < config.clusters) {
    faults.push_back("labels must be at least clusters");
  }
  if (config.words_per_label == 0) {
    faults.push_back("words_per_label must be positive");
  }
  if (config.title_words == 0 && config.abstract_words == 0) {
    faults.push_back("title_words and abstract_words cannot both be zero");
  }
  if (config.min_labels_per_doc == 0) {
    faults.push_back("min_labels_per_doc must be positive");
  }
  if (config.max_labels_per_doc < config.min_labels_per_doc) {
    faults.push_back("max_labels_per_doc must be at least min_labels_per_doc");
  }
  if (config.clusters > 0 &&
      config.max_labels_per_doc > config.labels / config.clusters) {
    faults.push_back(
        "max_labels_per_doc cannot exceed the labels in one cluster block");
  }
  if (!(config.noise_word_rate >= 0.0 && config.noise_word_rate < 1.0)) {
    faults.push_back("noise_word_rate must lie in [0, 1)");
  }
  if (config.vector_dim == 0) faults.push_back("vector_dim must be positive");
  if (!faults.empty()) {
    std::string joined;
    for (const auto& f : faults) {
      if (!joined.empty()) joined += "; ";
      joined += f;
    }
    throw std::invalid_argument("invalid synthetic corpus config: " + joined);
  }
}

SynthResult make_synthetic(const SynthConfig& config) {
  validate_synth_config(config);

  SynthResult result;

  // Label id i sits in cluster i mod clusters; descriptors encode that
  // placement for readability of dumps.
  for (std::size_t i = 0; i < config.labels; ++i) {
    const std::size_t cluster = i % config.clusters;
    const std::size_t ordinal = i / config.clusters;
    result.vocabulary.intern("topic-" + two_digits(cluster) + "-" +
                             two_digits(ordinal));
  }

  std::vector<std::vector<LabelId>> blocks(config.clusters);
  for (std::size_t i = 0; i < config.labels; ++i) {
    blocks[i % config.clusters].push_back(static_cast<LabelId>(i));
  }

  // Word pools. All pools are disjoint so a token names exactly one label
  // (or none, for filler).
  std::unordered_set<std::string> used;
  Rng word_rng(mix_seed(config.seed, 1));
  std::vector<std::vector<std::string>> label_words(config.labels);
  for (std::size_t i = 0; i < config.labels; ++i) {
    label_words[i] = unique_words(word_rng, config.words_per_label, used);
  }
  const std::vector<std::string> filler =
      unique_words(word_rng, config.shared_words, used);

  // Cluster centers for the dense companion vectors.
  Rng center_rng(mix_seed(config.seed, 2));
  std::vector<std::vector<double>> centers(config.clusters);
  for (auto& center : centers) {
    center.resize(config.vector_dim);
    for (auto& v : center) v = center_rng.next_normal();
  }

  for (std::size_t d = 0; d < config.docs; ++d) {
    Rng rng(mix_seed(config.seed, 1000 + d));
    const std::size_t cluster = d % config.clusters;

    const std::size_t span =
        config.max_labels_per_doc - config.min_labels_per_doc + 1;
    const std::size_t count =
        config.min_labels_per_doc + rng.next_below(span);
    std::vector<LabelId> pick = blocks[cluster];
    rng.shuffle(pick);
    pick.resize(count);
    std::sort(pick.begin(), pick.end());

    auto draw_token = [&]() -> const std::string& {
      if (config.shared_words > 0 && rng.next_unit() < config.noise_word_rate) {
        return filler[rng.next_below(filler.size())];
      }
      const LabelId label = pick[rng.next_below(pick.size())];
      return label_words[label][rng.next_below(config.words_per_label)];
    };
    auto draw_text = [&](std::size_t n) {
      std::string text;
      for (std::size_t i = 0; i < n; ++i) {
        if (!text.empty()) text += ' ';
        text += draw_token();
      }
      return text;
    };

    Document doc;
    std::string id = std::to_string(d);
    doc.id = "syn-" + std::string(6 - std::min<std::size_t>(6, id.size()), '0') + id;
    doc.title = draw_text(config.title_words);
    doc.abstract_text = draw_text(config.abstract_words);
    doc.labels = std::move(pick);

    std::vector<float> vec(config.vector_dim);
    for (std::size_t j = 0; j < config.vector_dim; ++j) {
      vec[j] = static_cast<float>(centers[cluster][j] +
                                  0.25 * rng.next_normal());
    }
    result.vectors.push_back(std::move(vec));
    result.corpus.add(std::move(doc));
  }

  return result;
}

}  // namespace semidx
