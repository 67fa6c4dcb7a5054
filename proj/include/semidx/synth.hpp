#pragma once

#include <cstdint>
#include <vector>

#include "semidx/corpus.hpp"

namespace semidx {

// Clustered synthetic corpus generator. Labels are split into per-cluster
// blocks (label id i belongs to cluster i mod clusters) and only co-occur
// within their block; every label owns a small private vocabulary whose
// words appear in exactly the documents carrying that label. Documents in
// the same cluster therefore share both words and labels, which is what
// gives nearest-neighbor prediction something real to find.
struct SynthConfig {
  std::size_t docs = 2000;
  std::size_t labels = 200;
  std::size_t clusters = 20;
  std::uint64_t seed = 0;

  std::size_t words_per_label = 6;
  std::size_t shared_words = 60;   // topic-free filler vocabulary
  std::size_t title_words = 8;
  std::size_t abstract_words = 60;
  std::size_t min_labels_per_doc = 2;
  std::size_t max_labels_per_doc = 5;
  double noise_word_rate = 0.15;  // chance a token comes from the filler pool
  std::size_t vector_dim = 32;    // dense companion vectors
};

// Throws with a message listing every violated field.
void validate_synth_config(const SynthConfig& config);

struct SynthResult {
  Corpus corpus;
  LabelVocabulary vocabulary;
  // One row per document, corpus order, cluster center plus noise.
  std::vector<std::vector<float>> vectors;
};

// Fully deterministic for a given config; every document draws from its own
// seed stream, so the output is independent of generation order.
SynthResult make_synthetic(const SynthConfig& config);

}  // namespace semidx
