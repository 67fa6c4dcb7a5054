#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace semidx {

// Dense integer handle into a LabelVocabulary. Ids are assigned in first-seen
// order and are stable for the lifetime of the vocabulary.
using LabelId = std::uint32_t;

// A set of label ids. Kept sorted ascending with no duplicates.
using LabelSet = std::vector<LabelId>;

// One retrieval result. `distance` is a pseudo-distance in [0, 1] for sparse
// retrieval and a true Euclidean distance for dense retrieval. `raw_score`
// preserves the similarity the distance was derived from (the BM25 score for
// sparse retrieval, negated distance for dense) so callers can re-rank or
// debug without losing information.
struct Neighbor {
  std::string doc_id;
  double distance = 0.0;
  double raw_score = 0.0;
};

// Lower clamp applied to normalized sparse distances so that downstream
// inverse-distance weighting never divides by zero.
inline constexpr double kMinDistance = 1e-6;

}  // namespace semidx
