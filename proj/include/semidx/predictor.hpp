#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "semidx/corpus.hpp"
#include "semidx/label_ae.hpp"
#include "semidx/types.hpp"

namespace semidx {

using GoldMap = std::unordered_map<std::string, LabelSet>;

// How neighbor distances turn into averaging weights for the latent mix:
// DIFFERENCE uses 1 - d (clamped at zero), SQUARE uses 1 / d^2.
enum class WeightingScheme { kDifference, kSquare };

WeightingScheme weighting_from_name(std::string_view name);
const char* weighting_name(WeightingScheme s);

// Decides which decoder scores survive: either every label whose score
// exceeds a fixed threshold, or the top r labels with r estimated from the
// neighborhood. The two modes are mutually exclusive.
struct Cutoff {
  enum class Mode { kThreshold, kTopR };
  Mode mode = Mode::kThreshold;
  double threshold = 0.5;  // meaningful in kThreshold mode only

  static Cutoff make_threshold(double t) {
    return Cutoff{Mode::kThreshold, t};
  }
  static Cutoff make_top_r() { return Cutoff{Mode::kTopR, 0.0}; }
};

struct Prediction {
  // Candidates by (score desc, label-id asc); scores are strictly ordered
  // under that comparison.
  std::vector<std::pair<LabelId, double>> ranked;
  LabelSet chosen;  // sorted ascending
  // The neighborhood count estimate r when one drove the cutoff, otherwise
  // the size of chosen.
  std::uint32_t estimated_count = 0;
};

// Mean gold-label count over the neighbors, rounded half up and clamped to
// [1, 38]. With weighted set, neighbors count in proportion to 1 - distance
// (clamped at zero, uniform fallback when all weights vanish).
std::uint32_t estimate_count(const std::vector<Neighbor>& neighbors,
                             const GoldMap& gold, bool weighted = false);

// Majority voting over the neighbors' gold labels: every label present in at
// least one neighbor scores (#neighbors with it) - (#neighbors without it);
// chosen = top r. With weighted set, each neighbor votes with weight
// 1 - distance (clamped at zero) instead of 1.
Prediction vote(const std::vector<Neighbor>& neighbors, const GoldMap& gold,
                std::uint32_t r, bool weighted = false);

// Counters for conditions worth surfacing but not fatal.
struct AePredictStats {
  std::uint64_t clamped_weights = 0;    // DIFFERENCE weights cut at zero
  std::uint64_t uniform_fallbacks = 0;  // all weights zero, used uniform
};

// Label prediction through the autoencoder: encode each neighbor's gold set,
// average the latent vectors under the weighting scheme, decode, rank all
// labels by score, apply the cutoff.
Prediction ae_predict(const AEModel& model,
                      const std::vector<Neighbor>& neighbors,
                      const GoldMap& gold, WeightingScheme scheme,
                      const Cutoff& cutoff, AePredictStats* stats = nullptr);

// Pads the autoencoder prediction with voting-kNN labels: walk knn ranked
// order, adding unseen labels until the chosen set is as large as the voting
// one. A larger AE prediction passes through unchanged. Ranked scores of the
// result are ordinal (position only); the two input scales do not compare.
Prediction mix(const Prediction& ae_pred, const Prediction& knn_pred);

// JSONL export, one object per document:
// {"doc_id": ..., "chosen": [descriptor, ...], "ranked": [[descriptor,
// score], ...]}. Ranked lists longer than ranked_cap are truncated; chosen
// never is.
void write_predictions_jsonl(
    const std::string& path,
    const std::vector<std::pair<std::string, Prediction>>& predictions,
    const LabelVocabulary& vocab, std::size_t ranked_cap = 100);

std::vector<std::pair<std::string, Prediction>> read_predictions_jsonl(
    const std::string& path, const LabelVocabulary& vocab);

}  // namespace semidx
