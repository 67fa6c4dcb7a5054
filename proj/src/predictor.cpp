#include "semidx/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace semidx {

namespace {

// Upper clamp for the neighborhood count estimate: twice the largest gold
// set the estimator is expected to meet, so a degenerate neighborhood cannot
// blow up the prediction size.
constexpr std::uint32_t kMaxEstimatedLabels = 38;

const LabelSet& neighbor_labels(const Neighbor& n, const GoldMap& gold) {
  const auto it = gold.find(n.doc_id);
  if (it == gold.end()) {
    throw std::out_of_range("no gold labels for neighbor document " +
                            n.doc_id);
  }
  return it->second;
}

double difference_weight(double distance) {
  return std::max(1.0 - distance, 0.0);
}

// Sort candidates by (score desc, label-id asc); ids are unique, so the
// order is strict.
void sort_ranked(std::vector<std::pair<LabelId, double>>& ranked) {
  std::sort(ranked.begin(), ranked.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
}

}  // namespace

WeightingScheme weighting_from_name(std::string_view name) {
  if (name == "difference") return WeightingScheme::kDifference;
  if (name == "square") return WeightingScheme::kSquare;
  throw std::invalid_argument("unknown weighting scheme: " +
                              std::string(name));
}

const char* weighting_name(WeightingScheme s) {
  switch (s) {
    case WeightingScheme::kDifference:
      return "difference";
    case WeightingScheme::kSquare:
      return "square";
  }
  throw std::logic_error("invalid weighting scheme value");
}

std::uint32_t estimate_count(const std::vector<Neighbor>& neighbors,
                             const GoldMap& gold, bool weighted) {
  if (neighbors.empty()) {
    throw std::invalid_argument("neighbor list is empty");
  }
  double mean = 0.0;
  if (!weighted) {
    double total = 0.0;
    for (const auto& n : neighbors) {
      total += static_cast<double>(neighbor_labels(n, gold).size());
    }
    mean = total / static_cast<double>(neighbors.size());
  } else {
    double weight_sum = 0.0;
    double weighted_total = 0.0;
    for (const auto& n : neighbors) {
      const double w = difference_weight(n.distance);
      weight_sum += w;
      weighted_total += w * static_cast<double>(neighbor_labels(n, gold).size());
    }
    if (weight_sum > 0.0) {
      mean = weighted_total / weight_sum;
    } else {
      // Every neighbor is at clamp distance; fall back to the plain mean.
      double total = 0.0;
      for (const auto& n : neighbors) {
        total += static_cast<double>(neighbor_labels(n, gold).size());
      }
      mean = total / static_cast<double>(neighbors.size());
    }
  }
  const double rounded = std::floor(mean + 0.5);  // round half up
  if (rounded < 1.0) return 1;
  if (rounded > kMaxEstimatedLabels) return kMaxEstimatedLabels;
  return static_cast<std::uint32_t>(rounded);
}

Prediction vote(const std::vector<Neighbor>& neighbors, const GoldMap& gold,
                std::uint32_t r, bool weighted) {
  if (neighbors.empty()) {
    throw std::invalid_argument("neighbor list is empty");
  }

  // support = total weight of neighbors carrying the label; the score is
  // support minus the weight of neighbors lacking it, i.e. 2*support - total.
  std::unordered_map<LabelId, double> support;
  double total_weight = 0.0;
  for (const auto& n : neighbors) {
    const double w = weighted ? difference_weight(n.distance) : 1.0;
    total_weight += w;
    for (LabelId id : neighbor_labels(n, gold)) support[id] += w;
  }

  Prediction pred;
  pred.ranked.reserve(support.size());
  for (const auto& [id, s] : support) {
    pred.ranked.emplace_back(id, 2.0 * s - total_weight);
  }
  sort_ranked(pred.ranked);

  const std::size_t take = std::min<std::size_t>(r, pred.ranked.size());
  pred.chosen.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    pred.chosen.push_back(pred.ranked[i].first);
  }
  std::sort(pred.chosen.begin(), pred.chosen.end());
  pred.estimated_count = r;
  return pred;
}

Prediction ae_predict(const AEModel& model,
                      const std::vector<Neighbor>& neighbors,
                      const GoldMap& gold, WeightingScheme scheme,
                      const Cutoff& cutoff, AePredictStats* stats) {
  if (neighbors.empty()) {
    throw std::invalid_argument("neighbor list is empty");
  }

  std::vector<double> weights;
  weights.reserve(neighbors.size());
  std::uint64_t clamped = 0;
  for (const auto& n : neighbors) {
    if (!(n.distance > 0.0)) {
      throw std::invalid_argument("neighbor distance must be positive, got " +
                                  std::to_string(n.distance) + " for " +
                                  n.doc_id);
    }
    if (scheme == WeightingScheme::kDifference) {
      const double w = 1.0 - n.distance;
      if (w < 0.0) ++clamped;
      weights.push_back(std::max(w, 0.0));
    } else {
      weights.push_back(1.0 / (n.distance * n.distance));
    }
  }

  double weight_sum = 0.0;
  for (double w : weights) weight_sum += w;
  bool uniform_fallback = false;
  if (weight_sum == 0.0) {
    // All neighbors sit at or beyond the unit distance under DIFFERENCE;
    // an unweighted average is the only sensible value left.
    uniform_fallback = true;
    std::fill(weights.begin(), weights.end(), 1.0);
    weight_sum = static_cast<double>(weights.size());
    if (stats == nullptr) {
      std::fprintf(stderr,
                   "[predict] warning: all neighbor weights were zero; "
                   "using uniform weights\n");
    }
  }
  if (stats != nullptr) {
    stats->clamped_weights += clamped;
    if (uniform_fallback) ++stats->uniform_fallbacks;
  }

  // Weighted latent average in double, cast to the model scalar for decode.
  const std::size_t dim = model.config().embedding_dim;
  std::vector<double> acc(dim, 0.0);
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    const auto z = model.encode_labels(neighbor_labels(neighbors[i], gold));
    const double w = weights[i] / weight_sum;
    for (std::size_t j = 0; j < dim; ++j) {
      acc[j] += w * static_cast<double>(z[j]);
    }
  }
  std::vector<float> latent(dim);
  for (std::size_t j = 0; j < dim; ++j) latent[j] = static_cast<float>(acc[j]);

  const auto scores = model.decode(latent);

  Prediction pred;
  pred.ranked.reserve(scores.size());
  for (std::size_t id = 0; id < scores.size(); ++id) {
    pred.ranked.emplace_back(static_cast<LabelId>(id),
                             static_cast<double>(scores[id]));
  }
  sort_ranked(pred.ranked);

  if (cutoff.mode == Cutoff::Mode::kThreshold) {
    for (std::size_t id = 0; id < scores.size(); ++id) {
      if (static_cast<double>(scores[id]) > cutoff.threshold) {
        pred.chosen.push_back(static_cast<LabelId>(id));
      }
    }
    pred.estimated_count = static_cast<std::uint32_t>(pred.chosen.size());
  } else {
    const std::uint32_t r = estimate_count(neighbors, gold);
    const std::size_t take = std::min<std::size_t>(r, pred.ranked.size());
    for (std::size_t i = 0; i < take; ++i) {
      pred.chosen.push_back(pred.ranked[i].first);
    }
    std::sort(pred.chosen.begin(), pred.chosen.end());
    pred.estimated_count = r;
  }
  return pred;
}

Prediction mix(const Prediction& ae_pred, const Prediction& knn_pred) {
  const std::size_t target = knn_pred.chosen.size();
  if (ae_pred.chosen.size() >= target) return ae_pred;

  std::unordered_set<LabelId> taken(ae_pred.chosen.begin(),
                                    ae_pred.chosen.end());

  // Kept labels in presentation order: AE picks by their own score first,
  // then voting picks in voting order.
  std::vector<LabelId> ordered;
  ordered.reserve(target);
  for (const auto& [id, score] : ae_pred.ranked) {
    if (taken.count(id) != 0 &&
        std::find(ordered.begin(), ordered.end(), id) == ordered.end()) {
      ordered.push_back(id);
    }
  }
  for (const auto& [id, score] : knn_pred.ranked) {
    if (taken.size() >= target) break;
    if (taken.insert(id).second) ordered.push_back(id);
  }

  Prediction out;
  out.ranked.reserve(ordered.size());
  // Ordinal scores: the source scales (sigmoid outputs vs vote counts) do
  // not compare, so only the position survives.
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    out.ranked.emplace_back(ordered[i],
                            static_cast<double>(ordered.size() - i));
  }
  out.chosen.assign(taken.begin(), taken.end());
  std::sort(out.chosen.begin(), out.chosen.end());
  out.estimated_count = static_cast<std::uint32_t>(out.chosen.size());
  return out;
}

void write_predictions_jsonl(
    const std::string& path,
    const std::vector<std::pair<std::string, Prediction>>& predictions,
    const LabelVocabulary& vocab, std::size_t ranked_cap) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& [doc_id, pred] : predictions) {
    nlohmann::json obj;
    obj["doc_id"] = doc_id;
    auto& chosen = obj["chosen"] = nlohmann::json::array();
    for (LabelId id : pred.chosen) chosen.push_back(vocab.descriptor(id));
    auto& ranked = obj["ranked"] = nlohmann::json::array();
    const std::size_t take = std::min(ranked_cap, pred.ranked.size());
    for (std::size_t i = 0; i < take; ++i) {
      ranked.push_back(nlohmann::json::array(
          {vocab.descriptor(pred.ranked[i].first), pred.ranked[i].second}));
    }
    os << obj.dump() << '\n';
  }
  os.flush();
  if (!os) throw std::runtime_error("failed writing predictions to " + path);
}

std::vector<std::pair<std::string, Prediction>> read_predictions_jsonl(
    const std::string& path, const LabelVocabulary& vocab) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);

  auto lookup = [&](const std::string& descriptor,
                    std::size_t line_no) -> LabelId {
    const auto id = vocab.find(descriptor);
    if (!id) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": unknown descriptor \"" + descriptor + "\"");
    }
    return *id;
  };

  std::vector<std::pair<std::string, Prediction>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
    try {
      Prediction pred;
      for (const auto& d : obj.at("chosen")) {
        pred.chosen.push_back(lookup(d.get<std::string>(), line_no));
      }
      std::sort(pred.chosen.begin(), pred.chosen.end());
      pred.chosen.erase(std::unique(pred.chosen.begin(), pred.chosen.end()),
                        pred.chosen.end());
      for (const auto& entry : obj.at("ranked")) {
        pred.ranked.emplace_back(lookup(entry.at(0).get<std::string>(), line_no),
                                 entry.at(1).get<double>());
      }
      pred.estimated_count = static_cast<std::uint32_t>(pred.chosen.size());
      out.emplace_back(obj.at("doc_id").get<std::string>(), std::move(pred));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return out;
}

}  // namespace semidx
