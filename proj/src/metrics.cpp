#include "semidx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace semidx {

namespace {

std::size_t intersection_size(const LabelSet& a, const LabelSet& b) {
  // Both sets are sorted ascending.
  std::size_t i = 0, j = 0, hits = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++hits;
      ++i;
      ++j;
    }
  }
  return hits;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

MicroPRF micro_prf(const std::vector<std::pair<LabelSet, LabelSet>>& pairs) {
  if (pairs.empty()) {
    throw std::invalid_argument("no documents to evaluate");
  }
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (const auto& [predicted, gold] : pairs) {
    const std::size_t hits = intersection_size(predicted, gold);
    tp += hits;
    fp += predicted.size() - hits;
    fn += gold.size() - hits;
  }
  MicroPRF out;
  out.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  out.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  out.f1 = out.precision + out.recall > 0.0
               ? 2.0 * out.precision * out.recall /
                     (out.precision + out.recall)
               : 0.0;
  return out;
}

double precision_at(const std::vector<LabelId>& ranked, const LabelSet& gold,
                    std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be positive");
  const std::size_t depth = std::min(k, ranked.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < depth; ++i) {
    if (std::binary_search(gold.begin(), gold.end(), ranked[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(k);
}

double ndcg_at(const std::vector<LabelId>& ranked, const LabelSet& gold,
               std::size_t k) {
  if (k == 0) throw std::invalid_argument("k must be positive");
  if (gold.empty()) return 0.0;
  const std::size_t depth = std::min(k, ranked.size());
  double dcg = 0.0;
  for (std::size_t i = 0; i < depth; ++i) {
    if (std::binary_search(gold.begin(), gold.end(), ranked[i])) {
      dcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
  }
  const std::size_t ideal_depth = std::min(k, gold.size());
  double idcg = 0.0;
  for (std::size_t i = 0; i < ideal_depth; ++i) {
    idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg / idcg;
}

EvalReport evaluate(
    const std::vector<std::pair<std::string, Prediction>>& predictions,
    const GoldMap& gold, const std::vector<std::size_t>& ks) {
  if (predictions.empty()) {
    throw std::invalid_argument("no documents to evaluate");
  }
  for (std::size_t k : ks) {
    if (k == 0) throw std::invalid_argument("k must be positive");
  }

  // Accumulation follows doc-id order so the same float sums come out no
  // matter how the caller gathered the predictions.
  std::vector<std::size_t> order(predictions.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (predictions[a].first != predictions[b].first) {
      return predictions[a].first < predictions[b].first;
    }
    return a < b;
  });

  std::vector<std::pair<LabelSet, LabelSet>> pairs;
  pairs.reserve(predictions.size());
  std::map<std::size_t, double> p_sums, ndcg_sums;
  for (std::size_t k : ks) {
    p_sums[k] = 0.0;
    ndcg_sums[k] = 0.0;
  }
  std::uint64_t chosen_total = 0;

  for (std::size_t idx : order) {
    const auto& [doc_id, pred] = predictions[idx];
    const auto it = gold.find(doc_id);
    if (it == gold.end()) {
      throw std::out_of_range("no gold labels for document " + doc_id);
    }
    pairs.emplace_back(pred.chosen, it->second);
    chosen_total += pred.chosen.size();

    std::vector<LabelId> ranked_ids;
    ranked_ids.reserve(pred.ranked.size());
    for (const auto& [id, score] : pred.ranked) ranked_ids.push_back(id);
    for (std::size_t k : ks) {
      p_sums[k] += precision_at(ranked_ids, it->second, k);
      ndcg_sums[k] += ndcg_at(ranked_ids, it->second, k);
    }
  }

  const auto micro = micro_prf(pairs);
  EvalReport report;
  report.mi_p = micro.precision;
  report.mi_r = micro.recall;
  report.mi_f = micro.f1;
  report.n_docs = predictions.size();
  const double n = static_cast<double>(predictions.size());
  for (std::size_t k : ks) {
    report.p_at[k] = p_sums[k] / n;
    report.ndcg_at[k] = ndcg_sums[k] / n;
  }
  report.avg_predicted_count = static_cast<double>(chosen_total) / n;
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json obj;
  obj["mi_f"] = report.mi_f;
  obj["mi_p"] = report.mi_p;
  obj["mi_r"] = report.mi_r;
  nlohmann::json p_at = nlohmann::json::object();
  for (const auto& [k, v] : report.p_at) p_at[std::to_string(k)] = v;
  obj["p_at"] = std::move(p_at);
  nlohmann::json ndcg = nlohmann::json::object();
  for (const auto& [k, v] : report.ndcg_at) ndcg[std::to_string(k)] = v;
  obj["ndcg_at"] = std::move(ndcg);
  obj["n_docs"] = report.n_docs;
  obj["avg_predicted_count"] = report.avg_predicted_count;
  return obj.dump(2);
}

std::string report_table(const EvalReport& report) {
  std::vector<std::string> headers = {"MiF", "MiP", "MiR"};
  std::vector<std::string> values = {format_value(report.mi_f),
                                     format_value(report.mi_p),
                                     format_value(report.mi_r)};
  for (const auto& [k, v] : report.p_at) {
    headers.push_back("P@" + std::to_string(k));
    values.push_back(format_value(v));
  }
  for (const auto& [k, v] : report.ndcg_at) {
    headers.push_back("nDCG@" + std::to_string(k));
    values.push_back(format_value(v));
  }

  std::string head_row, value_row;
  for (std::size_t i = 0; i < headers.size(); ++i) {
    const std::size_t width = std::max(headers[i].size(), values[i].size());
    if (i > 0) {
      head_row += "  ";
      value_row += "  ";
    }
    head_row += std::string(width - headers[i].size(), ' ') + headers[i];
    value_row += std::string(width - values[i].size(), ' ') + values[i];
  }

  char footer[96];
  std::snprintf(footer, sizeof(footer),
                "docs %zu  avg predicted labels %.2f", report.n_docs,
                report.avg_predicted_count);
  return head_row + "\n" + value_row + "\n" + footer + "\n";
}

}  // namespace semidx
