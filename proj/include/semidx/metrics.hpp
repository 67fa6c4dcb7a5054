#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "semidx/predictor.hpp"
#include "semidx/types.hpp"

namespace semidx {

struct MicroPRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Pooled true/false positives and false negatives over all documents, not a
// per-document average. Zero denominators yield zero.
MicroPRF micro_prf(const std::vector<std::pair<LabelSet, LabelSet>>& pairs);

// |top-k hits| / k. The divisor stays k even when fewer than k labels were
// ranked; a short ranking is penalized, not excused.
double precision_at(const std::vector<LabelId>& ranked, const LabelSet& gold,
                    std::size_t k);

// Binary-gain DCG with 1/log2(i+1) discount, normalized by the ideal DCG
// truncated at min(k, |gold|). Zero when gold is empty.
double ndcg_at(const std::vector<LabelId>& ranked, const LabelSet& gold,
               std::size_t k);

struct EvalReport {
  double mi_p = 0.0;
  double mi_r = 0.0;
  double mi_f = 0.0;
  std::map<std::size_t, double> p_at;     // k -> mean per-document P@k
  std::map<std::size_t, double> ndcg_at;  // k -> mean per-document nDCG@k
  std::size_t n_docs = 0;
  double avg_predicted_count = 0.0;
};

// Micro metrics over the chosen sets plus mean per-document ranking metrics
// at each k. Documents are accumulated in doc-id order regardless of input
// order. Every document must have gold labels; duplicates are allowed and
// each occurrence counts.
EvalReport evaluate(
    const std::vector<std::pair<std::string, Prediction>>& predictions,
    const GoldMap& gold, const std::vector<std::size_t>& ks);

std::string report_to_json(const EvalReport& report);

// Two-row aligned table, columns MiF, MiP, MiR, then P@k and nDCG@k in
// ascending k, with a document/label-count footer line.
std::string report_table(const EvalReport& report);

}  // namespace semidx
