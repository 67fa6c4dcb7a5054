#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "semidx/metrics.hpp"
#include "semidx/rng.hpp"

using namespace semidx;

namespace {

// Random (predicted, gold) pair over a 20-label space.
std::pair<LabelSet, LabelSet> random_pair(Rng& rng) {
  auto draw = [&](std::size_t max_count) {
    LabelSet set;
    const std::size_t count = rng.next_below(max_count + 1);
    for (std::size_t i = 0; i < count; ++i) {
      set.push_back(static_cast<LabelId>(rng.next_below(20)));
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    return set;
  };
  auto gold = draw(8);
  if (gold.empty()) gold = {static_cast<LabelId>(rng.next_below(20))};
  return {draw(8), gold};
}

Prediction ranked_prediction(const std::vector<LabelId>& order,
                             const LabelSet& chosen) {
  Prediction p;
  for (std::size_t i = 0; i < order.size(); ++i) {
    p.ranked.emplace_back(order[i], static_cast<double>(order.size() - i));
  }
  p.chosen = chosen;
  p.estimated_count = static_cast<std::uint32_t>(chosen.size());
  return p;
}

}  // namespace

TEST_CASE("micro metrics pin the documented example") {
  auto prf = micro_prf({{{0, 1, 2}, {0, 3}}});
  CHECK(prf.precision == doctest::Approx(1.0 / 3.0));
  CHECK(prf.recall == doctest::Approx(0.5));
  CHECK(prf.f1 == doctest::Approx(0.4));
}

TEST_CASE("micro metrics degenerate inputs") {
  auto perfect = micro_prf({{{1, 2}, {1, 2}}, {{4}, {4}}});
  CHECK(perfect.precision == doctest::Approx(1.0));
  CHECK(perfect.recall == doctest::Approx(1.0));
  CHECK(perfect.f1 == doctest::Approx(1.0));

  // Nothing predicted: zero denominators yield zeros, not NaN.
  auto silent = micro_prf({{{}, {1}}});
  CHECK(silent.precision == 0.0);
  CHECK(silent.recall == 0.0);
  CHECK(silent.f1 == 0.0);

  CHECK_THROWS(micro_prf({}));
}

TEST_CASE("micro metrics match the confusion-matrix oracle") {
  Rng rng(71);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::pair<LabelSet, LabelSet>> pairs;
    const std::size_t docs = 1 + rng.next_below(100);
    for (std::size_t i = 0; i < docs; ++i) pairs.push_back(random_pair(rng));
    auto got = micro_prf(pairs);
    auto ref = oracle::micro_confusion(pairs);
    CHECK(std::abs(got.precision - ref.p) < 1e-12);
    CHECK(std::abs(got.recall - ref.r) < 1e-12);
    CHECK(std::abs(got.f1 - ref.f) < 1e-12);
  }
}

TEST_CASE("precision at k pins the documented examples") {
  // ranked [a,b,c,d,e] with gold {a,c,z}.
  CHECK(precision_at({0, 1, 2, 3, 4}, {0, 2, 25}, 5) == doctest::Approx(0.4));
  CHECK(precision_at({0, 1, 2, 3, 4}, {0, 1, 2, 3, 4, 9}, 5) ==
        doctest::Approx(1.0));
  CHECK(precision_at({}, {0}, 5) == 0.0);
  // Shorter ranking than k still divides by k.
  CHECK(precision_at({0}, {0}, 4) == doctest::Approx(0.25));
  CHECK_THROWS(precision_at({0}, {0}, 0));
}

TEST_CASE("ndcg pins the worked example") {
  // ranked [g, x, g, x, x] with two gold labels.
  const double got = ndcg_at({0, 10, 1, 11, 12}, {0, 1}, 5);
  const double dcg = 1.0 + 1.0 / std::log2(4.0);
  const double idcg = 1.0 + 1.0 / std::log2(3.0);
  CHECK(got == doctest::Approx(dcg / idcg).epsilon(1e-12));
  CHECK(got == doctest::Approx(0.91972).epsilon(1e-5));
}

TEST_CASE("ndcg boundary behavior") {
  CHECK(ndcg_at({0, 1, 2}, {0, 1, 2}, 3) == doctest::Approx(1.0));
  CHECK(ndcg_at({0, 1}, {0, 1, 2, 3}, 2) == doctest::Approx(1.0));
  CHECK(ndcg_at({5, 6, 7}, {0}, 3) == 0.0);
  CHECK(ndcg_at({0}, {}, 3) == 0.0);  // empty gold defined as zero
  CHECK_THROWS(ndcg_at({0}, {0}, 0));

  // nDCG is 1 exactly when the top-min(k, |gold|) prefix is all gold.
  CHECK(ndcg_at({0, 9}, {0}, 2) == doctest::Approx(1.0));
  CHECK(ndcg_at({9, 0}, {0}, 2) < 1.0);
}

TEST_CASE("ranking metrics match the oracle on random inputs") {
  Rng rng(73);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<LabelId> ranked(20);
    std::iota(ranked.begin(), ranked.end(), 0);
    rng.shuffle(ranked);
    ranked.resize(1 + rng.next_below(20));
    auto [ignored, gold] = random_pair(rng);
    const std::size_t k = 1 + rng.next_below(12);
    CHECK(std::abs(precision_at(ranked, gold, k) -
                   oracle::precision_at(ranked, gold, k)) < 1e-12);
    CHECK(std::abs(ndcg_at(ranked, gold, k) -
                   oracle::ndcg_at(ranked, gold, k)) < 1e-12);
  }
}

TEST_CASE("evaluate aggregates per-document metrics") {
  GoldMap gold;
  gold["d1"] = {0, 1};
  auto pred = ranked_prediction({0, 5, 1, 6, 7}, {0, 5});

  auto report = evaluate({{"d1", pred}}, gold, {5});
  CHECK(report.n_docs == 1);
  // Single document: the report equals that document's metrics.
  auto prf = micro_prf({{pred.chosen, gold["d1"]}});
  CHECK(report.mi_p == doctest::Approx(prf.precision));
  CHECK(report.mi_r == doctest::Approx(prf.recall));
  CHECK(report.mi_f == doctest::Approx(prf.f1));
  CHECK(report.p_at.at(5) ==
        doctest::Approx(precision_at({0, 5, 1, 6, 7}, gold["d1"], 5)));
  CHECK(report.ndcg_at.at(5) ==
        doctest::Approx(ndcg_at({0, 5, 1, 6, 7}, gold["d1"], 5)));
  CHECK(report.avg_predicted_count == doctest::Approx(2.0));
}

TEST_CASE("evaluate is invariant to document order and duplication") {
  GoldMap gold;
  std::vector<std::pair<std::string, Prediction>> preds;
  Rng rng(79);
  for (int i = 0; i < 12; ++i) {
    const std::string id = "d" + std::to_string(i);
    auto [chosen, g] = random_pair(rng);
    gold[id] = g;
    std::vector<LabelId> order(20);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    preds.emplace_back(id, ranked_prediction(order, chosen));
  }
  auto base = evaluate(preds, gold, {1, 5});

  auto shuffled = preds;
  rng.shuffle(shuffled);
  auto permuted = evaluate(shuffled, gold, {1, 5});
  CHECK(permuted.mi_f == base.mi_f);
  CHECK(permuted.p_at.at(5) == base.p_at.at(5));
  CHECK(permuted.ndcg_at.at(1) == base.ndcg_at.at(1));

  // Listing every document twice changes no ratio.
  auto doubled = preds;
  doubled.insert(doubled.end(), preds.begin(), preds.end());
  auto twice = evaluate(doubled, gold, {1, 5});
  CHECK(twice.n_docs == 2 * base.n_docs);
  CHECK(twice.mi_f == doctest::Approx(base.mi_f).epsilon(1e-12));
  CHECK(twice.p_at.at(5) == doctest::Approx(base.p_at.at(5)).epsilon(1e-12));
  CHECK(twice.ndcg_at.at(5) ==
        doctest::Approx(base.ndcg_at.at(5)).epsilon(1e-12));
}

TEST_CASE("evaluate validates its inputs") {
  GoldMap gold;
  gold["d1"] = {0};
  auto pred = ranked_prediction({0}, {0});
  CHECK_THROWS(evaluate({}, gold, {5}));
  CHECK_THROWS(evaluate({{"d1", pred}, {"ghost", pred}}, gold, {5}));
  CHECK_THROWS(evaluate({{"d1", pred}}, gold, {0}));

  // An empty cutoff list is allowed: set metrics still apply.
  auto bare = evaluate({{"d1", pred}}, gold, {});
  CHECK(bare.p_at.empty());
  CHECK(bare.ndcg_at.empty());
  CHECK(bare.mi_f == doctest::Approx(1.0));
}

TEST_CASE("report serialization carries every field") {
  GoldMap gold;
  gold["d1"] = {0, 1};
  auto report =
      evaluate({{"d1", ranked_prediction({0, 1, 2}, {0, 2})}}, gold, {5, 10});

  const auto json = report_to_json(report);
  for (const char* key : {"mi_f", "mi_p", "mi_r", "p_at", "ndcg_at", "n_docs",
                          "avg_predicted_count"}) {
    CAPTURE(key);
    CHECK(json.find(key) != std::string::npos);
  }

  const auto table = report_table(report);
  for (const char* head : {"MiF", "MiP", "MiR", "P@5", "P@10", "nDCG@5",
                           "nDCG@10", "docs 1"}) {
    CAPTURE(head);
    CHECK(table.find(head) != std::string::npos);
  }
}
