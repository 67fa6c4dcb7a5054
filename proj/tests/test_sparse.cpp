#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "semidx/rng.hpp"
#include "semidx/sparse_index.hpp"
#include "test_util.hpp"

using namespace semidx;

namespace {

Term stem(const std::string& text) { return Term{Channel::kStems, text}; }

TermBag bag(const std::vector<std::string>& words) {
  TermBag b;
  for (const auto& w : words) b.terms.push_back(stem(w));
  return b;
}

// Uniform random corpus over a small alphabet so that term collisions and
// ties actually occur.
std::vector<std::pair<std::string, TermBag>> random_corpus(Rng& rng,
                                                           std::size_t docs,
                                                           std::size_t vocab) {
  std::vector<std::pair<std::string, TermBag>> out;
  out.reserve(docs);
  for (std::size_t i = 0; i < docs; ++i) {
    const std::size_t len = 1 + rng.next_below(30);
    std::vector<std::string> words(len);
    for (auto& w : words) w = "w" + std::to_string(rng.next_below(vocab));
    out.emplace_back("doc" + std::to_string(i), bag(words));
  }
  return out;
}

TermBag random_query(Rng& rng, std::size_t vocab, std::size_t max_terms) {
  const std::size_t len = 1 + rng.next_below(max_terms);
  std::vector<std::string> words(len);
  for (auto& w : words) w = "w" + std::to_string(rng.next_below(vocab));
  return bag(words);
}

}  // namespace

TEST_CASE("score normalization pins the documented values") {
  auto d = normalize_scores({8.0, 4.0, 2.0});
  REQUIRE(d.size() == 3);
  CHECK(d[0] == doctest::Approx(1e-6));
  CHECK(d[1] == doctest::Approx(0.5));
  CHECK(d[2] == doctest::Approx(0.75));

  CHECK(normalize_scores({5.0}) == std::vector<double>{1e-6});
  auto equal = normalize_scores({3.0, 3.0});
  CHECK(equal[0] == doctest::Approx(1e-6));
  CHECK(equal[1] == doctest::Approx(1e-6));

  CHECK_THROWS(normalize_scores({}));
  CHECK_THROWS(normalize_scores({1.0, -2.0}));
  CHECK_THROWS(normalize_scores({0.0}));
  CHECK_THROWS(normalize_scores({1.0, 2.0}));  // ascending input
}

TEST_CASE("build exposes postings, lengths, and averages") {
  auto idx = InvertedIndex::build(
      {{"d0", bag({"a", "b"})}, {"d1", bag({"b"})}});
  CHECK(idx.doc_count() == 2);
  CHECK(idx.term_count() == 2);
  CHECK(idx.avg_doc_length() == doctest::Approx(1.5));
  CHECK(idx.doc_lengths() == std::vector<std::uint32_t>{2, 1});

  const auto* pa = idx.postings(stem("a"));
  REQUIRE(pa != nullptr);
  CHECK(*pa == std::vector<InvertedIndex::Posting>{{0, 1}});
  const auto* pb = idx.postings(stem("b"));
  REQUIRE(pb != nullptr);
  CHECK(*pb == std::vector<InvertedIndex::Posting>{{0, 1}, {1, 1}});
  CHECK(idx.postings(stem("zzz")) == nullptr);

  // Repeated terms accumulate term frequency.
  auto rep = InvertedIndex::build({{"d0", bag({"a", "a"})}});
  CHECK(*rep.postings(stem("a")) ==
        std::vector<InvertedIndex::Posting>{{0, 2}});

  CHECK_THROWS(InvertedIndex::build({}));
  CHECK_THROWS(InvertedIndex::build(
      {{"d0", bag({"a"})}, {"d0", bag({"b"})}}));
  CHECK_THROWS(InvertedIndex::build({{"d0", bag({""})}}));
}

TEST_CASE("posting totals match a recount over the input") {
  Rng rng(11);
  auto docs = random_corpus(rng, 1000, 150);
  auto idx = InvertedIndex::build(docs);

  std::uint64_t from_postings = 0;
  for (const auto& [term, postings] : idx.all_postings()) {
    std::uint64_t prev = 0;
    bool first = true;
    for (const auto& [ordinal, tf] : postings) {
      // Postings are sorted by ordinal with no duplicates.
      if (!first) CHECK(ordinal > prev);
      prev = ordinal;
      first = false;
      from_postings += tf;
    }
  }
  std::uint64_t from_lengths = 0;
  for (auto len : idx.doc_lengths()) from_lengths += len;
  std::uint64_t from_input = 0;
  for (const auto& [id, b] : docs) from_input += b.terms.size();
  CHECK(from_postings == from_input);
  CHECK(from_lengths == from_input);
}

TEST_CASE("single-hit query reproduces the hand-computed BM25 score") {
  // Three documents; the query term appears only in d0, with tf = 1.
  auto idx = InvertedIndex::build({{"d0", bag({"x", "a"})},
                                   {"d1", bag({"b", "c", "d"})},
                                   {"d2", bag({"c"})}});
  auto hits = idx.query(bag({"x"}), 10);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].doc_id == "d0");

  const double n = 3.0;
  const double df = 1.0;
  const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
  const double len = 2.0;
  const double avg = 6.0 / 3.0;
  const double k1 = 1.2;
  const double b = 0.75;
  const double expected =
      idf * 1.0 * (k1 + 1.0) / (1.0 + k1 * (1.0 - b + b * len / avg));
  CHECK(hits[0].raw_score == doctest::Approx(expected).epsilon(1e-12));
  CHECK(hits[0].distance == doctest::Approx(1e-6));
}

TEST_CASE("query edge behavior") {
  auto idx = InvertedIndex::build(
      {{"d0", bag({"a", "b"})}, {"d1", bag({"b"})}});
  CHECK(idx.query(bag({"zzz"}), 5).empty());
  CHECK(idx.query(TermBag{}, 5).empty());
  CHECK(idx.query(bag({"b"}), 1).size() == 1);

  // A repeated query term contributes with its multiplicity.
  auto once = idx.query(bag({"a"}), 5);
  auto twice = idx.query(bag({"a", "a"}), 5);
  REQUIRE(once.size() == twice.size());
  CHECK(twice[0].raw_score == doctest::Approx(2.0 * once[0].raw_score));
}

TEST_CASE("ranking matches the full-scan oracle on random corpora") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t docs = 100 + rng.next_below(400);
    const std::size_t vocab = 20 + rng.next_below(100);
    auto corpus = random_corpus(rng, docs, vocab);
    auto idx = InvertedIndex::build(corpus);
    for (int q = 0; q < 4; ++q) {
      auto query = random_query(rng, vocab, 12);
      const std::size_t k = 1 + rng.next_below(30);
      auto got = idx.query(query, k);
      auto ref = oracle::bm25_full_scan(corpus, query, k, 1.2, 0.75);
      CAPTURE(trial);
      CAPTURE(q);
      REQUIRE(got.size() == ref.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got[i].doc_id == ref[i].doc_id);
        CHECK(std::abs(got[i].raw_score - ref[i].score) < 1e-9);
      }
    }
  }
}

TEST_CASE("distances are clamped, bounded, and nondecreasing") {
  Rng rng(23);
  auto corpus = random_corpus(rng, 300, 40);
  auto idx = InvertedIndex::build(corpus);
  for (int q = 0; q < 10; ++q) {
    auto hits = idx.query(random_query(rng, 40, 8), 25);
    double prev = 0.0;
    for (const auto& h : hits) {
      CHECK(h.distance >= 1e-6);
      CHECK(h.distance < 1.0);
      CHECK(h.distance >= prev);
      prev = h.distance;
    }
  }
}

TEST_CASE("rebuilding the same input reproduces every ranking") {
  Rng rng(31);
  auto corpus = random_corpus(rng, 200, 30);
  auto a = InvertedIndex::build(corpus);
  auto b = InvertedIndex::build(corpus);
  for (int q = 0; q < 10; ++q) {
    auto query = random_query(rng, 30, 8);
    auto ra = a.query(query, 15);
    auto rb = b.query(query, 15);
    REQUIRE(ra.size() == rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
      CHECK(ra[i].doc_id == rb[i].doc_id);
      CHECK(ra[i].raw_score == rb[i].raw_score);
      CHECK(ra[i].distance == rb[i].distance);
    }
  }
}

TEST_CASE("adding a term-disjoint document keeps the result ordering") {
  auto base = InvertedIndex::build(
      {{"d0", bag({"a", "b"})}, {"d1", bag({"a"})}, {"d2", bag({"b", "b"})}});
  auto extended = InvertedIndex::build({{"d0", bag({"a", "b"})},
                                        {"d1", bag({"a"})},
                                        {"d2", bag({"b", "b"})},
                                        {"d3", bag({"q", "r"})}});
  for (const auto& query : {bag({"a"}), bag({"b"}), bag({"a", "b"})}) {
    auto before = base.query(query, 10);
    auto after = extended.query(query, 10);
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
      // Raw scores shift with the corpus statistics; the ordering must not.
      CHECK(before[i].doc_id == after[i].doc_id);
    }
  }
}

TEST_CASE("index file round trip is exact") {
  testutil::TempDir dir;
  Rng rng(37);
  auto corpus = random_corpus(rng, 150, 25);
  auto idx = InvertedIndex::build(corpus);
  idx.set_repr_json("{\"representation\":\"stems\"}");

  const auto path = dir.file("index.sidx");
  idx.save(path);
  auto loaded = InvertedIndex::load(path);

  CHECK(loaded.doc_count() == idx.doc_count());
  CHECK(loaded.term_count() == idx.term_count());
  CHECK(loaded.doc_ids() == idx.doc_ids());
  CHECK(loaded.doc_lengths() == idx.doc_lengths());
  CHECK(loaded.avg_doc_length() == idx.avg_doc_length());
  CHECK(loaded.repr_json() == idx.repr_json());
  CHECK(loaded.all_postings() == idx.all_postings());

  // Queries through the reloaded index are bitwise identical.
  for (int q = 0; q < 5; ++q) {
    auto query = random_query(rng, 25, 6);
    auto ra = idx.query(query, 10);
    auto rb = loaded.query(query, 10);
    REQUIRE(ra.size() == rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
      CHECK(ra[i].doc_id == rb[i].doc_id);
      CHECK(ra[i].raw_score == rb[i].raw_score);
      CHECK(ra[i].distance == rb[i].distance);
    }
  }

  // A second save of the loaded index reproduces the file byte for byte.
  const auto path2 = dir.file("index2.sidx");
  loaded.save(path2);
  CHECK(testutil::read_bytes(path) == testutil::read_bytes(path2));

  CHECK_THROWS(InvertedIndex::load(dir.file("absent.sidx")));
  testutil::write_text(dir.file("bad.sidx"), "NOTMAGIC");
  CHECK_THROWS(InvertedIndex::load(dir.file("bad.sidx")));
}
