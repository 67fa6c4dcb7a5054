#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "semidx/synth.hpp"
#include "test_util.hpp"

using namespace semidx;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.docs = 120;
  cfg.labels = 30;
  cfg.clusters = 6;
  cfg.seed = 7;
  cfg.vector_dim = 8;
  return cfg;
}

}  // namespace

TEST_CASE("generation is deterministic for a fixed config") {
  auto a = make_synthetic(small_config());
  auto b = make_synthetic(small_config());
  REQUIRE(a.corpus.size() == b.corpus.size());
  for (std::size_t i = 0; i < a.corpus.size(); ++i) {
    const auto& da = a.corpus.docs()[i];
    const auto& db = b.corpus.docs()[i];
    CHECK(da.id == db.id);
    CHECK(da.title == db.title);
    CHECK(da.abstract_text == db.abstract_text);
    CHECK(da.labels == db.labels);
  }
  CHECK(a.vocabulary.descriptors() == b.vocabulary.descriptors());
  REQUIRE(a.vectors.size() == b.vectors.size());
  for (std::size_t i = 0; i < a.vectors.size(); ++i) {
    CHECK(a.vectors[i] == b.vectors[i]);  // bitwise float equality
  }

  // A different seed produces different text.
  auto other_cfg = small_config();
  other_cfg.seed = 8;
  auto c = make_synthetic(other_cfg);
  CHECK(c.corpus.docs()[0].title != a.corpus.docs()[0].title);
}

TEST_CASE("generated corpus has the configured shape") {
  const auto cfg = small_config();
  auto res = make_synthetic(cfg);
  CHECK(res.corpus.size() == cfg.docs);
  CHECK(res.vocabulary.size() == cfg.labels);
  REQUIRE(res.vectors.size() == cfg.docs);
  for (const auto& v : res.vectors) CHECK(v.size() == cfg.vector_dim);

  std::set<LabelId> used;
  for (const auto& doc : res.corpus.docs()) {
    CHECK(doc.labels.size() >= cfg.min_labels_per_doc);
    CHECK(doc.labels.size() <= cfg.max_labels_per_doc);
    CHECK(std::is_sorted(doc.labels.begin(), doc.labels.end()));
    CHECK(!doc.title.empty());
    CHECK(!doc.abstract_text.empty());
    used.insert(doc.labels.begin(), doc.labels.end());
  }
  // Every label occurs somewhere: the per-cluster blocks are all sampled.
  CHECK(used.size() == cfg.labels);
}

TEST_CASE("documents stay inside their cluster's label block") {
  const auto cfg = small_config();
  auto res = make_synthetic(cfg);
  for (std::size_t d = 0; d < res.corpus.size(); ++d) {
    const std::size_t cluster = d % cfg.clusters;
    for (LabelId l : res.corpus.docs()[d].labels) {
      // Label id i belongs to cluster i mod clusters.
      CHECK(l % cfg.clusters == cluster);
    }
  }
}

TEST_CASE("descriptors name their cluster") {
  auto res = make_synthetic(small_config());
  for (std::size_t i = 0; i < res.vocabulary.size(); ++i) {
    const auto& name = res.vocabulary.descriptor(static_cast<LabelId>(i));
    CHECK(name.rfind("topic-", 0) == 0);
  }
  // Distinct labels get distinct descriptors (vocabulary is a bijection).
  std::set<std::string> names(res.vocabulary.descriptors().begin(),
                              res.vocabulary.descriptors().end());
  CHECK(names.size() == res.vocabulary.size());
}

TEST_CASE("config validation enumerates violations") {
  SynthConfig bad;
  bad.docs = 0;
  bad.labels = 2;
  bad.clusters = 5;
  bad.noise_word_rate = 1.5;
  try {
    validate_synth_config(bad);
    FAIL("expected validate_synth_config to throw");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    for (const char* needle : {"docs", "labels", "clusters", "noise"}) {
      CAPTURE(needle);
      CHECK(msg.find(needle) != std::string::npos);
    }
  }

  // More labels wanted per document than a cluster block can offer.
  auto cfg = small_config();
  cfg.max_labels_per_doc = cfg.labels / cfg.clusters + 1;
  CHECK_THROWS(validate_synth_config(cfg));
  CHECK_THROWS(make_synthetic(cfg));
}
