#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "semidx/label_ae.hpp"
#include "test_util.hpp"

using namespace semidx;

namespace {

// 16 -> [8] -> 4 toy shape used by the gradient and determinism checks.
AEConfig toy_config() {
  AEConfig cfg;
  cfg.label_dim = 16;
  cfg.encoder_layers = {8};
  cfg.embedding_dim = 4;
  cfg.decoder_layers = {8};
  cfg.dropout_rate = 0.0;
  cfg.batch_norm = true;
  return cfg;
}

const std::vector<LabelSet> kToyBatch = {
    {0, 3}, {1, 2, 7}, {5}, {8, 15, 4}, {9, 10}, {11}};

}  // namespace

TEST_CASE("preset parameter counts match the published table") {
  CHECK(parameter_count(preset_config(AEPreset::kSmall)) == 60'975'467ULL);
  CHECK(parameter_count(preset_config(AEPreset::kMedium)) == 123'035'563ULL);
  CHECK(published_parameter_count(AEPreset::kSmall) == 60'975'467ULL);
  CHECK(published_parameter_count(AEPreset::kMedium) == 123'035'563ULL);

  // The counting rule that reproduces the first two presets undercounts the
  // third by exactly 20,480; both numbers stay visible.
  const auto counted = parameter_count(preset_config(AEPreset::kLarge));
  const auto published = published_parameter_count(AEPreset::kLarge);
  CHECK(counted == 250'235'819ULL);
  CHECK(published == 250'256'299ULL);
  CHECK(published - counted == 20'480ULL);
}

TEST_CASE("preset shapes and name round trips") {
  auto small = preset_config(AEPreset::kSmall);
  CHECK(small.label_dim == 29483);
  CHECK(small.encoder_layers == std::vector<std::uint32_t>{1024, 256});
  CHECK(small.embedding_dim == 64);
  CHECK(small.decoder_layers == std::vector<std::uint32_t>{256, 1024});
  auto medium = preset_config(AEPreset::kMedium, 100);
  CHECK(medium.label_dim == 100);
  CHECK(medium.encoder_layers == std::vector<std::uint32_t>{2048, 512});
  auto large = preset_config(AEPreset::kLarge);
  CHECK(large.encoder_layers == std::vector<std::uint32_t>{4096, 1024});
  CHECK(large.embedding_dim == 128);

  for (auto p : {AEPreset::kSmall, AEPreset::kMedium, AEPreset::kLarge}) {
    CHECK(preset_from_name(preset_name(p)) == p);
  }
  CHECK_THROWS(preset_from_name("tiny"));
}

TEST_CASE("parameter count formula on a hand-counted shape") {
  // 16->8: 136, 8->4: 36, 4->8: 40, 8->16: 144, batch norm 2*8 twice.
  CHECK(parameter_count(toy_config()) == 388ULL);
  auto no_bn = toy_config();
  no_bn.batch_norm = false;
  CHECK(parameter_count(no_bn) == 356ULL);

  Network<float> net(toy_config(), 1);
  CHECK(net.parameter_count() == 388ULL);
  CHECK(net.flat_parameters().size() == 388);
}

TEST_CASE("config validation enumerates every violation") {
  AEConfig bad;
  bad.label_dim = 0;
  bad.encoder_layers = {};
  bad.embedding_dim = 0;
  bad.decoder_layers = {7};
  bad.dropout_rate = 1.0;
  try {
    validate_config(bad);
    FAIL("expected validate_config to throw");
  } catch (const std::exception& e) {
    const std::string msg = e.what();
    for (const char* needle :
         {"label_dim", "encoder", "embedding", "decoder", "dropout"}) {
      CAPTURE(needle);
      CHECK(msg.find(needle) != std::string::npos);
    }
  }

  // Embedding must stay strictly below the narrowest hidden layer.
  auto cfg = toy_config();
  cfg.embedding_dim = 8;
  CHECK_THROWS(validate_config(cfg));
  cfg = toy_config();
  CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("multi_hot pins the documented example") {
  CHECK(multi_hot({0, 2}, 4) == std::vector<float>{1, 0, 1, 0});
  CHECK(multi_hot({}, 3) == std::vector<float>{0, 0, 0});
  CHECK_THROWS(multi_hot({5}, 4));
}

TEST_CASE("eval forward is deterministic and sigmoid-bounded") {
  Network<float> net(toy_config(), 7);
  auto x = multi_hot({1, 6}, 16);
  auto a = net.forward(x);
  auto b = net.forward(x);
  CHECK(a.latent == b.latent);
  CHECK(a.reconstruction == b.reconstruction);
  REQUIRE(a.latent.size() == 4);
  REQUIRE(a.reconstruction.size() == 16);

  auto zero = net.forward(multi_hot({}, 16));
  for (float v : zero.reconstruction) {
    CHECK(v > 0.0f);
    CHECK(v < 1.0f);
  }

  CHECK_THROWS(net.forward(std::vector<float>(5)));
  CHECK_THROWS(net.decode(std::vector<float>(16)));
  CHECK_THROWS(net.encode(std::vector<float>(3)));
}

TEST_CASE("encode and decode compose into forward") {
  Network<float> net(toy_config(), 21);
  const LabelSet labels = {2, 9, 14};
  auto x = multi_hot(labels, 16);
  auto full = net.forward(x);
  auto z = net.encode(x);
  CHECK(z == full.latent);
  CHECK(net.encode_labels(labels) == z);
  // decode runs the identical layer sequence, so equality is exact.
  CHECK(net.decode(z) == full.reconstruction);
}

TEST_CASE("analytic gradients match central finite differences") {
  // 64-bit network, dropout off, batch statistics active in the loss.
  Network<double> net(toy_config(), 99);
  auto analytic = net.batch_gradients(kToyBatch);
  auto params = net.flat_parameters();
  REQUIRE(analytic.size() == params.size());

  const double h = 1e-5;
  double worst = 0.0;
  std::size_t inert = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto probe = params;
    probe[i] = params[i] + h;
    net.set_flat_parameters(probe);
    const double up = net.batch_loss(kToyBatch);
    probe[i] = params[i] - h;
    net.set_flat_parameters(probe);
    const double down = net.batch_loss(kToyBatch);
    const double numeric = (up - down) / (2.0 * h);
    // Parameters the loss provably ignores (an affine bias feeding batch
    // norm is cancelled by the mean subtraction) have both gradients at
    // rounding-noise level; relative error is meaningless there.
    const double scale = std::max(std::abs(analytic[i]), std::abs(numeric));
    if (scale < 1e-7) {
      ++inert;
      continue;
    }
    worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
  }
  net.set_flat_parameters(params);
  CHECK(worst < 1e-4);
  // Most parameters carry real gradient; the inert set stays small.
  CHECK(inert < params.size() / 4);
}

TEST_CASE("toy autoencoder overfits four disjoint patterns") {
  // 8 -> 4 -> 2 with one pattern per quadrant of the latent plane.
  AEConfig cfg;
  cfg.label_dim = 8;
  cfg.encoder_layers = {4};
  cfg.embedding_dim = 2;
  cfg.decoder_layers = {4};
  cfg.dropout_rate = 0.0;
  cfg.batch_norm = true;

  const std::vector<LabelSet> patterns = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
  // A 2-wide ReLU bottleneck can lose a quadrant to a dead unit on unlucky
  // inits, so the seed is pinned to one that separates all four patterns.
  // Training is deterministic, which keeps this choice stable.
  TrainConfig hyper;
  hyper.batch_size = 4;
  hyper.epochs = 2000;
  hyper.learning_rate = 1e-2;
  hyper.seed = 0;

  auto net = train_label_ae(patterns, cfg, hyper);

  for (const auto& pattern : patterns) {
    auto rec = net.forward(multi_hot(pattern, 8)).reconstruction;
    LabelSet decoded;
    for (std::size_t j = 0; j < rec.size(); ++j) {
      if (rec[j] > 0.5f) decoded.push_back(static_cast<LabelId>(j));
    }
    CAPTURE(pattern[0]);
    CHECK(decoded == pattern);

    // The two strongest scores sit exactly on the pattern members.
    auto z = net.encode_labels(pattern);
    auto scores = net.decode(z);
    std::vector<std::size_t> order(scores.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    LabelSet top = {static_cast<LabelId>(order[0]),
                    static_cast<LabelId>(order[1])};
    std::sort(top.begin(), top.end());
    CHECK(top == pattern);
  }
}

TEST_CASE("training loss trends down and respects the epoch budget") {
  AEConfig cfg;
  cfg.label_dim = 8;
  cfg.encoder_layers = {4};
  cfg.embedding_dim = 2;
  cfg.decoder_layers = {4};
  cfg.dropout_rate = 0.0;

  const std::vector<LabelSet> patterns = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
  TrainConfig hyper;
  hyper.batch_size = 4;
  hyper.epochs = 5;
  hyper.seed = 1;

  Network<float> net(cfg, 42);
  auto losses = net.train(patterns, hyper);
  REQUIRE(losses.size() == 5);
  CHECK(losses[4] <= losses[0]);
  CHECK(net.epochs_trained() == 5);
  for (double l : losses) CHECK(std::isfinite(l));
}

TEST_CASE("training is deterministic for a fixed seed") {
  const std::vector<LabelSet> examples = {{0, 2}, {1, 3}, {4, 7}, {5, 6},
                                          {0, 5}, {2, 6}, {1, 4}, {3, 7}};
  AEConfig cfg;
  cfg.label_dim = 8;
  cfg.encoder_layers = {4};
  cfg.embedding_dim = 2;
  cfg.decoder_layers = {4};
  cfg.dropout_rate = 0.2;  // dropout stream must replay identically

  TrainConfig hyper;
  hyper.batch_size = 4;
  hyper.epochs = 6;
  hyper.seed = 77;

  auto a = train_label_ae(examples, cfg, hyper);
  auto b = train_label_ae(examples, cfg, hyper);
  CHECK(a.flat_parameters() == b.flat_parameters());

  hyper.seed = 78;
  auto c = train_label_ae(examples, cfg, hyper);
  CHECK(a.flat_parameters() != c.flat_parameters());
}

TEST_CASE("training input validation") {
  Network<float> net(toy_config(), 5);
  TrainConfig hyper;
  hyper.batch_size = 8;
  hyper.epochs = 1;
  CHECK_THROWS(net.train({}, hyper));
  CHECK_THROWS(net.train({{0}, {1}}, hyper));  // fewer examples than a batch
  hyper.batch_size = 0;
  CHECK_THROWS(net.train({{0}, {1}}, hyper));
}

TEST_CASE("model file round trip reproduces outputs bitwise") {
  testutil::TempDir dir;
  const std::vector<LabelSet> examples = {{0, 2}, {1, 3}, {4, 7}, {5, 6},
                                          {0, 5}, {2, 6}, {1, 4}, {3, 7}};
  AEConfig cfg;
  cfg.label_dim = 8;
  cfg.encoder_layers = {4};
  cfg.embedding_dim = 2;
  cfg.decoder_layers = {4};
  TrainConfig hyper;
  hyper.batch_size = 4;
  hyper.epochs = 4;
  hyper.seed = 9;
  auto net = train_label_ae(examples, cfg, hyper);

  const auto path = dir.file("model.lae");
  net.save(path);
  auto loaded = AEModel::load(path);

  CHECK(loaded.config().label_dim == cfg.label_dim);
  CHECK(loaded.config().encoder_layers == cfg.encoder_layers);
  CHECK(loaded.epochs_trained() == net.epochs_trained());
  CHECK(loaded.init_seed() == net.init_seed());
  CHECK(loaded.flat_parameters() == net.flat_parameters());

  for (const auto& probe :
       {LabelSet{0}, LabelSet{1, 6}, LabelSet{2, 3, 7}, LabelSet{}}) {
    auto x = multi_hot(probe, 8);
    auto a = net.forward(x);
    auto b = loaded.forward(x);
    CHECK(a.latent == b.latent);
    CHECK(a.reconstruction == b.reconstruction);
  }

  // A second save writes the identical file.
  const auto path2 = dir.file("model2.lae");
  loaded.save(path2);
  CHECK(testutil::read_bytes(path) == testutil::read_bytes(path2));
}

TEST_CASE("model loader rejects malformed files") {
  testutil::TempDir dir;

  testutil::write_text(dir.file("bad.lae"), "WRONGMAGIC.....");
  CHECK_THROWS(AEModel::load(dir.file("bad.lae")));

  Network<float> net(toy_config(), 2);
  const auto path = dir.file("model.lae");
  net.save(path);

  auto bytes = testutil::read_bytes(path);
  testutil::write_text(dir.file("trunc.lae"), bytes.substr(0, bytes.size() - 9));
  CHECK_THROWS(AEModel::load(dir.file("trunc.lae")));

  testutil::write_text(dir.file("tail.lae"), bytes + "extra");
  CHECK_THROWS(AEModel::load(dir.file("tail.lae")));

  CHECK_THROWS(AEModel::load(dir.file("absent.lae")));
}

TEST_CASE("parameter count is unchanged by training") {
  const std::vector<LabelSet> examples = {{0, 1}, {2, 3}, {4, 5}, {6, 7}};
  AEConfig cfg;
  cfg.label_dim = 8;
  cfg.encoder_layers = {4};
  cfg.embedding_dim = 2;
  cfg.decoder_layers = {4};
  Network<float> net(cfg, 0);
  const auto before = net.parameter_count();
  TrainConfig hyper;
  hyper.batch_size = 4;
  hyper.epochs = 2;
  net.train(examples, hyper);
  CHECK(net.parameter_count() == before);
  CHECK(net.flat_parameters().size() == before);
}
