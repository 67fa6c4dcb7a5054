// semidx: build, train, and evaluate a multi-label semantic indexer from the
// command line. Every command reads and writes explicit paths; reruns with
// the same inputs and seed produce identical artifacts.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "semidx/corpus.hpp"
#include "semidx/dense_index.hpp"
#include "semidx/label_ae.hpp"
#include "semidx/metrics.hpp"
#include "semidx/predictor.hpp"
#include "semidx/sparse_index.hpp"
#include "semidx/stopwords.hpp"
#include "semidx/synth.hpp"
#include "semidx/textrep.hpp"
#include "semidx/types.hpp"

namespace {

using namespace semidx;

std::string with_commas(std::uint64_t v) {
  std::string s = std::to_string(v);
  for (int pos = static_cast<int>(s.size()) - 3; pos > 0; pos -= 3) {
    s.insert(static_cast<std::size_t>(pos), ",");
  }
  return s;
}

// Index-ready doc id list for one named split, in the stored split order
// ("all" walks the corpus in load order).
std::vector<std::string> split_ids(const std::string& split,
                                   const LoadedCorpus& loaded) {
  if (split == "all") {
    std::vector<std::string> ids;
    ids.reserve(loaded.corpus.size());
    for (const auto& doc : loaded.corpus.docs()) ids.push_back(doc.id);
    return ids;
  }
  if (split == "train") return loaded.split.train;
  if (split == "dev") return loaded.split.dev;
  if (split == "test") return loaded.split.test;
  throw std::invalid_argument("unknown split name: " + split +
                              " (expected train, dev, test, or all)");
}

// The representation config rides inside the sparse index so queries replay
// the build-time extraction exactly, stopword list included.
nlohmann::json repr_to_json(const std::string& name, const ReprConfig& cfg) {
  std::vector<std::string> stop(cfg.stopwords.begin(), cfg.stopwords.end());
  std::sort(stop.begin(), stop.end());
  std::vector<std::string> channels;
  for (Channel c : cfg.enabled) channels.emplace_back(channel_name(c));
  nlohmann::json obj;
  obj["representation"] = name;
  obj["channels"] = channels;
  obj["stopwords"] = stop;
  obj["textrank"] = {{"window", cfg.textrank.window},
                     {"damping", cfg.textrank.damping},
                     {"iterations", cfg.textrank.iterations},
                     {"top_n", cfg.textrank.top_n}};
  return obj;
}

ReprConfig repr_from_json(const std::string& raw, std::string* name_out) {
  ReprConfig cfg;
  try {
    const nlohmann::json obj = nlohmann::json::parse(raw);
    if (name_out != nullptr) {
      *name_out = obj.at("representation").get<std::string>();
    }
    cfg.enabled.clear();
    for (const auto& c : obj.at("channels")) {
      cfg.enabled.insert(channel_from_name(c.get<std::string>()));
    }
    cfg.stopwords.clear();
    for (const auto& s : obj.at("stopwords")) {
      cfg.stopwords.insert(s.get<std::string>());
    }
    const auto& tr = obj.at("textrank");
    cfg.textrank.window = tr.at("window").get<std::size_t>();
    cfg.textrank.damping = tr.at("damping").get<double>();
    cfg.textrank.iterations = tr.at("iterations").get<std::size_t>();
    cfg.textrank.top_n = tr.at("top_n").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(
        std::string("index carries no usable representation config: ") +
        e.what());
  }
  return cfg;
}

// "channel=path" pairs from --external flags, loaded and keyed by channel.
ExternalTerms load_externals(const std::vector<std::string>& specs,
                             const std::unordered_set<std::string>& known_ids) {
  ExternalTerms externals;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw std::invalid_argument("--external expects channel=path, got: " +
                                  spec);
    }
    const Channel channel = channel_from_name(spec.substr(0, eq));
    const std::string path = spec.substr(eq + 1);
    ExternalTermStats stats;
    externals[channel] = ingest_external_terms(path, channel, known_ids, &stats);
    if (stats.unknown_doc_skipped > 0) {
      std::fprintf(stderr,
                   "warning: %s: skipped %zu lines naming unknown documents\n",
                   path.c_str(), stats.unknown_doc_skipped);
    }
  }
  return externals;
}

// Channels that cannot be produced from title/abstract text alone.
void require_external_channels(const ReprConfig& cfg,
                               const ExternalTerms& externals) {
  std::string missing;
  for (Channel c : cfg.enabled) {
    if (c == Channel::kStems || c == Channel::kKeywords) continue;
    if (externals.count(c) == 0) {
      if (!missing.empty()) missing += ", ";
      missing += channel_name(c);
    }
  }
  if (!missing.empty()) {
    throw std::invalid_argument(
        "representation needs --external channel=path for: " + missing);
  }
}

// Deterministic parallel map: slot i of the output depends only on input i,
// so the thread count changes wall time and nothing else.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          fn(i, t);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct SynthOpts {
  SynthConfig config;
  std::string out_dir;
  std::string vectors_path;
  std::size_t dev = 0;
  std::size_t test = 0;
};

int run_synth(const SynthOpts& opts) {
  SynthResult result = make_synthetic(opts.config);
  const CorpusSplit split =
      split_corpus(result.corpus, opts.dev, opts.test, opts.config.seed);
  save_corpus(opts.out_dir, result.corpus, result.vocabulary, split);
  if (!opts.vectors_path.empty()) {
    std::vector<std::string> ids;
    std::vector<float> data;
    ids.reserve(result.corpus.size());
    data.reserve(result.corpus.size() * opts.config.vector_dim);
    for (std::size_t i = 0; i < result.corpus.size(); ++i) {
      ids.push_back(result.corpus.docs()[i].id);
      data.insert(data.end(), result.vectors[i].begin(),
                  result.vectors[i].end());
    }
    DenseIndex::from_vectors(opts.config.vector_dim, std::move(ids),
                             std::move(data))
        .save(opts.vectors_path);
  }
  std::printf("wrote %zu docs, %zu labels to %s (train %zu, dev %zu, test %zu)\n",
              result.corpus.size(), result.vocabulary.size(),
              opts.out_dir.c_str(), split.train.size(), split.dev.size(),
              split.test.size());
  return 0;
}

struct IngestOpts {
  std::string input;
  std::string out_dir;
  FieldMap fields;
  bool allow_unlabeled = false;
  std::size_t dev = 0;
  std::size_t test = 0;
  std::uint64_t seed = 0;
};

int run_ingest(const IngestOpts& opts) {
  IngestResult result =
      ingest_jsonl(opts.input, opts.fields, opts.allow_unlabeled);
  for (const auto& msg : result.stats.messages) {
    std::fprintf(stderr, "reject: %s\n", msg.c_str());
  }
  if (result.corpus.empty()) {
    throw std::runtime_error("no valid documents in " + opts.input + " (" +
                             std::to_string(result.stats.rejected) +
                             " rejected)");
  }
  const CorpusSplit split =
      split_corpus(result.corpus, opts.dev, opts.test, opts.seed);
  save_corpus(opts.out_dir, result.corpus, result.vocabulary, split);
  const LabelStats stats = label_stats(result.corpus, result.vocabulary);
  std::printf(
      "ingested %zu docs (%zu rejected), %zu labels; labels/doc min %zu max "
      "%zu avg %.2f\n",
      result.corpus.size(), result.stats.rejected, result.vocabulary.size(),
      stats.min_labels, stats.max_labels, stats.avg_labels);
  return 0;
}

struct BuildIndexOpts {
  std::string corpus_dir;
  std::string out_path;
  std::string representation = "stems";
  std::string split = "train";
  std::string stopwords_path;
  std::string vectors_path;
  std::vector<std::string> externals;
  TextRankConfig textrank;
};

int run_build_index(const BuildIndexOpts& opts) {
  const LoadedCorpus loaded = load_corpus(opts.corpus_dir);
  const std::vector<std::string> ids = split_ids(opts.split, loaded);
  if (ids.empty()) {
    throw std::runtime_error("split \"" + opts.split + "\" is empty");
  }

  if (opts.representation == "dense") {
    if (opts.vectors_path.empty()) {
      throw std::invalid_argument(
          "--representation dense needs --vectors with a vector file");
    }
    const DenseIndex all = DenseIndex::load(opts.vectors_path);
    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < all.doc_ids().size(); ++i) {
      row_of[all.doc_ids()[i]] = i;
    }
    std::vector<std::string> kept_ids;
    std::vector<float> data;
    kept_ids.reserve(ids.size());
    data.reserve(ids.size() * all.dim());
    for (const auto& id : ids) {
      const auto it = row_of.find(id);
      if (it == row_of.end()) {
        throw std::runtime_error(opts.vectors_path + " lacks document " + id);
      }
      const auto row = all.vector(it->second);
      kept_ids.push_back(id);
      data.insert(data.end(), row.begin(), row.end());
    }
    DenseIndex::from_vectors(all.dim(), std::move(kept_ids), std::move(data))
        .save(opts.out_path);
    std::printf("wrote dense index: %zu docs, dim %zu -> %s\n", ids.size(),
                all.dim(), opts.out_path.c_str());
    return 0;
  }

  ReprConfig cfg;
  cfg.enabled = representation_channels(opts.representation);
  cfg.stopwords = opts.stopwords_path.empty()
                      ? default_stopwords()
                      : load_stopwords(opts.stopwords_path);
  cfg.textrank = opts.textrank;

  std::unordered_set<std::string> known(ids.begin(), ids.end());
  const ExternalTerms externals = load_externals(opts.externals, known);
  require_external_channels(cfg, externals);

  std::vector<std::pair<std::string, TermBag>> docs;
  docs.reserve(ids.size());
  for (const auto& id : ids) {
    const Document* doc = loaded.corpus.find(id);
    if (doc == nullptr) {
      throw std::runtime_error("split names unknown document " + id);
    }
    docs.emplace_back(
        id, document_terms(doc->title, doc->abstract_text, id, cfg, externals));
  }
  InvertedIndex index = InvertedIndex::build(docs);
  index.set_repr_json(repr_to_json(opts.representation, cfg).dump());
  index.save(opts.out_path);
  std::printf("indexed %zu docs, %zu terms -> %s\n", index.doc_count(),
              index.term_count(), opts.out_path.c_str());
  return 0;
}

struct TrainAeOpts {
  std::string corpus_dir;
  std::string out_path;
  std::string preset = "custom";
  std::string split = "train";
  std::vector<std::uint32_t> encoder;
  std::uint32_t embedding = 0;
  double dropout = 0.2;
  bool no_batch_norm = false;
  TrainConfig hyper;
};

int run_train_ae(const TrainAeOpts& opts) {
  const LoadedCorpus loaded = load_corpus(opts.corpus_dir);
  const std::vector<std::string> ids = split_ids(opts.split, loaded);
  if (ids.empty()) {
    throw std::runtime_error("split \"" + opts.split +
                             "\" is empty; pass --split all to train on the "
                             "whole corpus");
  }

  std::vector<LabelSet> examples;
  examples.reserve(ids.size());
  for (const auto& id : ids) {
    const Document* doc = loaded.corpus.find(id);
    if (doc == nullptr) {
      throw std::runtime_error("split names unknown document " + id);
    }
    examples.push_back(doc->labels);
  }

  const auto label_dim =
      static_cast<std::uint32_t>(loaded.vocabulary.size());
  AEConfig config;
  if (opts.preset == "custom") {
    if (opts.encoder.empty() || opts.embedding == 0) {
      throw std::invalid_argument(
          "--preset custom needs --encoder and --embedding");
    }
    config.label_dim = label_dim;
    config.encoder_layers = opts.encoder;
    config.embedding_dim = opts.embedding;
    config.decoder_layers.assign(opts.encoder.rbegin(), opts.encoder.rend());
  } else {
    config = preset_config(preset_from_name(opts.preset), label_dim);
  }
  config.dropout_rate = opts.dropout;
  config.batch_norm = !opts.no_batch_norm;
  validate_config(config);

  AEModel model = train_label_ae(examples, config, opts.hyper);
  model.save(opts.out_path);
  std::printf("trained %s parameters on %zu label sets, %zu epochs -> %s\n",
              with_commas(model.parameter_count()).c_str(), examples.size(),
              opts.hyper.epochs, opts.out_path.c_str());
  return 0;
}

struct PredictOpts {
  std::string corpus_dir;
  std::string index_path;
  std::string out_path;
  std::string model_path;
  std::string vectors_path;
  std::string strategy = "basic";
  std::string split = "test";
  std::string weighting = "difference";
  std::vector<std::string> externals;
  std::size_t k = 10;
  double threshold = 0.5;
  bool top_r = false;
  bool weighted_votes = false;
  bool weighted_count = false;
  std::size_t ranked_cap = 100;
  std::size_t threads = 1;
};

std::string read_magic(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char m[5] = {};
  is.read(m, 5);
  return std::string(m, static_cast<std::size_t>(is.gcount()));
}

int run_predict(const PredictOpts& opts) {
  if (opts.k == 0) throw std::invalid_argument("--k must be positive");
  const bool wants_ae = opts.strategy == "ae" || opts.strategy == "mix";
  const bool wants_vote = opts.strategy == "basic" || opts.strategy == "mix";
  if (!wants_ae && !wants_vote) {
    throw std::invalid_argument("unknown strategy: " + opts.strategy +
                                " (expected basic, ae, or mix)");
  }

  const LoadedCorpus loaded = load_corpus(opts.corpus_dir);
  const GoldMap gold = gold_map(loaded.corpus);
  const std::vector<std::string> query_ids = split_ids(opts.split, loaded);
  if (query_ids.empty()) {
    throw std::runtime_error("split \"" + opts.split + "\" is empty");
  }

  std::optional<AEModel> model;
  if (wants_ae) {
    if (opts.model_path.empty()) {
      throw std::invalid_argument("strategy " + opts.strategy +
                                  " needs --model");
    }
    model.emplace(AEModel::load(opts.model_path));
    if (model->config().label_dim != loaded.vocabulary.size()) {
      throw std::runtime_error(
          "model was trained for " +
          std::to_string(model->config().label_dim) +
          " labels but the corpus has " +
          std::to_string(loaded.vocabulary.size()));
    }
  }
  const Cutoff cutoff = opts.top_r ? Cutoff::make_top_r()
                                   : Cutoff::make_threshold(opts.threshold);
  const WeightingScheme scheme = weighting_from_name(opts.weighting);

  // Neighbor source: sparse and dense indexes are told apart by file magic.
  const std::string magic = read_magic(opts.index_path);
  std::function<std::vector<Neighbor>(const Document&)> neighbors_of;
  InvertedIndex sparse;
  DenseIndex dense;
  DenseIndex query_vectors;
  std::unordered_map<std::string, std::size_t> query_row;
  ReprConfig repr;
  ExternalTerms externals;

  if (magic == "SIDX1") {
    sparse = InvertedIndex::load(opts.index_path);
    std::string repr_name;
    repr = repr_from_json(sparse.repr_json(), &repr_name);
    std::unordered_set<std::string> known(query_ids.begin(), query_ids.end());
    externals = load_externals(opts.externals, known);
    require_external_channels(repr, externals);
    neighbors_of = [&](const Document& doc) {
      const TermBag bag =
          document_terms(doc.title, doc.abstract_text, doc.id, repr, externals);
      if (bag.terms.empty()) return std::vector<Neighbor>{};
      return sparse.query(bag, opts.k + 1);
    };
  } else if (magic == "DVEC1") {
    dense = DenseIndex::load(opts.index_path);
    if (opts.vectors_path.empty()) {
      throw std::invalid_argument(
          "a dense index needs --vectors with the query document vectors");
    }
    query_vectors = DenseIndex::load(opts.vectors_path);
    if (query_vectors.dim() != dense.dim()) {
      throw std::runtime_error(
          "query vectors have dim " + std::to_string(query_vectors.dim()) +
          " but the index has dim " + std::to_string(dense.dim()));
    }
    for (std::size_t i = 0; i < query_vectors.doc_ids().size(); ++i) {
      query_row[query_vectors.doc_ids()[i]] = i;
    }
    neighbors_of = [&](const Document& doc) {
      const auto it = query_row.find(doc.id);
      if (it == query_row.end()) {
        throw std::runtime_error(opts.vectors_path + " lacks document " +
                                 doc.id);
      }
      return dense.query(query_vectors.vector(it->second), opts.k + 1);
    };
  } else {
    throw std::runtime_error(opts.index_path +
                             " is neither a sparse nor a dense index");
  }

  const std::size_t n = query_ids.size();
  std::vector<std::pair<std::string, Prediction>> predictions(n);
  std::vector<AePredictStats> stats(std::max<std::size_t>(1, opts.threads));
  std::atomic<std::size_t> empty_neighborhoods{0};

  parallel_for(n, opts.threads, [&](std::size_t i, std::size_t thread) {
    const Document* doc = loaded.corpus.find(query_ids[i]);
    if (doc == nullptr) {
      throw std::runtime_error("split names unknown document " +
                               query_ids[i]);
    }
    std::vector<Neighbor> neighbors = neighbors_of(*doc);
    // The query document itself is never a legitimate neighbor.
    std::erase_if(neighbors,
                  [&](const Neighbor& nb) { return nb.doc_id == doc->id; });
    if (neighbors.size() > opts.k) neighbors.resize(opts.k);

    Prediction pred;
    if (neighbors.empty()) {
      ++empty_neighborhoods;
    } else if (opts.strategy == "basic") {
      const std::uint32_t r =
          estimate_count(neighbors, gold, opts.weighted_count);
      pred = vote(neighbors, gold, r, opts.weighted_votes);
    } else if (opts.strategy == "ae") {
      pred = ae_predict(*model, neighbors, gold, scheme, cutoff,
                        &stats[thread]);
    } else {
      const std::uint32_t r =
          estimate_count(neighbors, gold, opts.weighted_count);
      const Prediction knn = vote(neighbors, gold, r, opts.weighted_votes);
      const Prediction ae =
          ae_predict(*model, neighbors, gold, scheme, cutoff, &stats[thread]);
      pred = mix(ae, knn);
    }
    predictions[i] = {doc->id, std::move(pred)};
  });

  write_predictions_jsonl(opts.out_path, predictions, loaded.vocabulary,
                          opts.ranked_cap);

  AePredictStats total;
  for (const auto& s : stats) {
    total.clamped_weights += s.clamped_weights;
    total.uniform_fallbacks += s.uniform_fallbacks;
  }
  std::uint64_t chosen_total = 0;
  for (const auto& [id, pred] : predictions) chosen_total += pred.chosen.size();
  std::printf("predicted %zu docs -> %s (avg %.2f labels/doc)\n", n,
              opts.out_path.c_str(),
              static_cast<double>(chosen_total) / static_cast<double>(n));
  if (empty_neighborhoods > 0) {
    std::fprintf(stderr, "warning: %zu documents had no neighbors\n",
                 empty_neighborhoods.load());
  }
  if (total.clamped_weights > 0) {
    std::fprintf(stderr, "warning: %llu neighbor weights clamped to zero\n",
                 static_cast<unsigned long long>(total.clamped_weights));
  }
  if (total.uniform_fallbacks > 0) {
    std::fprintf(stderr,
                 "warning: %llu documents fell back to uniform weights\n",
                 static_cast<unsigned long long>(total.uniform_fallbacks));
  }
  return 0;
}

struct EvaluateOpts {
  std::string corpus_dir;
  std::string predictions_path;
  std::string json_path;
  std::vector<std::size_t> ks = {5, 10};
};

int run_evaluate(const EvaluateOpts& opts) {
  const LoadedCorpus loaded = load_corpus(opts.corpus_dir);
  const GoldMap gold = gold_map(loaded.corpus);
  const auto predictions =
      read_predictions_jsonl(opts.predictions_path, loaded.vocabulary);
  const EvalReport report = evaluate(predictions, gold, opts.ks);
  std::fputs(report_table(report).c_str(), stdout);
  if (!opts.json_path.empty()) {
    std::ofstream os(opts.json_path);
    if (!os) {
      throw std::runtime_error("cannot open " + opts.json_path +
                               " for writing");
    }
    os << report_to_json(report) << '\n';
  }
  return 0;
}

struct ParamsOpts {
  std::string preset = "small";
  std::uint32_t label_dim = 29483;
};

int run_params(const ParamsOpts& opts) {
  const AEPreset preset = preset_from_name(opts.preset);
  const AEConfig config = preset_config(preset, opts.label_dim);
  const std::uint64_t counted = parameter_count(config);
  std::printf("%s label_dim=%u: %s parameters\n", preset_name(preset),
              opts.label_dim, with_commas(counted).c_str());
  const std::uint64_t published = published_parameter_count(preset);
  if (opts.label_dim == 29483 && published != counted) {
    const std::uint64_t diff =
        published > counted ? published - counted : counted - published;
    std::printf("published total: %s (differs by %s)\n",
                with_commas(published).c_str(), with_commas(diff).c_str());
  }
  return 0;
}

// Applies a flat key=value config file by appending the pairs as long
// options of the invoked subcommand (global options match as well), so the
// usual type checking and validation run on them. Tokens already on the
// command line keep precedence, and keys aimed at a different subcommand
// are skipped, which lets one file drive a whole pipeline.
std::vector<std::string> inject_config_args(std::vector<std::string> args,
                                            CLI::App& app) {
  // Locate --config and the subcommand without a full parse. Every token
  // ahead of the subcommand is a global option taking exactly one value.
  std::string config_path;
  CLI::App* sub = nullptr;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& tok = args[i];
    if (tok.rfind("--config=", 0) == 0) {
      config_path = tok.substr(9);
      continue;
    }
    if (tok == "--config") {
      if (i + 1 < args.size()) config_path = args[i + 1];
      ++i;
      continue;
    }
    if (sub != nullptr) continue;
    if (tok.rfind("--", 0) == 0) {
      if (tok.find('=') == std::string::npos) ++i;
      continue;
    }
    for (CLI::App* candidate : app.get_subcommands({})) {
      if (candidate->get_name() == tok) {
        sub = candidate;
        break;
      }
    }
  }
  if (config_path.empty()) return args;

  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open config file: " + config_path);

  const auto strip = [](const std::string& s) {
    const char* ws = " \t\r";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
  };

  std::vector<std::string> extra;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = strip(line);
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               " is not key=value: " + text);
    }
    const std::string key = strip(text.substr(0, eq));
    const std::string value = strip(text.substr(eq + 1));
    if (key == "config") continue;
    const std::string flag = "--" + key;
    CLI::Option* opt = sub ? sub->get_option_no_throw(flag) : nullptr;
    if (opt == nullptr) opt = app.get_option_no_throw(flag);
    if (opt == nullptr) continue;

    bool given = false;
    for (const auto& t : args) {
      if (t == flag || t.rfind(flag + "=", 0) == 0) {
        given = true;
        break;
      }
    }
    if (given) continue;

    if (opt->get_type_size_max() == 0) {
      // A switch takes no value on the command line; in the file only a
      // truthy spelling turns it on.
      std::string v = value;
      std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
      });
      if (v == "1" || v == "true" || v == "yes" || v == "on") {
        extra.push_back(flag);
      } else if (!(v == "0" || v == "false" || v == "no" || v == "off")) {
        throw std::runtime_error("config key " + key + " expects a boolean");
      }
      continue;
    }
    extra.push_back(flag + "=" + value);
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-label semantic indexing pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  app.add_option("--config", config_path,
                 "read options from a flat key=value file (flags override it)");

  std::uint64_t seed = 0;
  std::size_t threads = 1;
  app.add_option("--seed", seed, "seed for every random choice")
      ->capture_default_str();
  app.add_option("--threads", threads, "worker threads for per-document work")
      ->check(CLI::Range(std::size_t{1}, std::size_t{256}))
      ->capture_default_str();

  SynthOpts synth_opts;
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--out", synth_opts.out_dir, "output corpus directory")
      ->required();
  synth->add_option("--docs", synth_opts.config.docs, "documents to generate")
      ->capture_default_str();
  synth->add_option("--labels", synth_opts.config.labels, "label vocabulary size")
      ->capture_default_str();
  synth->add_option("--clusters", synth_opts.config.clusters,
                    "label co-occurrence clusters")
      ->capture_default_str();
  synth->add_option("--dev", synth_opts.dev, "dev split size")
      ->capture_default_str();
  synth->add_option("--test", synth_opts.test, "test split size")
      ->capture_default_str();
  synth->add_option("--vectors", synth_opts.vectors_path,
                    "also write dense vectors to this path");
  synth->add_option("--words-per-label", synth_opts.config.words_per_label)
      ->capture_default_str();
  synth->add_option("--shared-words", synth_opts.config.shared_words)
      ->capture_default_str();
  synth->add_option("--title-words", synth_opts.config.title_words)
      ->capture_default_str();
  synth->add_option("--abstract-words", synth_opts.config.abstract_words)
      ->capture_default_str();
  synth->add_option("--min-labels", synth_opts.config.min_labels_per_doc)
      ->capture_default_str();
  synth->add_option("--max-labels", synth_opts.config.max_labels_per_doc)
      ->capture_default_str();
  synth->add_option("--noise-rate", synth_opts.config.noise_word_rate)
      ->capture_default_str();
  synth->add_option("--vector-dim", synth_opts.config.vector_dim)
      ->capture_default_str();

  IngestOpts ingest_opts;
  auto* ingest = app.add_subcommand("ingest", "load a JSONL corpus");
  ingest->add_option("--input", ingest_opts.input, "JSONL input file")
      ->required();
  ingest->add_option("--out", ingest_opts.out_dir, "output corpus directory")
      ->required();
  ingest->add_option("--field-id", ingest_opts.fields.id)
      ->capture_default_str();
  ingest->add_option("--field-title", ingest_opts.fields.title)
      ->capture_default_str();
  ingest->add_option("--field-abstract", ingest_opts.fields.abstract_text)
      ->capture_default_str();
  ingest->add_option("--field-labels", ingest_opts.fields.labels)
      ->capture_default_str();
  ingest->add_flag("--allow-unlabeled", ingest_opts.allow_unlabeled,
                   "accept documents without labels");
  ingest->add_option("--dev", ingest_opts.dev, "dev split size")
      ->capture_default_str();
  ingest->add_option("--test", ingest_opts.test, "test split size")
      ->capture_default_str();

  BuildIndexOpts build_opts;
  auto* build = app.add_subcommand("build-index", "build a neighbor index");
  build->add_option("--corpus", build_opts.corpus_dir, "corpus directory")
      ->required();
  build->add_option("--out", build_opts.out_path, "index output path")
      ->required();
  build
      ->add_option("--representation", build_opts.representation,
                   "stems, keywords, lemmas, nps, deps, ners, multi, all, or "
                   "dense")
      ->capture_default_str();
  build->add_option("--split", build_opts.split, "train, dev, test, or all")
      ->capture_default_str();
  build->add_option("--stopwords", build_opts.stopwords_path,
                    "stopword file (one word per line)");
  build->add_option("--vectors", build_opts.vectors_path,
                    "dense vector file (representation dense)");
  build->add_option("--external", build_opts.externals,
                    "channel=path external term files (repeatable)");
  build->add_option("--window", build_opts.textrank.window,
                    "keyword co-occurrence window")
      ->capture_default_str();
  build->add_option("--top-n", build_opts.textrank.top_n,
                    "keywords kept per document")
      ->capture_default_str();

  TrainAeOpts train_opts;
  auto* train = app.add_subcommand("train-ae", "train the label autoencoder");
  train->add_option("--corpus", train_opts.corpus_dir, "corpus directory")
      ->required();
  train->add_option("--out", train_opts.out_path, "model output path")
      ->required();
  train
      ->add_option("--preset", train_opts.preset,
                   "small, medium, large, or custom")
      ->capture_default_str();
  train->add_option("--encoder", train_opts.encoder,
                    "encoder widths, outermost first (custom preset)")
      ->delimiter(',');
  train->add_option("--embedding", train_opts.embedding,
                    "embedding width (custom preset)");
  train->add_option("--dropout", train_opts.dropout, "dropout rate")
      ->capture_default_str();
  train->add_flag("--no-batch-norm", train_opts.no_batch_norm,
                  "disable batch normalization");
  train->add_option("--split", train_opts.split, "train or all")
      ->capture_default_str();
  train->add_option("--batch-size", train_opts.hyper.batch_size)
      ->capture_default_str();
  train->add_option("--epochs", train_opts.hyper.epochs)
      ->capture_default_str();
  train->add_option("--lr", train_opts.hyper.learning_rate, "learning rate")
      ->capture_default_str();
  train->add_flag("--progress", train_opts.hyper.log_progress,
                  "log per-epoch loss to stderr");

  PredictOpts predict_opts;
  auto* predict = app.add_subcommand("predict", "predict labels for a split");
  predict->add_option("--corpus", predict_opts.corpus_dir, "corpus directory")
      ->required();
  predict->add_option("--index", predict_opts.index_path, "neighbor index")
      ->required();
  predict->add_option("--out", predict_opts.out_path, "predictions JSONL")
      ->required();
  predict
      ->add_option("--strategy", predict_opts.strategy, "basic, ae, or mix")
      ->capture_default_str();
  predict->add_option("--model", predict_opts.model_path,
                      "autoencoder model (strategies ae and mix)");
  predict->add_option("--vectors", predict_opts.vectors_path,
                      "query vectors (dense index)");
  predict->add_option("--k", predict_opts.k, "neighbors per query")
      ->capture_default_str();
  predict
      ->add_option("--weighting", predict_opts.weighting,
                   "difference or square")
      ->capture_default_str();
  auto* thr_opt =
      predict->add_option("--threshold", predict_opts.threshold,
                          "decoder score cutoff (strategies ae and mix)");
  thr_opt->capture_default_str();
  predict->add_flag("--top-r", predict_opts.top_r,
                    "keep the top r decoder scores instead of thresholding")
      ->excludes(thr_opt);
  predict->add_option("--split", predict_opts.split,
                      "train, dev, test, or all")
      ->capture_default_str();
  predict->add_option("--external", predict_opts.externals,
                      "channel=path external term files (repeatable)");
  predict->add_flag("--weighted-votes", predict_opts.weighted_votes,
                    "weight votes by 1 - distance");
  predict->add_flag("--weighted-count", predict_opts.weighted_count,
                    "weight the label-count estimate by 1 - distance");
  predict->add_option("--ranked-cap", predict_opts.ranked_cap,
                      "ranked entries kept per document in the output")
      ->capture_default_str();

  EvaluateOpts eval_opts;
  auto* evaluate = app.add_subcommand("evaluate", "score predictions");
  evaluate->add_option("--corpus", eval_opts.corpus_dir, "corpus directory")
      ->required();
  evaluate
      ->add_option("--predictions", eval_opts.predictions_path,
                   "predictions JSONL")
      ->required();
  evaluate->add_option("--ks", eval_opts.ks, "ranking depths")
      ->delimiter(',')
      ->capture_default_str();
  evaluate->add_option("--json", eval_opts.json_path,
                       "also write the report as JSON here");

  ParamsOpts params_opts;
  auto* params = app.add_subcommand("params", "print parameter accounting");
  params->add_option("--preset", params_opts.preset, "small, medium, or large")
      ->required();
  params->add_option("--label-dim", params_opts.label_dim)
      ->capture_default_str();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = inject_config_args(std::move(args), app);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  try {
    synth_opts.config.seed = seed;
    ingest_opts.seed = seed;
    train_opts.hyper.seed = seed;
    predict_opts.threads = threads;
    if (synth->parsed()) return run_synth(synth_opts);
    if (ingest->parsed()) return run_ingest(ingest_opts);
    if (build->parsed()) return run_build_index(build_opts);
    if (train->parsed()) return run_train_ae(train_opts);
    if (predict->parsed()) return run_predict(predict_opts);
    if (evaluate->parsed()) return run_evaluate(eval_opts);
    if (params->parsed()) return run_params(params_opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
