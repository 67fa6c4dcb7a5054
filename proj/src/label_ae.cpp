#include "semidx/label_ae.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "semidx/io_util.hpp"
#include "semidx/rng.hpp"

namespace semidx {

namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

std::string join_faults(const std::vector<std::string>& faults) {
  std::string out;
  for (const auto& f : faults) {
    if (!out.empty()) out += "; ";
    out += f;
  }
  return out;
}

// Multi-hot expansion shared by the public float helper and the templated
// network internals.
template <typename T>
std::vector<T> to_multi_hot(const LabelSet& labels, std::size_t dim) {
  std::vector<T> v(dim, T(0));
  for (LabelId id : labels) {
    if (id >= dim) {
      throw std::out_of_range("label id " + std::to_string(id) +
                              " is out of range for dimension " +
                              std::to_string(dim));
    }
    v[id] = T(1);
  }
  return v;
}

template <typename T>
T sigmoid(T z) {
  return T(1) / (T(1) + std::exp(-z));
}

}  // namespace

AEPreset preset_from_name(std::string_view name) {
  if (name == "small") return AEPreset::kSmall;
  if (name == "medium") return AEPreset::kMedium;
  if (name == "large") return AEPreset::kLarge;
  throw std::invalid_argument("unknown autoencoder preset: " +
                              std::string(name));
}

const char* preset_name(AEPreset p) {
  switch (p) {
    case AEPreset::kSmall:
      return "small";
    case AEPreset::kMedium:
      return "medium";
    case AEPreset::kLarge:
      return "large";
  }
  throw std::logic_error("invalid preset value");
}

AEConfig preset_config(AEPreset p, std::uint32_t label_dim) {
  AEConfig c;
  c.label_dim = label_dim;
  switch (p) {
    case AEPreset::kSmall:
      c.encoder_layers = {1024, 256};
      c.embedding_dim = 64;
      break;
    case AEPreset::kMedium:
      c.encoder_layers = {2048, 512};
      c.embedding_dim = 128;
      break;
    case AEPreset::kLarge:
      c.encoder_layers = {4096, 1024};
      c.embedding_dim = 128;
      break;
  }
  c.decoder_layers.assign(c.encoder_layers.rbegin(), c.encoder_layers.rend());
  return c;
}

void validate_config(const AEConfig& config) {
  std::vector<std::string> faults;
  if (config.label_dim == 0) faults.push_back("label_dim must be positive");
  if (config.encoder_layers.empty()) {
    faults.push_back("encoder_layers must be non-empty");
  } else if (std::find(config.encoder_layers.begin(),
                       config.encoder_layers.end(),
                       0u) != config.encoder_layers.end()) {
    faults.push_back("encoder_layers widths must be positive");
  }
  if (config.embedding_dim == 0) {
    faults.push_back("embedding_dim must be positive");
  } else if (!config.encoder_layers.empty()) {
    const std::uint32_t narrowest = *std::min_element(
        config.encoder_layers.begin(), config.encoder_layers.end());
    if (narrowest != 0 && config.embedding_dim >= narrowest) {
      faults.push_back("embedding_dim must be smaller than every encoder layer");
    }
  }
  std::vector<std::uint32_t> mirror(config.encoder_layers.rbegin(),
                                    config.encoder_layers.rend());
  if (config.decoder_layers != mirror) {
    faults.push_back("decoder_layers must mirror encoder_layers in reverse");
  }
  if (!(config.dropout_rate >= 0.0 && config.dropout_rate < 1.0)) {
    faults.push_back("dropout_rate must lie in [0, 1)");
  }
  if (!faults.empty()) {
    throw std::invalid_argument("invalid autoencoder config: " +
                                join_faults(faults));
  }
}

std::uint64_t parameter_count(const AEConfig& config) {
  validate_config(config);
  std::vector<std::uint64_t> dims;
  dims.push_back(config.label_dim);
  for (auto w : config.encoder_layers) dims.push_back(w);
  dims.push_back(config.embedding_dim);
  for (auto w : config.decoder_layers) dims.push_back(w);
  dims.push_back(config.label_dim);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    total += dims[i] * dims[i + 1] + dims[i + 1];
  }
  if (config.batch_norm) {
    for (auto w : config.encoder_layers) total += 2ull * w;
    for (auto w : config.decoder_layers) total += 2ull * w;
  }
  return total;
}

std::uint64_t published_parameter_count(AEPreset p) {
  switch (p) {
    case AEPreset::kSmall:
      return 60'975'467ull;
    case AEPreset::kMedium:
      return 123'035'563ull;
    case AEPreset::kLarge:
      return 250'256'299ull;
  }
  throw std::logic_error("invalid preset value");
}

std::vector<float> multi_hot(const LabelSet& labels, std::size_t dim) {
  return to_multi_hot<float>(labels, dim);
}

template <typename T>
Network<T>::Network(const AEConfig& config, std::uint64_t init_seed)
    : config_(config), init_seed_(init_seed) {
  validate_config(config);

  auto add_layer = [this](std::size_t in, std::size_t out, bool bn, bool relu,
                          bool dropout) {
    Layer l;
    l.in = in;
    l.out = out;
    l.w.resize(in * out);
    l.b.assign(out, T(0));
    l.has_bn = bn;
    if (bn) {
      l.gamma.assign(out, T(1));
      l.beta.assign(out, T(0));
      l.run_mean.assign(out, T(0));
      l.run_var.assign(out, T(1));
    }
    l.relu = relu;
    l.dropout = dropout;
    layers_.push_back(std::move(l));
  };

  std::size_t prev = config.label_dim;
  for (auto w : config.encoder_layers) {
    add_layer(prev, w, config.batch_norm, true, true);
    prev = w;
  }
  embedding_index_ = layers_.size();
  add_layer(prev, config.embedding_dim, false, true, false);
  prev = config.embedding_dim;
  for (auto w : config.decoder_layers) {
    add_layer(prev, w, config.batch_norm, true, true);
    prev = w;
  }
  add_layer(prev, config.label_dim, false, false, false);

  // He-uniform initialization: weights uniform in [-sqrt(6/fan_in),
  // sqrt(6/fan_in)], biases zero, batch-norm scale one and shift zero.
  Rng rng(init_seed);
  for (auto& layer : layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in));
    for (auto& w : layer.w) w = static_cast<T>(rng.next_uniform(-limit, limit));
  }
}

template <typename T>
void Network<T>::eval_layer(const Layer& layer, std::span<const T> in,
                            std::vector<T>& out) const {
  out.assign(layer.out, T(0));
  // Multi-hot rows and post-ReLU activations are mostly zero; skipping zero
  // inputs leaves every accumulated sum bitwise unchanged.
  for (std::size_t i = 0; i < layer.in; ++i) {
    const T a = in[i];
    if (a == T(0)) continue;
    const T* w_row = layer.w.data() + i * layer.out;
    for (std::size_t j = 0; j < layer.out; ++j) out[j] += a * w_row[j];
  }
  for (std::size_t j = 0; j < layer.out; ++j) out[j] += layer.b[j];
  if (layer.has_bn) {
    for (std::size_t j = 0; j < layer.out; ++j) {
      const double inv =
          1.0 / std::sqrt(static_cast<double>(layer.run_var[j]) + kBnEps);
      out[j] = static_cast<T>(
          static_cast<double>(layer.gamma[j]) *
              ((static_cast<double>(out[j]) - layer.run_mean[j]) * inv) +
          layer.beta[j]);
    }
  }
  if (layer.relu) {
    for (auto& v : out) v = v > T(0) ? v : T(0);
  } else {
    for (auto& v : out) v = sigmoid(v);
  }
}

template <typename T>
typename Network<T>::ForwardResult Network<T>::forward(
    std::span<const T> x) const {
  if (x.size() != config_.label_dim) {
    throw std::invalid_argument(
        "input has dimension " + std::to_string(x.size()) +
        " but the model expects " + std::to_string(config_.label_dim));
  }
  ForwardResult r;
  std::vector<T> cur(x.begin(), x.end());
  std::vector<T> next;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    eval_layer(layers_[l], cur, next);
    cur.swap(next);
    if (l == embedding_index_) r.latent = cur;
  }
  r.reconstruction = std::move(cur);
  return r;
}

template <typename T>
std::vector<T> Network<T>::encode(std::span<const T> x) const {
  if (x.size() != config_.label_dim) {
    throw std::invalid_argument(
        "input has dimension " + std::to_string(x.size()) +
        " but the model expects " + std::to_string(config_.label_dim));
  }
  std::vector<T> cur(x.begin(), x.end());
  std::vector<T> next;
  for (std::size_t l = 0; l <= embedding_index_; ++l) {
    eval_layer(layers_[l], cur, next);
    cur.swap(next);
  }
  return cur;
}

template <typename T>
std::vector<T> Network<T>::encode_labels(const LabelSet& labels) const {
  const auto x = to_multi_hot<T>(labels, config_.label_dim);
  return encode(x);
}

template <typename T>
std::vector<T> Network<T>::decode(std::span<const T> z) const {
  if (z.size() != config_.embedding_dim) {
    throw std::invalid_argument(
        "latent vector has dimension " + std::to_string(z.size()) +
        " but the model expects " + std::to_string(config_.embedding_dim));
  }
  std::vector<T> cur(z.begin(), z.end());
  std::vector<T> next;
  for (std::size_t l = embedding_index_ + 1; l < layers_.size(); ++l) {
    eval_layer(layers_[l], cur, next);
    cur.swap(next);
  }
  return cur;
}

// Everything one batch forward pass produces, kept for the backward pass.
// All matrices are row-major batch x out. `pre` holds pre-activation values
// (after batch norm when present); `act` holds the final layer outputs.
template <typename T>
struct Network<T>::BatchCache {
  std::size_t batch = 0;
  std::vector<std::vector<T>> lin;      // affine outputs
  std::vector<std::vector<T>> pre;      // activation inputs
  std::vector<std::vector<T>> act;      // layer outputs
  std::vector<std::vector<T>> mask;     // dropout scales, empty when unused
  std::vector<std::vector<T>> xhat;     // normalized values, batch-norm layers
  std::vector<std::vector<T>> mu;       // batch means per feature
  std::vector<std::vector<T>> var;      // biased batch variances per feature
  std::vector<std::vector<T>> inv_std;  // 1/sqrt(var + eps)
  double loss = 0.0;
};

template <typename T>
double Network<T>::forward_batch(const std::vector<std::vector<T>>& inputs,
                                 Rng* dropout_rng, BatchCache& cache) const {
  const std::size_t batch = inputs.size();
  if (batch == 0) throw std::invalid_argument("batch must be non-empty");
  for (const auto& row : inputs) {
    if (row.size() != config_.label_dim) {
      throw std::invalid_argument(
          "batch row has dimension " + std::to_string(row.size()) +
          " but the model expects " + std::to_string(config_.label_dim));
    }
  }

  const std::size_t n_layers = layers_.size();
  cache.batch = batch;
  cache.lin.assign(n_layers, {});
  cache.pre.assign(n_layers, {});
  cache.act.assign(n_layers, {});
  cache.mask.assign(n_layers, {});
  cache.xhat.assign(n_layers, {});
  cache.mu.assign(n_layers, {});
  cache.var.assign(n_layers, {});
  cache.inv_std.assign(n_layers, {});

  const bool use_dropout = dropout_rng != nullptr && config_.dropout_rate > 0.0;

  for (std::size_t l = 0; l < n_layers; ++l) {
    const Layer& layer = layers_[l];
    const std::size_t out = layer.out;
    auto& lin = cache.lin[l];
    lin.assign(batch * out, T(0));
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const T* in_row = (l == 0) ? inputs[bi].data()
                                 : cache.act[l - 1].data() + bi * layer.in;
      T* out_row = lin.data() + bi * out;
      for (std::size_t i = 0; i < layer.in; ++i) {
        const T a = in_row[i];
        if (a == T(0)) continue;
        const T* w_row = layer.w.data() + i * out;
        for (std::size_t j = 0; j < out; ++j) out_row[j] += a * w_row[j];
      }
      for (std::size_t j = 0; j < out; ++j) out_row[j] += layer.b[j];
    }

    auto& pre = cache.pre[l];
    if (layer.has_bn) {
      // Batch statistics normalize here; the biased variance is what the
      // normalization uses, the running estimate is corrected on update.
      auto& mu = cache.mu[l];
      auto& var = cache.var[l];
      auto& inv_std = cache.inv_std[l];
      auto& xhat = cache.xhat[l];
      mu.assign(out, T(0));
      var.assign(out, T(0));
      inv_std.assign(out, T(0));
      for (std::size_t j = 0; j < out; ++j) {
        double s = 0.0;
        for (std::size_t bi = 0; bi < batch; ++bi) {
          s += static_cast<double>(lin[bi * out + j]);
        }
        const double m = s / static_cast<double>(batch);
        double sq = 0.0;
        for (std::size_t bi = 0; bi < batch; ++bi) {
          const double d = static_cast<double>(lin[bi * out + j]) - m;
          sq += d * d;
        }
        const double v = sq / static_cast<double>(batch);
        mu[j] = static_cast<T>(m);
        var[j] = static_cast<T>(v);
        inv_std[j] = static_cast<T>(1.0 / std::sqrt(v + kBnEps));
      }
      xhat.assign(batch * out, T(0));
      pre.assign(batch * out, T(0));
      for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t j = 0; j < out; ++j) {
          const std::size_t k = bi * out + j;
          const T xh = (lin[k] - mu[j]) * inv_std[j];
          xhat[k] = xh;
          pre[k] = layer.gamma[j] * xh + layer.beta[j];
        }
      }
    } else {
      pre = lin;
    }

    auto& act = cache.act[l];
    act.resize(batch * out);
    if (layer.relu) {
      for (std::size_t k = 0; k < act.size(); ++k) {
        act[k] = pre[k] > T(0) ? pre[k] : T(0);
      }
    } else {
      for (std::size_t k = 0; k < act.size(); ++k) act[k] = sigmoid(pre[k]);
    }
    if (layer.dropout && use_dropout) {
      // Inverted dropout: surviving units are scaled by 1/(1-rate) so the
      // eval path needs no rescaling.
      auto& mask = cache.mask[l];
      mask.resize(batch * out);
      const T scale = static_cast<T>(1.0 / (1.0 - config_.dropout_rate));
      for (std::size_t k = 0; k < mask.size(); ++k) {
        mask[k] = dropout_rng->next_bernoulli(config_.dropout_rate) ? T(0)
                                                                    : scale;
        act[k] *= mask[k];
      }
    }
  }

  // Mean binary cross-entropy computed from the logits; the softplus form
  // max(z,0) - z*x + log1p(exp(-|z|)) stays finite where sigmoid saturates.
  const std::size_t dim = layers_.back().out;
  const auto& logits = cache.lin.back();
  double loss = 0.0;
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double z = static_cast<double>(logits[bi * dim + j]);
      const double x = static_cast<double>(inputs[bi][j]);
      loss += std::max(z, 0.0) - z * x + std::log1p(std::exp(-std::abs(z)));
    }
  }
  loss /= static_cast<double>(batch) * static_cast<double>(dim);
  cache.loss = loss;
  return loss;
}

template <typename T>
void Network<T>::apply_batch_stats(const BatchCache& cache) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Layer& layer = layers_[l];
    if (!layer.has_bn) continue;
    const double b = static_cast<double>(cache.batch);
    for (std::size_t j = 0; j < layer.out; ++j) {
      const double m = static_cast<double>(cache.mu[l][j]);
      double v = static_cast<double>(cache.var[l][j]);
      // Running variance tracks the unbiased estimate; a batch of one has no
      // unbiased estimate, so the biased value stands in.
      if (cache.batch > 1) v = v * b / (b - 1.0);
      layer.run_mean[j] = static_cast<T>((1.0 - kBnMomentum) * layer.run_mean[j] +
                                         kBnMomentum * m);
      layer.run_var[j] = static_cast<T>((1.0 - kBnMomentum) * layer.run_var[j] +
                                        kBnMomentum * v);
    }
  }
}

template <typename T>
void Network<T>::backward_batch(const std::vector<std::vector<T>>& inputs,
                                const BatchCache& cache,
                                std::vector<T>& grads) const {
  const std::size_t batch = cache.batch;
  grads.assign(parameter_count(), T(0));

  // Flat offsets of each layer's parameter slice (w, b[, gamma, beta]).
  std::vector<std::size_t> offsets(layers_.size());
  std::size_t pos = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    offsets[l] = pos;
    pos += layers_[l].w.size() + layers_[l].b.size();
    if (layers_[l].has_bn) pos += 2 * layers_[l].out;
  }

  std::vector<T> d_lin;  // gradient w.r.t. the current layer's affine output
  std::vector<T> d_act;  // gradient w.r.t. the layer-below output

  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& layer = layers_[li];
    const std::size_t out = layer.out;

    if (li + 1 == layers_.size()) {
      // d(mean BCE)/dz through the sigmoid collapses to (sigmoid(z) - x)
      // divided by batch * dim.
      d_lin.assign(batch * out, T(0));
      const auto& act = cache.act[li];
      const double denom =
          static_cast<double>(batch) * static_cast<double>(out);
      for (std::size_t bi = 0; bi < batch; ++bi) {
        for (std::size_t j = 0; j < out; ++j) {
          const std::size_t k = bi * out + j;
          d_lin[k] = static_cast<T>(
              (static_cast<double>(act[k]) -
               static_cast<double>(inputs[bi][j])) /
              denom);
        }
      }
    } else {
      // d_act arrives from the layer above; peel dropout, then the ReLU,
      // then batch norm.
      if (!cache.mask[li].empty()) {
        const auto& mask = cache.mask[li];
        for (std::size_t k = 0; k < d_act.size(); ++k) d_act[k] *= mask[k];
      }
      const auto& pre = cache.pre[li];
      for (std::size_t k = 0; k < d_act.size(); ++k) {
        if (!(pre[k] > T(0))) d_act[k] = T(0);
      }
      if (layer.has_bn) {
        const auto& xhat = cache.xhat[li];
        const auto& inv_std = cache.inv_std[li];
        T* g_gamma = grads.data() + offsets[li] + layer.w.size() + out;
        T* g_beta = g_gamma + out;
        d_lin.assign(batch * out, T(0));
        for (std::size_t j = 0; j < out; ++j) {
          double sum_dy = 0.0;
          double sum_dy_xhat = 0.0;
          for (std::size_t bi = 0; bi < batch; ++bi) {
            const std::size_t k = bi * out + j;
            const double dy = static_cast<double>(d_act[k]);
            sum_dy += dy;
            sum_dy_xhat += dy * static_cast<double>(xhat[k]);
          }
          g_gamma[j] = static_cast<T>(sum_dy_xhat);
          g_beta[j] = static_cast<T>(sum_dy);
          const double gamma = static_cast<double>(layer.gamma[j]);
          const double m1 = gamma * sum_dy / static_cast<double>(batch);
          const double m2 = gamma * sum_dy_xhat / static_cast<double>(batch);
          const double istd = static_cast<double>(inv_std[j]);
          for (std::size_t bi = 0; bi < batch; ++bi) {
            const std::size_t k = bi * out + j;
            const double dxhat = gamma * static_cast<double>(d_act[k]);
            d_lin[k] = static_cast<T>(
                istd * (dxhat - m1 - static_cast<double>(xhat[k]) * m2));
          }
        }
      } else {
        d_lin = d_act;
      }
    }

    // Affine gradients. Zero activations are skipped; the products they
    // would add are exact zeros.
    T* g_w = grads.data() + offsets[li];
    T* g_b = g_w + layer.w.size();
    for (std::size_t bi = 0; bi < batch; ++bi) {
      const T* in_row = (li == 0) ? inputs[bi].data()
                                  : cache.act[li - 1].data() + bi * layer.in;
      const T* d_row = d_lin.data() + bi * out;
      for (std::size_t i = 0; i < layer.in; ++i) {
        const T a = in_row[i];
        if (a == T(0)) continue;
        T* g_row = g_w + i * out;
        for (std::size_t j = 0; j < out; ++j) g_row[j] += a * d_row[j];
      }
      for (std::size_t j = 0; j < out; ++j) g_b[j] += d_row[j];
    }

    if (li > 0) {
      d_act.assign(batch * layer.in, T(0));
      for (std::size_t bi = 0; bi < batch; ++bi) {
        const T* d_row = d_lin.data() + bi * out;
        T* dst = d_act.data() + bi * layer.in;
        for (std::size_t i = 0; i < layer.in; ++i) {
          const T* w_row = layer.w.data() + i * out;
          T acc = T(0);
          for (std::size_t j = 0; j < out; ++j) acc += d_row[j] * w_row[j];
          dst[i] = acc;
        }
      }
    }
  }
}

template <typename T>
std::vector<double> Network<T>::train(const std::vector<LabelSet>& examples,
                                      const TrainConfig& hyper) {
  std::vector<std::string> faults;
  if (hyper.batch_size == 0) faults.push_back("batch_size must be positive");
  if (hyper.epochs == 0) faults.push_back("epochs must be positive");
  if (!(hyper.learning_rate > 0.0)) {
    faults.push_back("learning_rate must be positive");
  }
  if (!(hyper.beta1 >= 0.0 && hyper.beta1 < 1.0)) {
    faults.push_back("beta1 must lie in [0, 1)");
  }
  if (!(hyper.beta2 >= 0.0 && hyper.beta2 < 1.0)) {
    faults.push_back("beta2 must lie in [0, 1)");
  }
  if (!(hyper.adam_eps > 0.0)) faults.push_back("adam_eps must be positive");
  if (!faults.empty()) {
    throw std::invalid_argument("invalid training config: " +
                                join_faults(faults));
  }
  if (examples.size() < hyper.batch_size) {
    throw std::invalid_argument(
        "training needs at least batch_size examples: have " +
        std::to_string(examples.size()) + ", batch_size " +
        std::to_string(hyper.batch_size));
  }

  const std::size_t n_params = parameter_count();
  std::vector<double> adam_m(n_params, 0.0);
  std::vector<double> adam_v(n_params, 0.0);
  std::uint64_t step = 0;

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  // Independent deterministic streams for example order and dropout masks.
  Rng shuffle_rng(mix_seed(hyper.seed, 0x51));
  Rng dropout_rng(mix_seed(hyper.seed, 0xd0));

  std::vector<double> losses;
  losses.reserve(hyper.epochs);
  BatchCache cache;
  std::vector<T> grads;
  std::vector<std::vector<T>> batch_inputs;

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double weighted_loss = 0.0;
    for (std::size_t start = 0; start < examples.size();
         start += hyper.batch_size) {
      const std::size_t stop =
          std::min(examples.size(), start + hyper.batch_size);
      batch_inputs.clear();
      batch_inputs.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        batch_inputs.push_back(
            to_multi_hot<T>(examples[order[i]], config_.label_dim));
      }

      const double loss = forward_batch(batch_inputs, &dropout_rng, cache);
      if (!std::isfinite(loss)) {
        throw std::runtime_error(
            "training diverged: non-finite loss in epoch " +
            std::to_string(epochs_trained_ + 1) + " at example offset " +
            std::to_string(start) + " (last finite learning rate " +
            std::to_string(hyper.learning_rate) + ")");
      }
      apply_batch_stats(cache);
      backward_batch(batch_inputs, cache, grads);

      // Adam step with bias correction. Moments are kept in double so the
      // float and double builds share one update rule.
      ++step;
      const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
      std::size_t p = 0;
      auto update = [&](std::vector<T>& param) {
        for (auto& w : param) {
          const double g = static_cast<double>(grads[p]);
          adam_m[p] = hyper.beta1 * adam_m[p] + (1.0 - hyper.beta1) * g;
          adam_v[p] = hyper.beta2 * adam_v[p] + (1.0 - hyper.beta2) * g * g;
          const double m_hat = adam_m[p] / bc1;
          const double v_hat = adam_v[p] / bc2;
          w = static_cast<T>(static_cast<double>(w) -
                             hyper.learning_rate * m_hat /
                                 (std::sqrt(v_hat) + hyper.adam_eps));
          ++p;
        }
      };
      for (auto& layer : layers_) {
        update(layer.w);
        update(layer.b);
        if (layer.has_bn) {
          update(layer.gamma);
          update(layer.beta);
        }
      }

      weighted_loss += loss * static_cast<double>(stop - start);
    }

    const double epoch_loss =
        weighted_loss / static_cast<double>(examples.size());
    losses.push_back(epoch_loss);
    ++epochs_trained_;
    if (hyper.log_progress) {
      std::fprintf(stderr, "[train] epoch %u/%zu loss %.6f\n", epochs_trained_,
                   hyper.epochs, epoch_loss);
    }
  }
  return losses;
}

template <typename T>
std::uint64_t Network<T>::parameter_count() const {
  return ::semidx::parameter_count(config_);
}

template <typename T>
double Network<T>::batch_loss(const std::vector<LabelSet>& batch) const {
  if (batch.empty()) throw std::invalid_argument("batch must be non-empty");
  std::vector<std::vector<T>> inputs;
  inputs.reserve(batch.size());
  for (const auto& labels : batch) {
    inputs.push_back(to_multi_hot<T>(labels, config_.label_dim));
  }
  BatchCache cache;
  return forward_batch(inputs, nullptr, cache);
}

template <typename T>
std::vector<T> Network<T>::batch_gradients(
    const std::vector<LabelSet>& batch) const {
  if (batch.empty()) throw std::invalid_argument("batch must be non-empty");
  std::vector<std::vector<T>> inputs;
  inputs.reserve(batch.size());
  for (const auto& labels : batch) {
    inputs.push_back(to_multi_hot<T>(labels, config_.label_dim));
  }
  BatchCache cache;
  forward_batch(inputs, nullptr, cache);
  std::vector<T> grads;
  backward_batch(inputs, cache, grads);
  return grads;
}

template <typename T>
std::vector<T> Network<T>::flat_parameters() const {
  std::vector<T> flat;
  flat.reserve(parameter_count());
  for (const auto& layer : layers_) {
    flat.insert(flat.end(), layer.w.begin(), layer.w.end());
    flat.insert(flat.end(), layer.b.begin(), layer.b.end());
    if (layer.has_bn) {
      flat.insert(flat.end(), layer.gamma.begin(), layer.gamma.end());
      flat.insert(flat.end(), layer.beta.begin(), layer.beta.end());
    }
  }
  return flat;
}

template <typename T>
void Network<T>::set_flat_parameters(const std::vector<T>& flat) {
  if (flat.size() != parameter_count()) {
    throw std::invalid_argument(
        "flat parameter vector has " + std::to_string(flat.size()) +
        " entries, expected " + std::to_string(parameter_count()));
  }
  std::size_t p = 0;
  auto take = [&](std::vector<T>& dst) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(p), dst.size(),
                dst.begin());
    p += dst.size();
  };
  for (auto& layer : layers_) {
    take(layer.w);
    take(layer.b);
    if (layer.has_bn) {
      take(layer.gamma);
      take(layer.beta);
    }
  }
}

template <typename T>
void Network<T>::save(const std::string& path) const
  requires std::same_as<T, float>
{
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");

  nlohmann::json header;
  header["config"] = {
      {"label_dim", config_.label_dim},
      {"encoder_layers", config_.encoder_layers},
      {"embedding_dim", config_.embedding_dim},
      {"decoder_layers", config_.decoder_layers},
      {"dropout_rate", config_.dropout_rate},
      {"batch_norm", config_.batch_norm},
  };
  header["epoch"] = epochs_trained_;
  header["seed"] = init_seed_;
  const std::string header_str = header.dump();

  os.write("LAE1", 4);
  write_le<std::uint64_t>(os, header_str.size());
  os.write(header_str.data(),
           static_cast<std::streamsize>(header_str.size()));
  for (const auto& layer : layers_) {
    write_f32_array(os, layer.w.data(), layer.w.size());
    write_f32_array(os, layer.b.data(), layer.b.size());
    if (layer.has_bn) {
      write_f32_array(os, layer.gamma.data(), layer.gamma.size());
      write_f32_array(os, layer.beta.data(), layer.beta.size());
      write_f32_array(os, layer.run_mean.data(), layer.run_mean.size());
      write_f32_array(os, layer.run_var.data(), layer.run_var.size());
    }
  }
  os.flush();
  if (!os) throw std::runtime_error("failed writing model file " + path);
}

template <typename T>
Network<T> Network<T>::load(const std::string& path)
  requires std::same_as<T, float>
{
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);

  char magic[4];
  is.read(magic, 4);
  if (!is || std::string_view(magic, 4) != "LAE1") {
    throw std::runtime_error(path + " is not a model file (bad magic)");
  }
  const auto header_len = read_le<std::uint64_t>(is, "model header length");
  std::string header_str(header_len, '\0');
  is.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!is) {
    throw std::runtime_error(
        "unexpected end of file while reading model header");
  }

  AEConfig config;
  std::uint32_t epoch = 0;
  std::uint64_t seed = 0;
  try {
    const nlohmann::json header = nlohmann::json::parse(header_str);
    const auto& jc = header.at("config");
    config.label_dim = jc.at("label_dim").get<std::uint32_t>();
    config.encoder_layers =
        jc.at("encoder_layers").get<std::vector<std::uint32_t>>();
    config.embedding_dim = jc.at("embedding_dim").get<std::uint32_t>();
    config.decoder_layers =
        jc.at("decoder_layers").get<std::vector<std::uint32_t>>();
    config.dropout_rate = jc.at("dropout_rate").get<double>();
    config.batch_norm = jc.at("batch_norm").get<bool>();
    epoch = header.at("epoch").get<std::uint32_t>();
    seed = header.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("corrupt model header in " + path + ": " +
                             e.what());
  }

  Network net(config, seed);
  net.epochs_trained_ = epoch;
  for (auto& layer : net.layers_) {
    read_f32_array(is, layer.w.data(), layer.w.size(), "model weights");
    read_f32_array(is, layer.b.data(), layer.b.size(), "model bias");
    if (layer.has_bn) {
      read_f32_array(is, layer.gamma.data(), layer.gamma.size(),
                     "batch-norm scale");
      read_f32_array(is, layer.beta.data(), layer.beta.size(),
                     "batch-norm shift");
      read_f32_array(is, layer.run_mean.data(), layer.run_mean.size(),
                     "batch-norm running mean");
      read_f32_array(is, layer.run_var.data(), layer.run_var.size(),
                     "batch-norm running variance");
    }
  }
  if (is.peek() != EOF) {
    throw std::runtime_error("trailing bytes after model tensors in " + path);
  }

  for (const auto& layer : net.layers_) {
    auto check_finite = [&](const std::vector<float>& tensor) {
      for (float v : tensor) {
        if (!std::isfinite(v)) {
          throw std::runtime_error("corrupt model in " + path +
                                   ": non-finite parameter");
        }
      }
    };
    check_finite(layer.w);
    check_finite(layer.b);
    if (layer.has_bn) {
      check_finite(layer.gamma);
      check_finite(layer.beta);
      check_finite(layer.run_mean);
      check_finite(layer.run_var);
      for (float v : layer.run_var) {
        if (!(v > 0.0f)) {
          throw std::runtime_error("corrupt model in " + path +
                                   ": non-positive running variance");
        }
      }
    }
  }
  return net;
}

AEModel train_label_ae(const std::vector<LabelSet>& examples,
                       const AEConfig& config, const TrainConfig& hyper) {
  // The init stream is derived from the training seed but distinct from the
  // shuffle and dropout streams inside train().
  AEModel model(config, mix_seed(hyper.seed, 0x1e));
  model.train(examples, hyper);
  return model;
}

template class Network<float>;
template class Network<double>;

}  // namespace semidx
