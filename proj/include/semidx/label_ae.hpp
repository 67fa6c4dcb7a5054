#pragma once

#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semidx/types.hpp"

namespace semidx {

// Architecture of the label autoencoder. The decoder always mirrors the
// encoder; the invariant is validated, not implied.
struct AEConfig {
  std::uint32_t label_dim = 0;
  std::vector<std::uint32_t> encoder_layers;  // hidden widths, outermost first
  std::uint32_t embedding_dim = 0;
  std::vector<std::uint32_t> decoder_layers;  // reverse(encoder_layers)
  double dropout_rate = 0.2;
  bool batch_norm = true;
};

enum class AEPreset { kSmall, kMedium, kLarge };

AEPreset preset_from_name(std::string_view name);  // small | medium | large
const char* preset_name(AEPreset p);

// Published full-scale presets; label_dim defaults to the 29,483-descriptor
// vocabulary they were defined for.
AEConfig preset_config(AEPreset p, std::uint32_t label_dim = 29483);

// Throws with a message listing every violated field.
void validate_config(const AEConfig& config);

// Trainable parameters: affine in*out + out per layer, plus gamma and beta
// (2 * width) for every batch-normed hidden layer. Batch norm is applied to
// encoder and decoder hidden layers but not to the embedding layer; running
// statistics are not trainable and are not counted.
std::uint64_t parameter_count(const AEConfig& config);

// Reference totals as published for the presets. kLarge disagrees with the
// counting rule above by exactly 20,480 (the rule reproduces kSmall and
// kMedium); both numbers are reported by the params command.
std::uint64_t published_parameter_count(AEPreset p);

std::vector<float> multi_hot(const LabelSet& labels, std::size_t dim);

struct TrainConfig {
  std::size_t batch_size = 256;
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  bool log_progress = false;  // per-epoch loss lines on stderr
};

// Feedforward autoencoder over multi-hot label vectors. Hidden layers run
// affine -> batch norm (optional) -> ReLU -> dropout (training only); the
// embedding layer runs affine -> ReLU with neither batch norm nor dropout;
// the output layer runs affine -> sigmoid. The scalar type is float for
// production models and double for the finite-difference gradient harness.
template <typename T>
class Network {
 public:
  Network(const AEConfig& config, std::uint64_t init_seed);

  struct ForwardResult {
    std::vector<T> latent;
    std::vector<T> reconstruction;
  };

  // Inference entry points; all use running batch-norm statistics and no
  // dropout, and are pure functions of the stored parameters.
  ForwardResult forward(std::span<const T> x) const;
  std::vector<T> encode(std::span<const T> x) const;
  std::vector<T> encode_labels(const LabelSet& labels) const;
  std::vector<T> decode(std::span<const T> z) const;

  // Adam on mean binary cross-entropy, shuffled mini-batches, deterministic
  // for a given seed. Returns the mean loss of each epoch. Throws when the
  // loss stops being finite or when fewer than batch_size examples exist.
  std::vector<double> train(const std::vector<LabelSet>& examples,
                            const TrainConfig& hyper);

  const AEConfig& config() const { return config_; }
  std::uint64_t parameter_count() const;
  std::uint32_t epochs_trained() const { return epochs_trained_; }
  std::uint64_t init_seed() const { return init_seed_; }

  // Training-mode loss and analytic gradients on one batch, using batch
  // statistics and leaving running statistics untouched. Gradients align
  // with flat_parameters(). Dropout must be disabled (rate 0) to make the
  // result deterministic; intended for the gradient check.
  double batch_loss(const std::vector<LabelSet>& batch) const;
  std::vector<T> batch_gradients(const std::vector<LabelSet>& batch) const;

  // Flattened trainable parameters, per layer: weights, bias, then gamma and
  // beta when the layer is batch-normed.
  std::vector<T> flat_parameters() const;
  void set_flat_parameters(const std::vector<T>& flat);

  // Versioned model file (magic LAE1): JSON header with config, epoch and
  // seed, then float32 little-endian tensor blobs in layer order (weights,
  // bias, and for batch-normed layers gamma, beta, running mean, running
  // variance). Round trips are bitwise exact. Float models only.
  void save(const std::string& path) const
    requires std::same_as<T, float>;
  static Network load(const std::string& path)
    requires std::same_as<T, float>;

 private:
  struct Layer {
    std::size_t in = 0;
    std::size_t out = 0;
    std::vector<T> w;  // in x out, row-major
    std::vector<T> b;
    bool has_bn = false;
    std::vector<T> gamma, beta;
    std::vector<T> run_mean, run_var;
    bool relu = false;     // otherwise sigmoid (output layer)
    bool dropout = false;  // training mode only
  };

  struct BatchCache;

  void eval_layer(const Layer& layer, std::span<const T> in,
                  std::vector<T>& out) const;
  double forward_batch(const std::vector<std::vector<T>>& inputs,
                       class Rng* dropout_rng, BatchCache& cache) const;
  void apply_batch_stats(const BatchCache& cache);
  void backward_batch(const std::vector<std::vector<T>>& inputs,
                      const BatchCache& cache, std::vector<T>& grads) const;

  AEConfig config_;
  std::vector<Layer> layers_;
  std::size_t embedding_index_ = 0;  // layer producing the latent vector
  std::uint32_t epochs_trained_ = 0;
  std::uint64_t init_seed_ = 0;
};

using AEModel = Network<float>;

// Convenience wrapper: build a fresh network from config and fit it.
AEModel train_label_ae(const std::vector<LabelSet>& examples,
                       const AEConfig& config, const TrainConfig& hyper);

}  // namespace semidx
