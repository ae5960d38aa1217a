#pragma once

// Compact convolutional classifier with hand-written reverse-mode gradients.
//
// A network is a tower (conv blocks -> flatten -> dense latent layer + ReLU)
// followed by a dense output head and softmax. Each conv block is a k x k
// convolution (stride 1, zero "same" padding), ReLU and 2 x 2 max-pooling.
// Everything runs in double precision.

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "scwt/image.hpp"
#include "scwt/types.hpp"

namespace scwt {

struct ConvBlockSpec {
  int filters = 16;
  int kernel = 3;
};

struct ConvNetSpec {
  int input_height = 128;
  int input_width = 128;
  int input_channels = 3;
  std::vector<ConvBlockSpec> blocks{{16, 3}, {32, 3}, {64, 3}};
  int latent_dim = 64;
  int output_dim = 3;

  void validate() const;
  int flattened_size() const;

  nlohmann::json to_json() const;
  static ConvNetSpec from_json(const nlohmann::json& j);
};

struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  std::vector<double> weight;  // out x (in * k * k), inner order (in, kh, kw)
  std::vector<double> bias;    // out
};

struct DenseLayer {
  int in_features = 0;
  int out_features = 0;
  std::vector<double> weight;  // out x in, row-major
  std::vector<double> bias;    // out
};

/// Convolutional feature extractor ending in the latent vector z.
struct TowerParams {
  ConvNetSpec spec;
  std::vector<ConvLayer> convs;
  DenseLayer latent;

  std::vector<std::span<double>> views();
  std::vector<std::span<const double>> views() const;
};

struct ModelParams {
  TowerParams tower;
  DenseLayer output;
  std::uint64_t seed = 0;

  std::vector<std::span<double>> views();
  std::vector<std::span<const double>> views() const;
  std::size_t parameter_count() const;
};

using Probs = std::array<double, kNumClasses>;

struct Posterior {
  Probs probs{};
  Probs logits{};
  Eigen::VectorXd latent;
};

/// Class weights w_c scaling each sample's loss.
using ClassWeights = std::array<double, kNumClasses>;

struct Sample {
  const Image* image = nullptr;
  int label = 0;
};

// --- initialization and layers -------------------------------------------

/// He-uniform weights (limit sqrt(6 / fan_in)) and zero biases.
ModelParams init_model(const ConvNetSpec& spec, std::uint64_t seed);
TowerParams init_tower(const ConvNetSpec& spec, std::mt19937_64& rng);
DenseLayer init_dense(int in_features, int out_features, std::mt19937_64& rng);

ModelParams zeros_like(const ModelParams& params);
TowerParams zeros_like(const TowerParams& params);
DenseLayer zeros_like(const DenseLayer& layer);

/// Numerically stable softmax.
Probs softmax(const Probs& logits);

/// Intermediate activations kept for the backward pass.
struct TowerCache {
  struct Block {
    int height = 0;
    int width = 0;
    std::vector<double> cols;      // im2col of the block input
    std::vector<double> pre;       // conv output before ReLU, out x H x W
    std::vector<int> pool_argmax;  // flat index into pre for each pooled cell
  };
  std::vector<Block> blocks;
  std::vector<double> flat;
  Eigen::VectorXd latent_pre;
};

/// Throws NumericError carrying the layer index when an activation is not
/// finite. Conv blocks are layers 0..B-1, the latent layer is B.
Eigen::VectorXd tower_forward(const TowerParams& tower, const Image& image, TowerCache* cache);

/// Accumulates d(loss)/d(params) into `grads` given d(loss)/dz.
void tower_backward(const TowerParams& tower, const TowerCache& cache, const Eigen::VectorXd& dz,
                    TowerParams& grads);

Eigen::VectorXd dense_forward(const DenseLayer& layer, const Eigen::VectorXd& x);

/// Accumulates weight/bias gradients; returns d(loss)/dx.
Eigen::VectorXd dense_backward(const DenseLayer& layer, const Eigen::VectorXd& x, const Eigen::VectorXd& dy,
                               DenseLayer& grads);

/// Output layer + softmax applied to a feature vector.
Posterior head_posterior(const DenseLayer& head, const Eigen::VectorXd& features, int layer_index);

// --- classifier operations ------------------------------------------------

/// Counts must be positive; w_c = max_count / count_c.
ClassWeights compute_class_weights(const std::array<long long, kNumClasses>& counts);

Posterior forward_pass(const ModelParams& params, const Image& image);

/// -w_label * log(max(p_label, 1e-12)).
double weighted_cross_entropy(const Posterior& posterior, int label, const ClassWeights& weights);

/// Gradient of d(w_label * CE)/d(logits) = w_label * (p - onehot).
Probs cross_entropy_logit_gradient(const Posterior& posterior, int label, const ClassWeights& weights);

struct GradientResult {
  ModelParams grads;
  double loss = 0.0;  // mean weighted loss over the batch
};

/// Gradients of the mean weighted loss over `batch` for every parameter.
GradientResult backward_gradients(const ModelParams& params, std::span<const Sample> batch,
                                  const ClassWeights& weights);

/// Adds `scale` times the gradient of one sample's weighted loss to `grads`;
/// returns the (unscaled) weighted loss.
double accumulate_gradient(const ModelParams& params, const Sample& sample, const ClassWeights& weights,
                           double scale, ModelParams& grads);

Posterior predict(const ModelParams& params, const Sample& sample);

// --- optimizer ------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long long step = 0;

  static AdamState zeros_for(const std::vector<std::span<const double>>& tensors);
};

/// Bias-corrected Adam update of every tensor in place. Throws NumericError
/// before touching anything if a gradient is not finite.
void adam_step(const std::vector<std::span<double>>& params, const std::vector<std::span<const double>>& grads,
               AdamState& state, const AdamConfig& config);

template <class Params>
void adam_step(Params& params, const Params& grads, AdamState& state, const AdamConfig& config) {
  adam_step(params.views(), grads.views(), state, config);
}

// --- training -------------------------------------------------------------

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 32;
  ClassWeights class_weights{1.0, 1.0, 1.0};
  int patience = 20;
  int max_steps = 2000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_accuracy;
  int best_step = 0;  // 1-based; 0 when no step ran
  double best_val_accuracy = 0.0;
  int steps_run = 0;
  bool stopped_early = false;
};

/// Patience rule on validation accuracy: stops after `patience` consecutive
/// steps without a strict improvement over the best seen.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience);

  /// Records the accuracy of `step`; returns true when it is a new best.
  bool update(int step, double accuracy);
  bool should_stop() const noexcept { return since_best_ >= patience_; }
  int best_step() const noexcept { return best_step_; }
  double best_accuracy() const noexcept { return best_; }

 private:
  int patience_;
  double best_ = -1.0;
  int best_step_ = 0;
  int since_best_ = 0;
};

template <class Params>
struct TrainResult {
  Params params;
  TrainHistory history;
};

/// Trains a classifier with Adam on `train`, monitoring accuracy on `val`
/// after each pass; returns the best-validation parameters.
TrainResult<ModelParams> train_classifier(const ConvNetSpec& spec, std::span<const Sample> train,
                                          std::span<const Sample> val, const TrainConfig& config);

/// Holds out a seeded random 20% of `data` for validation, then trains.
TrainResult<ModelParams> train_with_early_stopping(const ConvNetSpec& spec, std::span<const Sample> data,
                                                   const TrainConfig& config);

/// Fraction of samples whose argmax posterior (lowest index on ties) matches.
template <class Params, class SampleT>
double accuracy(const Params& params, std::span<const SampleT> samples);

int argmax(const Probs& p) noexcept;

/// Checkpoint: all parameter tensors concatenated in a rank-1 f64 container
/// at `path`, with a JSON sidecar at `path` + ".json".
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, int step, double best_val_acc);
ModelParams load_checkpoint(const std::filesystem::path& path);

/// Concatenation / scatter helpers shared by checkpoint writers.
std::vector<double> flatten_views(const std::vector<std::span<const double>>& views);
void scatter_views(const std::vector<double>& flat, const std::vector<std::span<double>>& views);

}  // namespace scwt

#include "scwt/trainer.hpp"
