#pragma once

// Combining the left- and right-hemisphere classifiers.
//
// Posterior-level strategies (sum, product) work on two trained single-tower
// models. Feature-level strategies (early, tensor) train two towers and one
// dense head jointly.

#include <filesystem>
#include <string>
#include <string_view>

#include "scwt/neural.hpp"

namespace scwt {

enum class FusionStrategy { LeftOnly, RightOnly, SumProb, ProductProb, EarlyFusion, TensorFusion };

/// Accepts the CLI spellings left, right, sum, product, early, tfn.
FusionStrategy parse_fusion_strategy(std::string_view name);
std::string_view to_string(FusionStrategy strategy) noexcept;
bool is_feature_level(FusionStrategy strategy) noexcept;

struct FusedPrediction {
  int prediction = 0;
  Probs scores{};  // normalized to sum to one
  bool fallback = false;
};

/// score = (pL + pR) / 2; prediction is the argmax, lowest index on ties.
FusedPrediction fuse_sum(const Probs& left, const Probs& right);

/// Prediction is the argmax of pL * pR (lowest index on ties) and scores are
/// the product renormalized. If every product is zero the prediction falls
/// back to fuse_sum, the scores become uniform and `fallback` is set.
FusedPrediction fuse_product(const Probs& left, const Probs& right);

/// flatten([zL; 1] (x) [zR; 1]) in row-major order:
/// entry i * (dR + 1) + j is a_i * b_j with a = [zL; 1], b = [zR; 1].
Eigen::VectorXd tensor_fusion_vector(const Eigen::VectorXd& left, const Eigen::VectorXd& right);
Eigen::VectorXd early_fusion_vector(const Eigen::VectorXd& left, const Eigen::VectorXd& right);

/// Input width of the fusion head for a strategy and latent sizes.
int fusion_input_dim(FusionStrategy strategy, int left_dim, int right_dim);

/// Dense head + softmax on the concatenated latents. ShapeError when the
/// head width does not match.
Posterior early_fusion_predict(const Eigen::VectorXd& left, const Eigen::VectorXd& right, const DenseLayer& head);
Posterior tensor_fusion_predict(const Eigen::VectorXd& left, const Eigen::VectorXd& right, const DenseLayer& head);

/// Two towers and a joint head, trained end to end.
struct FusionModel {
  FusionStrategy strategy = FusionStrategy::EarlyFusion;
  TowerParams left;
  TowerParams right;
  DenseLayer head;
  std::uint64_t seed = 0;

  std::vector<std::span<double>> views();
  std::vector<std::span<const double>> views() const;
};

struct PairSample {
  const Image* left = nullptr;
  const Image* right = nullptr;
  int label = 0;
};

/// Both towers are freshly initialized from `seed` (left first, then right,
/// then the head).
FusionModel init_fusion_model(FusionStrategy strategy, const ConvNetSpec& spec, std::uint64_t seed);
FusionModel zeros_like(const FusionModel& model);

Posterior predict(const FusionModel& model, const PairSample& sample);
double accumulate_gradient(const FusionModel& model, const PairSample& sample, const ClassWeights& weights,
                           double scale, FusionModel& grads);

TrainResult<FusionModel> train_fusion(FusionStrategy strategy, const ConvNetSpec& spec,
                                      std::span<const PairSample> train, std::span<const PairSample> val,
                                      const TrainConfig& config);

void save_fusion_checkpoint(const std::filesystem::path& path, const FusionModel& model, int step,
                            double best_val_acc);
FusionModel load_fusion_checkpoint(const std::filesystem::path& path);

}  // namespace scwt
