#include "scwt/fusion.hpp"

#include <random>

#include "scwt/error.hpp"
#include "scwt/tensor_io.hpp"

namespace scwt {

FusionStrategy parse_fusion_strategy(std::string_view name) {
  if (name == "left") return FusionStrategy::LeftOnly;
  if (name == "right") return FusionStrategy::RightOnly;
  if (name == "sum") return FusionStrategy::SumProb;
  if (name == "product") return FusionStrategy::ProductProb;
  if (name == "early") return FusionStrategy::EarlyFusion;
  if (name == "tfn") return FusionStrategy::TensorFusion;
  throw ValidationError("unknown fusion strategy '" + std::string(name) + "'");
}

std::string_view to_string(FusionStrategy strategy) noexcept {
  switch (strategy) {
    case FusionStrategy::LeftOnly: return "left";
    case FusionStrategy::RightOnly: return "right";
    case FusionStrategy::SumProb: return "sum";
    case FusionStrategy::ProductProb: return "product";
    case FusionStrategy::EarlyFusion: return "early";
    case FusionStrategy::TensorFusion: return "tfn";
  }
  return "?";
}

bool is_feature_level(FusionStrategy strategy) noexcept {
  return strategy == FusionStrategy::EarlyFusion || strategy == FusionStrategy::TensorFusion;
}

FusedPrediction fuse_sum(const Probs& left, const Probs& right) {
  FusedPrediction out;
  Probs raw{};
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = left[i] + right[i];
  out.prediction = argmax(raw);
  for (std::size_t i = 0; i < raw.size(); ++i) out.scores[i] = raw[i] / 2.0;
  return out;
}

FusedPrediction fuse_product(const Probs& left, const Probs& right) {
  Probs raw{};
  double total = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = left[i] * right[i];
    total += raw[i];
  }
  if (!(total > 0.0)) {
    FusedPrediction out = fuse_sum(left, right);
    out.scores.fill(1.0 / kNumClasses);
    out.fallback = true;
    return out;
  }
  FusedPrediction out;
  out.prediction = argmax(raw);
  for (std::size_t i = 0; i < raw.size(); ++i) out.scores[i] = raw[i] / total;
  return out;
}

Eigen::VectorXd tensor_fusion_vector(const Eigen::VectorXd& left, const Eigen::VectorXd& right) {
  const Eigen::Index dl = left.size() + 1;
  const Eigen::Index dr = right.size() + 1;
  Eigen::VectorXd a(dl);
  Eigen::VectorXd b(dr);
  a << left, 1.0;
  b << right, 1.0;
  Eigen::VectorXd fused(dl * dr);
  for (Eigen::Index i = 0; i < dl; ++i) fused.segment(i * dr, dr) = a(i) * b;
  return fused;
}

Eigen::VectorXd early_fusion_vector(const Eigen::VectorXd& left, const Eigen::VectorXd& right) {
  Eigen::VectorXd fused(left.size() + right.size());
  fused << left, right;
  return fused;
}

int fusion_input_dim(FusionStrategy strategy, int left_dim, int right_dim) {
  switch (strategy) {
    case FusionStrategy::EarlyFusion: return left_dim + right_dim;
    case FusionStrategy::TensorFusion: return (left_dim + 1) * (right_dim + 1);
    default: throw ValidationError("strategy " + std::string(to_string(strategy)) + " has no fusion head");
  }
}

namespace {

void check_head(const DenseLayer& head, Eigen::Index expected) {
  if (head.in_features != expected) {
    throw ShapeError("fusion head expects " + std::to_string(head.in_features) + " inputs, fused vector has " +
                     std::to_string(expected));
  }
}

Eigen::VectorXd fuse(FusionStrategy strategy, const Eigen::VectorXd& zl, const Eigen::VectorXd& zr) {
  return strategy == FusionStrategy::TensorFusion ? tensor_fusion_vector(zl, zr) : early_fusion_vector(zl, zr);
}

int head_layer_index(const FusionModel& model) { return static_cast<int>(model.left.convs.size()) + 1; }

void append(std::vector<std::span<double>>& out, std::vector<std::span<double>> more) {
  out.insert(out.end(), more.begin(), more.end());
}

void append(std::vector<std::span<const double>>& out, std::vector<std::span<const double>> more) {
  out.insert(out.end(), more.begin(), more.end());
}

}  // namespace

Posterior early_fusion_predict(const Eigen::VectorXd& left, const Eigen::VectorXd& right, const DenseLayer& head) {
  check_head(head, left.size() + right.size());
  return head_posterior(head, early_fusion_vector(left, right), 0);
}

Posterior tensor_fusion_predict(const Eigen::VectorXd& left, const Eigen::VectorXd& right, const DenseLayer& head) {
  check_head(head, (left.size() + 1) * (right.size() + 1));
  return head_posterior(head, tensor_fusion_vector(left, right), 0);
}

std::vector<std::span<double>> FusionModel::views() {
  std::vector<std::span<double>> out = left.views();
  append(out, right.views());
  out.emplace_back(head.weight);
  out.emplace_back(head.bias);
  return out;
}

std::vector<std::span<const double>> FusionModel::views() const {
  std::vector<std::span<const double>> out = left.views();
  append(out, right.views());
  out.emplace_back(head.weight);
  out.emplace_back(head.bias);
  return out;
}

FusionModel init_fusion_model(FusionStrategy strategy, const ConvNetSpec& spec, std::uint64_t seed) {
  if (!is_feature_level(strategy)) {
    throw ValidationError("end-to-end training needs the early or tfn strategy");
  }
  std::mt19937_64 rng(seed);
  FusionModel m;
  m.strategy = strategy;
  m.seed = seed;
  m.left = init_tower(spec, rng);
  m.right = init_tower(spec, rng);
  m.head = init_dense(fusion_input_dim(strategy, spec.latent_dim, spec.latent_dim), spec.output_dim, rng);
  return m;
}

FusionModel zeros_like(const FusionModel& model) {
  FusionModel z = model;
  for (auto v : z.views()) std::fill(v.begin(), v.end(), 0.0);
  return z;
}

Posterior predict(const FusionModel& model, const PairSample& sample) {
  const Eigen::VectorXd zl = tower_forward(model.left, *sample.left, nullptr);
  const Eigen::VectorXd zr = tower_forward(model.right, *sample.right, nullptr);
  const Eigen::VectorXd fused = fuse(model.strategy, zl, zr);
  check_head(model.head, fused.size());
  return head_posterior(model.head, fused, head_layer_index(model));
}

double accumulate_gradient(const FusionModel& model, const PairSample& sample, const ClassWeights& weights,
                           double scale, FusionModel& grads) {
  TowerCache cache_l;
  TowerCache cache_r;
  const Eigen::VectorXd zl = tower_forward(model.left, *sample.left, &cache_l);
  const Eigen::VectorXd zr = tower_forward(model.right, *sample.right, &cache_r);
  const Eigen::VectorXd fused = fuse(model.strategy, zl, zr);
  check_head(model.head, fused.size());
  const Posterior post = head_posterior(model.head, fused, head_layer_index(model));
  const double loss = weighted_cross_entropy(post, sample.label, weights);

  const Probs g = cross_entropy_logit_gradient(post, sample.label, weights);
  Eigen::VectorXd dlogits(kNumClasses);
  for (int i = 0; i < kNumClasses; ++i) dlogits(i) = scale * g[static_cast<std::size_t>(i)];
  const Eigen::VectorXd dfused = dense_backward(model.head, fused, dlogits, grads.head);

  Eigen::VectorXd dzl;
  Eigen::VectorXd dzr;
  if (model.strategy == FusionStrategy::TensorFusion) {
    const Eigen::Index dl = zl.size() + 1;
    const Eigen::Index dr = zr.size() + 1;
    Eigen::VectorXd a(dl);
    Eigen::VectorXd b(dr);
    a << zl, 1.0;
    b << zr, 1.0;
    // dF is dl x dr row-major; dA = dF b, dB = dF^T a.
    const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> df(
        dfused.data(), dl, dr);
    dzl = (df * b).head(zl.size());
    dzr = (df.transpose() * a).head(zr.size());
  } else {
    dzl = dfused.head(zl.size());
    dzr = dfused.tail(zr.size());
  }
  tower_backward(model.left, cache_l, dzl, grads.left);
  tower_backward(model.right, cache_r, dzr, grads.right);
  return loss;
}

TrainResult<FusionModel> train_fusion(FusionStrategy strategy, const ConvNetSpec& spec,
                                      std::span<const PairSample> train, std::span<const PairSample> val,
                                      const TrainConfig& config) {
  return train_loop<FusionModel, PairSample>(init_fusion_model(strategy, spec, config.seed), train, val, config);
}

void save_fusion_checkpoint(const std::filesystem::path& path, const FusionModel& model, int step,
                            double best_val_acc) {
  auto flat = flatten_views(model.views());
  const auto n = static_cast<std::uint32_t>(flat.size());
  write_tensor(path, Tensor::make_f64({n}, std::move(flat)));
  const nlohmann::json meta{{"spec", model.left.spec.to_json()},
                            {"strategy", std::string(to_string(model.strategy))},
                            {"seed", model.seed},
                            {"step", step},
                            {"best_val_acc", best_val_acc},
                            {"parameter_count", n}};
  auto sidecar = path;
  sidecar += ".json";
  write_text_file(sidecar, meta.dump(2) + "\n");
}

FusionModel load_fusion_checkpoint(const std::filesystem::path& path) {
  auto sidecar = path;
  sidecar += ".json";
  const auto bytes = read_file_bytes(sidecar);
  const auto meta = nlohmann::json::parse(bytes.begin(), bytes.end());
  const auto spec = ConvNetSpec::from_json(meta.at("spec"));
  const auto strategy = parse_fusion_strategy(meta.at("strategy").get<std::string>());
  FusionModel m = init_fusion_model(strategy, spec, meta.at("seed").get<std::uint64_t>());
  const Tensor t = read_tensor(path);
  if (t.rank() != 1 || t.dtype != DType::F64) throw FormatError("checkpoint must be a rank-1 f64 tensor");
  scatter_views(t.f64, m.views());
  return m;
}

}  // namespace scwt
