#include "scwt/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "scwt/error.hpp"
#include "scwt/tensor_io.hpp"

namespace scwt {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMap = Eigen::Map<RowMat>;
using ConstRowMap = Eigen::Map<const RowMat>;

void im2col(const std::vector<double>& in, int channels, int height, int width, int k, std::vector<double>& cols) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(height) * width;
  cols.assign(static_cast<std::size_t>(channels) * k * k * hw, 0.0);
  std::size_t row = 0;
  for (int c = 0; c < channels; ++c) {
    const double* plane = in.data() + static_cast<std::size_t>(c) * hw;
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw, ++row) {
        double* dst = cols.data() + row * hw;
        for (int y = 0; y < height; ++y) {
          const int sy = y + kh - pad;
          if (sy < 0 || sy >= height) continue;
          const double* src_row = plane + static_cast<std::size_t>(sy) * width;
          double* dst_row = dst + static_cast<std::size_t>(y) * width;
          const int x_lo = std::max(0, pad - kw);
          const int x_hi = std::min(width, width + pad - kw);
          for (int x = x_lo; x < x_hi; ++x) dst_row[x] = src_row[x + kw - pad];
        }
      }
    }
  }
}

void col2im(const RowMat& dcols, int channels, int height, int width, int k, std::vector<double>& out) {
  const int pad = k / 2;
  const std::size_t hw = static_cast<std::size_t>(height) * width;
  out.assign(static_cast<std::size_t>(channels) * hw, 0.0);
  Eigen::Index row = 0;
  for (int c = 0; c < channels; ++c) {
    double* plane = out.data() + static_cast<std::size_t>(c) * hw;
    for (int kh = 0; kh < k; ++kh) {
      for (int kw = 0; kw < k; ++kw, ++row) {
        const double* src = dcols.data() + static_cast<std::size_t>(row) * hw;
        for (int y = 0; y < height; ++y) {
          const int sy = y + kh - pad;
          if (sy < 0 || sy >= height) continue;
          double* dst_row = plane + static_cast<std::size_t>(sy) * width;
          const double* src_row = src + static_cast<std::size_t>(y) * width;
          const int x_lo = std::max(0, pad - kw);
          const int x_hi = std::min(width, width + pad - kw);
          for (int x = x_lo; x < x_hi; ++x) dst_row[x + kw - pad] += src_row[x];
        }
      }
    }
  }
}

void fill_uniform(std::vector<double>& w, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : w) v = dist(rng);
}

void add_views(std::vector<std::span<double>>& out, TowerParams& t) {
  for (auto& c : t.convs) {
    out.emplace_back(c.weight);
    out.emplace_back(c.bias);
  }
  out.emplace_back(t.latent.weight);
  out.emplace_back(t.latent.bias);
}

void add_views(std::vector<std::span<const double>>& out, const TowerParams& t) {
  for (const auto& c : t.convs) {
    out.emplace_back(c.weight);
    out.emplace_back(c.bias);
  }
  out.emplace_back(t.latent.weight);
  out.emplace_back(t.latent.bias);
}

}  // namespace

// --- spec ------------------------------------------------------------------

void ConvNetSpec::validate() const {
  if (input_height <= 0 || input_width <= 0 || input_channels <= 0) {
    throw ValidationError("network input shape must be positive");
  }
  if (blocks.empty()) throw ValidationError("network needs at least one conv block");
  if (latent_dim < 2) throw ValidationError("latent_dim must be >= 2");
  if (output_dim != kNumClasses) throw ValidationError("output_dim must be 3");
  int h = input_height;
  int w = input_width;
  for (const auto& b : blocks) {
    if (b.filters <= 0) throw ValidationError("conv block filters must be positive");
    if (b.kernel <= 0 || b.kernel % 2 == 0) throw ValidationError("conv kernel size must be odd and positive");
    if (h % 2 != 0 || w % 2 != 0) throw ValidationError("feature map must stay even for 2x2 pooling");
    h /= 2;
    w /= 2;
  }
}

int ConvNetSpec::flattened_size() const {
  int h = input_height;
  int w = input_width;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    h /= 2;
    w /= 2;
  }
  return h * w * blocks.back().filters;
}

nlohmann::json ConvNetSpec::to_json() const {
  auto jb = nlohmann::json::array();
  for (const auto& b : blocks) jb.push_back({{"filters", b.filters}, {"kernel", b.kernel}});
  return {{"input_height", input_height}, {"input_width", input_width}, {"input_channels", input_channels},
          {"blocks", jb},        {"latent_dim", latent_dim},   {"output_dim", output_dim}};
}

ConvNetSpec ConvNetSpec::from_json(const nlohmann::json& j) {
  ConvNetSpec s;
  s.input_height = j.at("input_height").get<int>();
  s.input_width = j.at("input_width").get<int>();
  s.input_channels = j.at("input_channels").get<int>();
  s.blocks.clear();
  for (const auto& b : j.at("blocks")) s.blocks.push_back({b.at("filters").get<int>(), b.at("kernel").get<int>()});
  s.latent_dim = j.at("latent_dim").get<int>();
  s.output_dim = j.at("output_dim").get<int>();
  s.validate();
  return s;
}

// --- parameters ------------------------------------------------------------

std::vector<std::span<double>> TowerParams::views() {
  std::vector<std::span<double>> out;
  add_views(out, *this);
  return out;
}

std::vector<std::span<const double>> TowerParams::views() const {
  std::vector<std::span<const double>> out;
  add_views(out, *this);
  return out;
}

std::vector<std::span<double>> ModelParams::views() {
  std::vector<std::span<double>> out;
  add_views(out, tower);
  out.emplace_back(output.weight);
  out.emplace_back(output.bias);
  return out;
}

std::vector<std::span<const double>> ModelParams::views() const {
  std::vector<std::span<const double>> out;
  add_views(out, tower);
  out.emplace_back(output.weight);
  out.emplace_back(output.bias);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& v : views()) n += v.size();
  return n;
}

DenseLayer init_dense(int in_features, int out_features, std::mt19937_64& rng) {
  DenseLayer d;
  d.in_features = in_features;
  d.out_features = out_features;
  d.weight.resize(static_cast<std::size_t>(in_features) * out_features);
  d.bias.assign(static_cast<std::size_t>(out_features), 0.0);
  fill_uniform(d.weight, std::sqrt(6.0 / in_features), rng);
  return d;
}

TowerParams init_tower(const ConvNetSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  TowerParams t;
  t.spec = spec;
  int in_ch = spec.input_channels;
  for (const auto& b : spec.blocks) {
    ConvLayer c;
    c.in_channels = in_ch;
    c.out_channels = b.filters;
    c.kernel = b.kernel;
    const int fan_in = in_ch * b.kernel * b.kernel;
    c.weight.resize(static_cast<std::size_t>(fan_in) * b.filters);
    c.bias.assign(static_cast<std::size_t>(b.filters), 0.0);
    fill_uniform(c.weight, std::sqrt(6.0 / fan_in), rng);
    t.convs.push_back(std::move(c));
    in_ch = b.filters;
  }
  t.latent = init_dense(spec.flattened_size(), spec.latent_dim, rng);
  return t;
}

ModelParams init_model(const ConvNetSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.tower = init_tower(spec, rng);
  p.output = init_dense(spec.latent_dim, spec.output_dim, rng);
  p.seed = seed;
  return p;
}

DenseLayer zeros_like(const DenseLayer& layer) {
  DenseLayer d = layer;
  std::fill(d.weight.begin(), d.weight.end(), 0.0);
  std::fill(d.bias.begin(), d.bias.end(), 0.0);
  return d;
}

TowerParams zeros_like(const TowerParams& params) {
  TowerParams t = params;
  for (auto v : t.views()) std::fill(v.begin(), v.end(), 0.0);
  return t;
}

ModelParams zeros_like(const ModelParams& params) {
  ModelParams p = params;
  for (auto v : p.views()) std::fill(v.begin(), v.end(), 0.0);
  return p;
}

// --- layers ----------------------------------------------------------------

Probs softmax(const Probs& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  Probs p{};
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

Eigen::VectorXd tower_forward(const TowerParams& tower, const Image& image, TowerCache* cache) {
  const auto& spec = tower.spec;
  if (image.height != spec.input_height || image.width != spec.input_width || image.channels != spec.input_channels) {
    throw ShapeError("image shape " + std::to_string(image.height) + "x" + std::to_string(image.width) + "x" +
                     std::to_string(image.channels) + " does not match the network input");
  }
  for (double v : image.data) {
    if (!std::isfinite(v)) throw ValidationError("input image has non-finite values");
  }

  TowerCache local;
  TowerCache& c = cache != nullptr ? *cache : local;
  c.blocks.resize(tower.convs.size());

  std::vector<double> x = image.data;
  int h = image.height;
  int w = image.width;
  for (std::size_t b = 0; b < tower.convs.size(); ++b) {
    const auto& layer = tower.convs[b];
    auto& blk = c.blocks[b];
    blk.height = h;
    blk.width = w;
    const int hw = h * w;
    const int kk = layer.in_channels * layer.kernel * layer.kernel;
    im2col(x, layer.in_channels, h, w, layer.kernel, blk.cols);

    blk.pre.resize(static_cast<std::size_t>(layer.out_channels) * hw);
    RowMap pre(blk.pre.data(), layer.out_channels, hw);
    pre.noalias() = ConstRowMap(layer.weight.data(), layer.out_channels, kk) * ConstRowMap(blk.cols.data(), kk, hw);
    for (int f = 0; f < layer.out_channels; ++f) pre.row(f).array() += layer.bias[static_cast<std::size_t>(f)];

    const int ph = h / 2;
    const int pw = w / 2;
    x.assign(static_cast<std::size_t>(layer.out_channels) * ph * pw, 0.0);
    blk.pool_argmax.resize(x.size());
    std::size_t o = 0;
    for (int f = 0; f < layer.out_channels; ++f) {
      const int base = f * hw;
      for (int y = 0; y < ph; ++y) {
        for (int xx = 0; xx < pw; ++xx, ++o) {
          const int i00 = base + (2 * y) * w + 2 * xx;
          const int cand[4] = {i00, i00 + 1, i00 + w, i00 + w + 1};
          int best = cand[0];
          double best_v = std::max(blk.pre[static_cast<std::size_t>(cand[0])], 0.0);
          for (int q = 1; q < 4; ++q) {
            const double v = std::max(blk.pre[static_cast<std::size_t>(cand[q])], 0.0);
            if (v > best_v) {
              best_v = v;
              best = cand[q];
            }
          }
          x[o] = best_v;
          blk.pool_argmax[o] = best;
        }
      }
    }
    for (double v : x) {
      if (!std::isfinite(v)) throw NumericError("non-finite activation in conv block " + std::to_string(b), static_cast<int>(b));
    }
    h = ph;
    w = pw;
  }

  c.flat = std::move(x);
  const Eigen::Map<const Eigen::VectorXd> flat(c.flat.data(), static_cast<Eigen::Index>(c.flat.size()));
  c.latent_pre = dense_forward(tower.latent, flat);
  const int latent_layer = static_cast<int>(tower.convs.size());
  if (!c.latent_pre.allFinite()) {
    throw NumericError("non-finite activation in latent layer " + std::to_string(latent_layer), latent_layer);
  }
  return c.latent_pre.cwiseMax(0.0);
}

void tower_backward(const TowerParams& tower, const TowerCache& cache, const Eigen::VectorXd& dz,
                    TowerParams& grads) {
  // Latent ReLU + dense.
  Eigen::VectorXd dpre = dz;
  for (Eigen::Index i = 0; i < dpre.size(); ++i) {
    if (!(cache.latent_pre(i) > 0.0)) dpre(i) = 0.0;
  }
  const Eigen::Map<const Eigen::VectorXd> flat(cache.flat.data(), static_cast<Eigen::Index>(cache.flat.size()));
  Eigen::VectorXd dflat = dense_backward(tower.latent, flat, dpre, grads.latent);

  std::vector<double> dout(dflat.data(), dflat.data() + dflat.size());
  for (std::size_t bi = tower.convs.size(); bi-- > 0;) {
    const auto& layer = tower.convs[bi];
    auto& g = grads.convs[bi];
    const auto& blk = cache.blocks[bi];
    const int hw = blk.height * blk.width;
    const int kk = layer.in_channels * layer.kernel * layer.kernel;

    // Max-pool and ReLU: route each pooled gradient to its argmax when active.
    RowMat dconv = RowMat::Zero(layer.out_channels, hw);
    for (std::size_t o = 0; o < dout.size(); ++o) {
      const int idx = blk.pool_argmax[o];
      if (blk.pre[static_cast<std::size_t>(idx)] > 0.0) dconv.data()[idx] += dout[o];
    }

    RowMap(g.weight.data(), layer.out_channels, kk).noalias() +=
        dconv * ConstRowMap(blk.cols.data(), kk, hw).transpose();
    Eigen::Map<Eigen::VectorXd>(g.bias.data(), layer.out_channels) += dconv.rowwise().sum();

    if (bi > 0) {
      const RowMat dcols = ConstRowMap(layer.weight.data(), layer.out_channels, kk).transpose() * dconv;
      col2im(dcols, layer.in_channels, blk.height, blk.width, layer.kernel, dout);
    }
  }
}

Eigen::VectorXd dense_forward(const DenseLayer& layer, const Eigen::VectorXd& x) {
  if (x.size() != layer.in_features) {
    throw ShapeError("dense layer expects " + std::to_string(layer.in_features) + " inputs, got " +
                     std::to_string(x.size()));
  }
  return ConstRowMap(layer.weight.data(), layer.out_features, layer.in_features) * x +
         Eigen::Map<const Eigen::VectorXd>(layer.bias.data(), layer.out_features);
}

Eigen::VectorXd dense_backward(const DenseLayer& layer, const Eigen::VectorXd& x, const Eigen::VectorXd& dy,
                               DenseLayer& grads) {
  RowMap(grads.weight.data(), layer.out_features, layer.in_features).noalias() += dy * x.transpose();
  Eigen::Map<Eigen::VectorXd>(grads.bias.data(), layer.out_features) += dy;
  return ConstRowMap(layer.weight.data(), layer.out_features, layer.in_features).transpose() * dy;
}

Posterior head_posterior(const DenseLayer& head, const Eigen::VectorXd& features, int layer_index) {
  if (head.out_features != kNumClasses) throw ShapeError("output head must have 3 outputs");
  const Eigen::VectorXd logits = dense_forward(head, features);
  if (!logits.allFinite()) {
    throw NumericError("non-finite logits in layer " + std::to_string(layer_index), layer_index);
  }
  Posterior post;
  for (int i = 0; i < kNumClasses; ++i) post.logits[static_cast<std::size_t>(i)] = logits(i);
  post.probs = softmax(post.logits);
  post.latent = features;
  return post;
}

// --- classifier ------------------------------------------------------------

ClassWeights compute_class_weights(const std::array<long long, kNumClasses>& counts) {
  long long most = 0;
  for (auto c : counts) {
    if (c <= 0) throw ValidationError("class counts must be positive");
    most = std::max(most, c);
  }
  ClassWeights w{};
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<double>(most) / static_cast<double>(counts[i]);
  return w;
}

Posterior forward_pass(const ModelParams& params, const Image& image) {
  const Eigen::VectorXd z = tower_forward(params.tower, image, nullptr);
  return head_posterior(params.output, z, static_cast<int>(params.tower.convs.size()) + 1);
}

Posterior predict(const ModelParams& params, const Sample& sample) { return forward_pass(params, *sample.image); }

double weighted_cross_entropy(const Posterior& posterior, int label, const ClassWeights& weights) {
  if (label < 0 || label >= kNumClasses) throw ValidationError("label out of range");
  const auto l = static_cast<std::size_t>(label);
  return -weights[l] * std::log(std::max(posterior.probs[l], 1e-12));
}

Probs cross_entropy_logit_gradient(const Posterior& posterior, int label, const ClassWeights& weights) {
  const auto l = static_cast<std::size_t>(label);
  Probs g{};
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = weights[l] * (posterior.probs[i] - (i == l ? 1.0 : 0.0));
  return g;
}

double accumulate_gradient(const ModelParams& params, const Sample& sample, const ClassWeights& weights,
                           double scale, ModelParams& grads) {
  TowerCache cache;
  const Eigen::VectorXd z = tower_forward(params.tower, *sample.image, &cache);
  const Posterior post = head_posterior(params.output, z, static_cast<int>(params.tower.convs.size()) + 1);
  const double loss = weighted_cross_entropy(post, sample.label, weights);
  const Probs g = cross_entropy_logit_gradient(post, sample.label, weights);
  Eigen::VectorXd dlogits(kNumClasses);
  for (int i = 0; i < kNumClasses; ++i) dlogits(i) = scale * g[static_cast<std::size_t>(i)];
  const Eigen::VectorXd dz = dense_backward(params.output, z, dlogits, grads.output);
  tower_backward(params.tower, cache, dz, grads.tower);
  return loss;
}

GradientResult backward_gradients(const ModelParams& params, std::span<const Sample> batch,
                                  const ClassWeights& weights) {
  if (batch.empty()) throw ValidationError("gradient batch is empty");
  GradientResult r{zeros_like(params), 0.0};
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) r.loss += accumulate_gradient(params, s, weights, scale, r.grads);
  r.loss *= scale;
  return r;
}

// --- optimizer -------------------------------------------------------------

AdamState AdamState::zeros_for(const std::vector<std::span<const double>>& tensors) {
  AdamState s;
  for (const auto& t : tensors) {
    s.m.emplace_back(t.size(), 0.0);
    s.v.emplace_back(t.size(), 0.0);
  }
  return s;
}

void adam_step(const std::vector<std::span<double>>& params, const std::vector<std::span<const double>>& grads,
               AdamState& state, const AdamConfig& config) {
  if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size()) {
    throw ShapeError("Adam state, parameters and gradients disagree in tensor count");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size() != grads[t].size() || params[t].size() != state.m[t].size()) {
      throw ShapeError("Adam tensor " + std::to_string(t) + " has mismatched sizes");
    }
    for (double g : grads[t]) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in tensor " + std::to_string(t));
    }
  }
  ++state.step;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& m = state.m[t];
    auto& v = state.v[t];
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double g = grads[t][i];
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      params[t][i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  }
}

// --- training --------------------------------------------------------------

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (batch_size < 1) throw ValidationError("batch size must be positive");
  if (patience < 1) throw ValidationError("patience must be >= 1");
  if (max_steps < 1) throw ValidationError("max_steps must be positive");
  for (double w : class_weights) {
    if (!(w > 0.0)) throw ValidationError("class weights must be positive");
  }
}

EarlyStopping::EarlyStopping(int patience) : patience_(patience) {
  if (patience < 1) throw ValidationError("patience must be >= 1");
}

bool EarlyStopping::update(int step, double accuracy) {
  if (accuracy > best_) {
    best_ = accuracy;
    best_step_ = step;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

int argmax(const Probs& p) noexcept {
  int best = 0;
  for (int i = 1; i < kNumClasses; ++i) {
    if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

TrainResult<ModelParams> train_classifier(const ConvNetSpec& spec, std::span<const Sample> train,
                                          std::span<const Sample> val, const TrainConfig& config) {
  return train_loop<ModelParams, Sample>(init_model(spec, config.seed), train, val, config);
}

TrainResult<ModelParams> train_with_early_stopping(const ConvNetSpec& spec, std::span<const Sample> data,
                                                   const TrainConfig& config) {
  if (data.size() < 2) throw ValidationError("need at least two samples to hold out validation data");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed + 1);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(data.size()))));
  std::vector<Sample> val;
  std::vector<Sample> train;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_val ? val : train).push_back(data[order[i]]);
  return train_classifier(spec, train, val, config);
}

// --- checkpoints -----------------------------------------------------------

std::vector<double> flatten_views(const std::vector<std::span<const double>>& views) {
  std::vector<double> flat;
  for (const auto& v : views) flat.insert(flat.end(), v.begin(), v.end());
  return flat;
}

void scatter_views(const std::vector<double>& flat, const std::vector<std::span<double>>& views) {
  std::size_t total = 0;
  for (const auto& v : views) total += v.size();
  if (total != flat.size()) {
    throw FormatError("checkpoint holds " + std::to_string(flat.size()) + " values, model needs " +
                      std::to_string(total));
  }
  std::size_t k = 0;
  for (const auto& v : views) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(k), flat.begin() + static_cast<std::ptrdiff_t>(k + v.size()),
              v.begin());
    k += v.size();
  }
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params, int step, double best_val_acc) {
  auto flat = flatten_views(params.views());
  const auto n = static_cast<std::uint32_t>(flat.size());
  write_tensor(path, Tensor::make_f64({n}, std::move(flat)));
  const nlohmann::json meta{{"spec", params.tower.spec.to_json()},
                            {"seed", params.seed},
                            {"step", step},
                            {"best_val_acc", best_val_acc},
                            {"parameter_count", n}};
  auto sidecar = path;
  sidecar += ".json";
  write_text_file(sidecar, meta.dump(2) + "\n");
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  auto sidecar = path;
  sidecar += ".json";
  const auto bytes = read_file_bytes(sidecar);
  const auto meta = nlohmann::json::parse(bytes.begin(), bytes.end());
  const auto spec = ConvNetSpec::from_json(meta.at("spec"));
  ModelParams p = init_model(spec, meta.at("seed").get<std::uint64_t>());
  const Tensor t = read_tensor(path);
  if (t.rank() != 1 || t.dtype != DType::F64) throw FormatError("checkpoint must be a rank-1 f64 tensor");
  scatter_views(t.f64, p.views());
  return p;
}

}  // namespace scwt
