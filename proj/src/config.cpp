#include "scwt/config.hpp"

#include <cstdio>
#include <fstream>

#include "scwt/error.hpp"
#include "scwt/json_keys.hpp"
#include "scwt/tensor_io.hpp"

namespace scwt {
namespace {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

PreprocessConfig parse_preprocess(const nlohmann::json& j) {
  require_known_keys(j, {"low_hz", "high_hz", "order", "zero_phase", "target_rate"}, "preprocess");
  PreprocessConfig p;
  read_opt(j, "low_hz", p.low_hz);
  read_opt(j, "high_hz", p.high_hz);
  read_opt(j, "order", p.order);
  read_opt(j, "zero_phase", p.zero_phase);
  read_opt(j, "target_rate", p.target_rate);
  if (!(p.low_hz > 0.0 && p.low_hz < p.high_hz)) throw SchemaError("preprocess needs 0 < low_hz < high_hz");
  if (p.order < 2 || p.order % 2 != 0) throw SchemaError("preprocess.order must be even and >= 2");
  if (!(p.target_rate > 2.0 * p.high_hz)) throw SchemaError("preprocess.target_rate must exceed 2 * high_hz");
  return p;
}

InverseConfig parse_inverse(const nlohmann::json& j) {
  require_known_keys(j, {"lambda", "snr", "standardized", "series_order"}, "inverse");
  if (j.contains("lambda") && j.contains("snr")) throw SchemaError("inverse takes either lambda or snr, not both");
  InverseConfig c;
  if (j.contains("lambda")) {
    c.lambda = j.at("lambda").get<double>();
    if (!(*c.lambda >= 0.0)) throw SchemaError("inverse.lambda must be >= 0");
  }
  read_opt(j, "snr", c.snr);
  read_opt(j, "standardized", c.standardized);
  read_opt(j, "series_order", c.series_order);
  if (!(c.snr > 0.0)) throw SchemaError("inverse.snr must be positive");
  if (c.series_order < 40) throw SchemaError("inverse.series_order must be >= 40");
  return c;
}

WaveletConfig parse_wavelet(const nlohmann::json& j) {
  require_known_keys(j, {"omega0", "fmin_hz", "fmax_hz", "f32_images"}, "wavelet");
  WaveletConfig w;
  read_opt(j, "omega0", w.omega0);
  read_opt(j, "fmin_hz", w.fmin_hz);
  read_opt(j, "fmax_hz", w.fmax_hz);
  read_opt(j, "f32_images", w.f32_images);
  if (!(w.omega0 >= 5.0)) throw SchemaError("wavelet.omega0 must be >= 5");
  if (!(w.fmin_hz > 0.0 && w.fmin_hz < w.fmax_hz)) throw SchemaError("wavelet needs 0 < fmin_hz < fmax_hz");
  return w;
}

ConvNetSpec parse_network(const nlohmann::json& j) {
  require_known_keys(j, {"blocks", "latent_dim"}, "network");
  ConvNetSpec s;
  if (j.contains("blocks")) {
    s.blocks.clear();
    for (const auto& b : j.at("blocks")) {
      require_known_keys(b, {"filters", "kernel"}, "network.blocks[]");
      ConvBlockSpec block;
      read_opt(b, "filters", block.filters);
      read_opt(b, "kernel", block.kernel);
      s.blocks.push_back(block);
    }
  }
  read_opt(j, "latent_dim", s.latent_dim);
  s.validate();
  return s;
}

TrainSection parse_train(const nlohmann::json& j) {
  require_known_keys(j, {"lr", "batch", "patience", "seed", "max_steps", "class_weights"}, "train");
  TrainSection t;
  read_opt(j, "lr", t.learning_rate);
  read_opt(j, "batch", t.batch_size);
  read_opt(j, "patience", t.patience);
  read_opt(j, "seed", t.seed);
  read_opt(j, "max_steps", t.max_steps);
  if (j.contains("class_weights") && !j.at("class_weights").is_null()) {
    const auto& w = j.at("class_weights");
    if (!w.is_array() || w.size() != kNumClasses) throw SchemaError("train.class_weights must list 3 numbers");
    t.class_weights = w.get<ClassWeights>();
  }
  TrainConfig probe{t.learning_rate, t.batch_size, t.class_weights.value_or(ClassWeights{1, 1, 1}), t.patience,
                    t.max_steps, t.seed};
  probe.validate();
  return t;
}

SplitConfig parse_split(const nlohmann::json& j) {
  require_known_keys(j, {"seed", "subject_level"}, "split");
  SplitConfig s;
  read_opt(j, "seed", s.seed);
  read_opt(j, "subject_level", s.subject_level);
  return s;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  try {
    require_known_keys(
        j, {"geometry", "cohort", "preprocess", "inverse", "wavelet", "network", "train", "fusion", "split"},
        "config");
    PipelineConfig c;
    if (j.contains("geometry")) c.geometry = SourceSpaceConfig::from_json(j.at("geometry"));
    if (j.contains("cohort")) c.cohort = CohortConfig::from_json(j.at("cohort"));
    if (j.contains("preprocess")) c.preprocess = parse_preprocess(j.at("preprocess"));
    if (j.contains("inverse")) c.inverse = parse_inverse(j.at("inverse"));
    if (j.contains("wavelet")) c.wavelet = parse_wavelet(j.at("wavelet"));
    if (j.contains("network")) c.network = parse_network(j.at("network"));
    if (j.contains("train")) c.train = parse_train(j.at("train"));
    if (j.contains("fusion")) {
      require_known_keys(j.at("fusion"), {"strategy"}, "fusion");
      if (j.at("fusion").contains("strategy")) {
        c.fusion = parse_fusion_strategy(j.at("fusion").at("strategy").get<std::string>());
      }
    }
    if (j.contains("split")) c.split = parse_split(j.at("split"));
    if (c.preprocess.high_hz >= c.cohort.sampling_rate / 2.0) {
      throw SchemaError("preprocess.high_hz must be below the cohort Nyquist frequency");
    }
    return c;
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed config: ") + e.what());
  }
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError("config file not found: " + path);
  std::ifstream in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json inv{{"standardized", inverse.standardized}, {"series_order", inverse.series_order}};
  if (inverse.lambda) {
    inv["lambda"] = *inverse.lambda;
  } else {
    inv["snr"] = inverse.snr;
  }
  nlohmann::json net = network.to_json();
  net.erase("input_height");
  net.erase("input_width");
  net.erase("input_channels");
  net.erase("output_dim");
  nlohmann::json tr{{"lr", train.learning_rate},
                    {"batch", train.batch_size},
                    {"patience", train.patience},
                    {"seed", train.seed},
                    {"max_steps", train.max_steps}};
  if (train.class_weights) tr["class_weights"] = *train.class_weights;
  return {{"geometry", geometry.to_json()},
          {"cohort", cohort.to_json()},
          {"preprocess",
           {{"low_hz", preprocess.low_hz},
            {"high_hz", preprocess.high_hz},
            {"order", preprocess.order},
            {"zero_phase", preprocess.zero_phase},
            {"target_rate", preprocess.target_rate}}},
          {"inverse", inv},
          {"wavelet",
           {{"omega0", wavelet.omega0},
            {"fmin_hz", wavelet.fmin_hz},
            {"fmax_hz", wavelet.fmax_hz},
            {"f32_images", wavelet.f32_images}}},
          {"network", net},
          {"train", tr},
          {"fusion", {{"strategy", std::string(to_string(fusion))}}},
          {"split", {{"seed", split.seed}, {"subject_level", split.subject_level}}}};
}

void PipelineConfig::override_seed(std::uint64_t seed) {
  cohort.seed = seed;
  split.seed = seed;
  train.seed = seed;
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const PipelineConfig& config) { return fnv1a_hex(config.to_json().dump()); }

}  // namespace scwt
