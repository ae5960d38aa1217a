#pragma once

// Pipeline configuration document.
//
// Every section is optional and falls back to the defaults below; unknown
// keys anywhere are a SchemaError.

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "scwt/fusion.hpp"
#include "scwt/neural.hpp"
#include "scwt/signal.hpp"
#include "scwt/synthgen.hpp"

namespace scwt {

struct PreprocessConfig {
  double low_hz = 0.5;
  double high_hz = 40.0;
  int order = 8;
  bool zero_phase = true;
  double target_rate = kEpochSamplingRate;
};

struct InverseConfig {
  std::optional<double> lambda;  // explicit value wins over snr
  double snr = kDefaultSnr;
  bool standardized = false;
  int series_order = kDefaultSeriesOrder;
};

struct WaveletConfig {
  double omega0 = 6.0;
  double fmin_hz = 0.5;
  double fmax_hz = 40.0;
  bool f32_images = true;
};

struct TrainSection {
  double learning_rate = 1e-3;
  int batch_size = 32;
  int patience = 20;
  int max_steps = 2000;
  std::uint64_t seed = 0;
  std::optional<ClassWeights> class_weights;  // computed from training counts when absent
};

struct SplitConfig {
  std::uint64_t seed = 0;
  bool subject_level = false;
};

struct PipelineConfig {
  SourceSpaceConfig geometry;
  CohortConfig cohort;
  PreprocessConfig preprocess;
  InverseConfig inverse;
  WaveletConfig wavelet;
  ConvNetSpec network;
  TrainSection train;
  FusionStrategy fusion = FusionStrategy::ProductProb;
  SplitConfig split;

  /// Parses and validates; any structural or value problem is a SchemaError.
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::string& path);
  nlohmann::json to_json() const;

  /// Sets every seed (cohort, split, training) to `seed`.
  void override_seed(std::uint64_t seed);
};

/// FNV-1a 64-bit hash of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const PipelineConfig& config);
std::string fnv1a_hex(std::string_view text);

}  // namespace scwt
