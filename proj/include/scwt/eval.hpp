#pragma once

// Dataset splitting and classification metrics.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scwt/types.hpp"

namespace scwt {

inline constexpr double kTestFraction = 0.2;
inline constexpr double kValidationFraction = 0.2;  // of the non-test part

struct SplitManifest {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  bool subject_level = false;

  nlohmann::json to_json() const;
  static SplitManifest from_json(const nlohmann::json& j);
};

/// Seeded random partition of `ids`: |test| = round(0.2 N),
/// |val| = round(0.16 N), the rest train. Each list is returned sorted.
/// Needs at least 5 ids.
SplitManifest split_dataset(std::span<const std::size_t> ids, std::uint64_t seed);

/// Same fractions applied to the distinct subjects, so that every epoch of a
/// subject lands in one partition. `subjects[k]` names the subject of ids[k].
SplitManifest split_by_subject(std::span<const std::size_t> ids, std::span<const std::string> subjects,
                               std::uint64_t seed);

using ConfusionMatrix = std::array<std::array<long long, kNumClasses>, kNumClasses>;  // [true][pred]

struct ConfusionSummary {
  ConfusionMatrix confusion{};
  double accuracy = 0.0;
};

ConfusionSummary confusion_and_accuracy(std::span<const int> predictions, std::span<const int> labels);

struct CurvePoint {
  double threshold = 0.0;  // +inf for the starting point
  double x = 0.0;
  double y = 0.0;
};

struct BinaryCurve {
  std::vector<CurvePoint> points;
  std::optional<double> area;  // absent when the curve is undefined
};

/// ROC of `scores` for the positive set, thresholds swept from high to low
/// with equal scores grouped. x = FPR, y = TPR, AUC by trapezoid rule.
/// Undefined (no area) unless there is at least one positive and one negative.
BinaryCurve binary_roc(std::span<const double> scores, std::span<const bool> positive);

/// Precision-recall sweep; x = recall, y = precision.
/// AP = sum_k (R_k - R_{k-1}) P_k. Undefined without positives.
BinaryCurve binary_precision_recall(std::span<const double> scores, std::span<const bool> positive);

using ScoreRow = std::array<double, kNumClasses>;

struct PerClassCurves {
  std::array<BinaryCurve, kNumClasses> curves;
  std::optional<double> macro;  // mean over classes with a defined area
};

PerClassCurves roc_auc_ovr(std::span<const ScoreRow> scores, std::span<const int> labels);
PerClassCurves precision_recall_ap(std::span<const ScoreRow> scores, std::span<const int> labels);

struct MetricsReport {
  std::size_t samples = 0;
  ConfusionSummary summary;
  PerClassCurves roc;
  PerClassCurves pr;

  /// Keys: samples, accuracy, auc_macro, ap_macro, confusion, per_class.
  nlohmann::json to_json() const;
};

/// Predictions are taken as given (so fused predictions with their own tie
/// rules are reported faithfully); scores drive ROC and PR.
MetricsReport evaluate_predictions(std::span<const int> predictions, std::span<const ScoreRow> scores,
                                   std::span<const int> labels);

/// Writes roc_<class>.csv and pr_<class>.csv (threshold,x,y) into `dir`.
void write_curve_csvs(const std::filesystem::path& dir, const MetricsReport& report);

}  // namespace scwt
