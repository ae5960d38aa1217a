#pragma once

// File-based pipeline stages. Each stage reads the artifacts of earlier
// stages under the output root and writes into its own directory:
//
//   simulate/ preprocess/ localize/ scout/ epoch/ cwt/ train/
//   fuse/<strategy>/ evaluate/<strategy>/ report/
//
// Outputs depend only on the configuration and the input artifacts, so a
// rerun reproduces them byte for byte.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scwt/config.hpp"

namespace scwt {

struct PipelineContext {
  PipelineConfig config;
  std::filesystem::path out = "scwt_out";
  bool verbose = false;
};

void run_simulate(const PipelineContext& ctx);
void run_preprocess(const PipelineContext& ctx);
void run_localize(const PipelineContext& ctx);
void run_scout(const PipelineContext& ctx);
void run_epoch(const PipelineContext& ctx);
void run_cwt(const PipelineContext& ctx);
void run_train(const PipelineContext& ctx);
void run_fuse(const PipelineContext& ctx, FusionStrategy strategy);
/// Returns the metrics JSON written to evaluate/<strategy>/metrics.json.
nlohmann::json run_evaluate(const PipelineContext& ctx, FusionStrategy strategy);
/// Collects every evaluated strategy into report/summary.json and writes the
/// ROC/PR CSVs. Returns the summary.
nlohmann::json run_report(const PipelineContext& ctx);

/// Stage names in execution order (without fuse/evaluate/report).
const std::vector<std::string_view>& upstream_stages();

/// Dispatches one stage by name. `fuse` and `evaluate` use `strategy`.
void run_stage(std::string_view stage, const PipelineContext& ctx, FusionStrategy strategy);

/// Runs every upstream stage, then fuse and evaluate for each of
/// `strategies`, then report.
nlohmann::json run_all(const PipelineContext& ctx, const std::vector<FusionStrategy>& strategies);

}  // namespace scwt
