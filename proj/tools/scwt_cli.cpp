// scwt: command-line driver for the pipeline stages.
//
//   scwt <stage> [--config PATH] [--seed N] [--fusion S] [--out DIR]
//                [--subject-level-split] [--verbose]
//
// Stages: simulate preprocess localize scout epoch cwt train fuse evaluate
// report, or `all` to run every stage in order. Errors are printed to stderr
// as a single JSON object; exit codes are 2 for a missing input artifact,
// 3 for a configuration schema violation, 4 for a numeric failure and 1 for
// anything else.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "scwt/error.hpp"
#include "scwt/pipeline.hpp"

namespace {

int exit_code_for(const scwt::Error& e) {
  if (dynamic_cast<const scwt::MissingArtifactError*>(&e) != nullptr) return 2;
  if (dynamic_cast<const scwt::SchemaError*>(&e) != nullptr) return 3;
  if (dynamic_cast<const scwt::NumericError*>(&e) != nullptr) return 4;
  if (dynamic_cast<const scwt::DegeneracyError*>(&e) != nullptr) return 4;
  return 1;
}

int report_error(const std::string& kind, const std::string& message, int code) {
  const nlohmann::json err{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << err.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subcortical scalogram EEG classification pipeline", "scwt"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string fusion;
  std::string out = "scwt_out";
  bool subject_level = false;
  bool verbose = false;

  app.add_option("--config", config_path, "Pipeline configuration JSON");
  app.add_option("--seed", seed, "Seed for cohort, split and training (overrides the config)");
  app.add_option("--fusion", fusion, "Fusion strategy")
      ->check(CLI::IsMember({"left", "right", "sum", "product", "early", "tfn"}));
  app.add_option("--out", out, "Output root directory");
  app.add_flag("--subject-level-split", subject_level, "Keep all epochs of a subject in one partition");
  app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");

  const char* stages[] = {"simulate", "preprocess", "localize", "scout",  "epoch",  "cwt",
                          "train",    "fuse",       "evaluate", "report", "all"};
  for (const char* name : stages) app.add_subcommand(name, std::string("Run the ") + name + " stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return report_error("usage", e.what(), 1);
  }

  try {
    scwt::PipelineContext ctx;
    if (!config_path.empty()) ctx.config = scwt::PipelineConfig::load(config_path);
    if (seed) ctx.config.override_seed(*seed);
    if (subject_level) ctx.config.split.subject_level = true;
    if (!fusion.empty()) ctx.config.fusion = scwt::parse_fusion_strategy(fusion);
    ctx.out = out;
    ctx.verbose = verbose;

    const std::string stage = app.get_subcommands().front()->get_name();
    if (stage == "all") {
      std::vector<scwt::FusionStrategy> strategies;
      if (fusion.empty()) {
        strategies = {scwt::FusionStrategy::LeftOnly,    scwt::FusionStrategy::RightOnly,
                      scwt::FusionStrategy::SumProb,     scwt::FusionStrategy::ProductProb,
                      scwt::FusionStrategy::EarlyFusion, scwt::FusionStrategy::TensorFusion};
      } else {
        strategies = {ctx.config.fusion};
      }
      std::cout << scwt::run_all(ctx, strategies).dump(2) << "\n";
    } else if (stage == "evaluate") {
      std::cout << scwt::run_evaluate(ctx, ctx.config.fusion).dump(2) << "\n";
    } else if (stage == "report") {
      std::cout << scwt::run_report(ctx).dump(2) << "\n";
    } else {
      scwt::run_stage(stage, ctx, ctx.config.fusion);
    }
  } catch (const scwt::Error& e) {
    return report_error(e.kind(), e.what(), exit_code_for(e));
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
  return 0;
}
