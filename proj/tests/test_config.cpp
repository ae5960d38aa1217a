#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "scwt/config.hpp"
#include "scwt/error.hpp"

using namespace scwt;
using nlohmann::json;

TEST_SUITE("config") {
  TEST_CASE("empty document yields defaults") {
    const PipelineConfig c = PipelineConfig::from_json(json::object());
    CHECK(c.fusion == FusionStrategy::ProductProb);
    CHECK(c.preprocess.order == 8);
    CHECK(c.preprocess.zero_phase);
    CHECK(c.preprocess.target_rate == 512.0);
    CHECK(c.inverse.snr == 3.0);
    CHECK(!c.inverse.lambda.has_value());
    CHECK(!c.inverse.standardized);
    CHECK(c.wavelet.omega0 == 6.0);
    CHECK(c.train.patience == 20);
    CHECK(c.cohort.subjects_per_class == 9);
  }

  TEST_CASE("sections are parsed") {
    const json doc = json::parse(R"({
      "network": {"blocks": [{"filters": 4, "kernel": 3}, {"filters": 8}], "latent_dim": 16},
      "train": {"lr": 0.003, "batch": 16, "patience": 5, "seed": 9, "max_steps": 40, "class_weights": [1, 2, 3]},
      "inverse": {"lambda": 0.25, "standardized": true},
      "fusion": {"strategy": "tfn"},
      "split": {"seed": 4, "subject_level": true}
    })");
    const PipelineConfig c = PipelineConfig::from_json(doc);
    REQUIRE(c.network.blocks.size() == 2);
    CHECK(c.network.blocks[1].filters == 8);
    CHECK(c.network.blocks[1].kernel == 3);
    CHECK(c.network.latent_dim == 16);
    CHECK(c.train.learning_rate == 0.003);
    CHECK(c.train.batch_size == 16);
    CHECK(*c.train.class_weights == ClassWeights{1, 2, 3});
    CHECK(*c.inverse.lambda == 0.25);
    CHECK(c.inverse.standardized);
    CHECK(c.fusion == FusionStrategy::TensorFusion);
    CHECK(c.split.subject_level);

    const PipelineConfig again = PipelineConfig::from_json(c.to_json());
    CHECK(again.to_json() == c.to_json());
    CHECK(config_hash(again) == config_hash(c));
  }

  TEST_CASE("schema violations") {
    CHECK_THROWS_AS(PipelineConfig::from_json(json{{"colour", 1}}), SchemaError);
    CHECK_THROWS_AS(PipelineConfig::from_json(json{{"train", {{"learning_rate", 0.1}}}}), SchemaError);
    CHECK_THROWS_AS(PipelineConfig::from_json(json{{"inverse", {{"lambda", 1.0}, {"snr", 3.0}}}}), SchemaError);
    CHECK_THROWS_AS(PipelineConfig::from_json(json{{"train", {{"batch", "big"}}}}), SchemaError);
    CHECK_THROWS_AS(PipelineConfig::from_json(json{{"fusion", {{"strategy", "max"}}}}), SchemaError);
    CHECK_THROWS_AS(PipelineConfig::from_json(json{{"network", {{"blocks", json::array({{{"filters", 4}, {"stride", 2}}})}}}}),
                    SchemaError);
    CHECK_THROWS_AS(PipelineConfig::from_json(json{{"cohort", {{"subjects_per_class", 0}}}}), SchemaError);
    CHECK_THROWS_AS(PipelineConfig::from_json(json::array()), SchemaError);
  }

  TEST_CASE("load from disk") {
    const auto dir = std::filesystem::temp_directory_path() / "scwt_tests" / "config";
    std::filesystem::create_directories(dir);
    CHECK_THROWS_AS(PipelineConfig::load((dir / "absent.json").string()), MissingArtifactError);
    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK_THROWS_AS(PipelineConfig::load((dir / "bad.json").string()), SchemaError);
    std::ofstream(dir / "ok.json") << R"({"split": {"seed": 11}})";
    CHECK(PipelineConfig::load((dir / "ok.json").string()).split.seed == 11);
  }

  TEST_CASE("seed override and hashing") {
    PipelineConfig c;
    c.override_seed(77);
    CHECK(c.cohort.seed == 77);
    CHECK(c.split.seed == 77);
    CHECK(c.train.seed == 77);

    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    PipelineConfig d = c;
    CHECK(config_hash(d) == config_hash(c));
    d.train.patience = 21;
    CHECK(config_hash(d) != config_hash(c));
  }
}
