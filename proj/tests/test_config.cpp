#include <doctest.h>

#include <cstdlib>
#include <string>

#include "depthstyle/config.hpp"
#include "support/checks.hpp"
#include "support/testenv.hpp"

using checks::category_of;
using checks::message_of;
using depthstyle::apply_cache_env;
using depthstyle::apply_config_file;
using depthstyle::apply_config_json;
using depthstyle::config_to_json;
using depthstyle::ErrorCategory;
using depthstyle::JobConfig;
using depthstyle::validate_job_config;

TEST_CASE("defaults") {
  JobConfig cfg;
  CHECK(cfg.output_dir == "out");
  CHECK(cfg.alpha == 0.5);
  CHECK(cfg.size == 512);
  CHECK(cfg.content_weight == 1.0);
  CHECK(cfg.style_weight == 1e3);
  CHECK(cfg.tv_weight == 1e-3);
  CHECK(cfg.kappa == 0.0);
  CHECK(cfg.iterations == 500);
  CHECK(cfg.lr == 0.02);
  CHECK(cfg.feature_backend == "tiny");
  CHECK(cfg.depth_backend == "file");
  CHECK(cfg.style_layers.empty());
  CHECK(cfg.content_layer.empty());
  CHECK(cfg.init == "image");
  CHECK(cfg.seed == 42);
  CHECK(cfg.snapshot_interval == 100);
  CHECK(cfg.cache_dir.empty());
  CHECK_NOTHROW(validate_job_config(cfg));
}

TEST_CASE("a config document overlays only the keys it names") {
  JobConfig cfg;
  apply_config_json(cfg, R"({"alpha": 0.25, "iterations": 10, "style_layers": ["relu1"]})");
  CHECK(cfg.alpha == 0.25);
  CHECK(cfg.iterations == 10);
  CHECK(cfg.style_layers == std::vector<std::string>{"relu1"});
  // Everything else keeps its default.
  CHECK(cfg.size == 512);
  CHECK(cfg.lr == 0.02);
  CHECK(cfg.init == "image");
}

TEST_CASE("unknown keys are rejected by name") {
  JobConfig cfg;
  CHECK(category_of([&] { apply_config_json(cfg, R"({"bogus": 1})"); }) ==
        ErrorCategory::UnknownKey);
  const std::string msg =
      message_of([&] { apply_config_json(cfg, R"({"iteratoins": 10})"); });
  CHECK(msg.find("iteratoins") != std::string::npos);
}

TEST_CASE("type errors are MalformedConfig") {
  JobConfig cfg;
  CHECK(category_of([&] { apply_config_json(cfg, R"({"alpha": "zero"})"); }) ==
        ErrorCategory::MalformedConfig);
  CHECK(category_of([&] { apply_config_json(cfg, R"({"size": 1.5})"); }) ==
        ErrorCategory::MalformedConfig);
  CHECK(category_of([&] { apply_config_json(cfg, R"({"content": 42})"); }) ==
        ErrorCategory::MalformedConfig);
  CHECK(category_of([&] { apply_config_json(cfg, R"({"style_layers": "relu1"})"); }) ==
        ErrorCategory::MalformedConfig);
  CHECK(category_of([&] { apply_config_json(cfg, R"({"style_layers": [1, 2]})"); }) ==
        ErrorCategory::MalformedConfig);
  CHECK(category_of([&] { apply_config_json(cfg, R"({"seed": -3})"); }) ==
        ErrorCategory::MalformedConfig);
  CHECK(category_of([&] { apply_config_json(cfg, "{"); }) ==
        ErrorCategory::MalformedConfig);
  CHECK(category_of([&] { apply_config_json(cfg, "[1, 2]"); }) ==
        ErrorCategory::MalformedConfig);
}

TEST_CASE("serialization round trips every field") {
  JobConfig cfg;
  cfg.content = "c.png";
  cfg.style = "s.png";
  cfg.depth = "d.png";
  cfg.output_dir = "results";
  cfg.alpha = 0.75;
  cfg.size = 256;
  cfg.content_weight = 2.5;
  cfg.style_weight = 1234.5;
  cfg.tv_weight = 0.25;
  cfg.kappa = 1.5;
  cfg.iterations = 77;
  cfg.lr = 0.005;
  cfg.feature_backend = "pretrained:vgg";
  cfg.depth_backend = "external:/usr/bin/est";
  cfg.pretrained_model = "model.onnx";
  cfg.style_layers = {"a", "b"};
  cfg.content_layer = "b";
  cfg.init = "noise";
  cfg.seed = 1234567890123456789ull;
  cfg.snapshot_interval = 25;
  cfg.cache_dir = "/tmp/cache";

  JobConfig back;
  apply_config_json(back, config_to_json(cfg));
  CHECK(back == cfg);
}

TEST_CASE("config files work like inline documents") {
  testenv::TempDir tmp;
  testenv::write_text(tmp / "job.json", R"({"alpha": 0.9, "size": 64})");
  JobConfig cfg;
  apply_config_file(cfg, tmp / "job.json");
  CHECK(cfg.alpha == 0.9);
  CHECK(cfg.size == 64);

  JobConfig missing;
  CHECK(category_of([&] { apply_config_file(missing, tmp / "absent.json"); }) ==
        ErrorCategory::FileNotFound);
}

TEST_CASE("validation ranges") {
  auto expect_out_of_range = [](void (*mutate)(JobConfig&)) {
    JobConfig cfg;
    mutate(cfg);
    CHECK(category_of([&] { validate_job_config(cfg); }) == ErrorCategory::OutOfRange);
  };

  expect_out_of_range([](JobConfig& c) { c.alpha = -0.01; });
  expect_out_of_range([](JobConfig& c) { c.alpha = 1.01; });
  expect_out_of_range([](JobConfig& c) { c.size = 0; });
  expect_out_of_range([](JobConfig& c) { c.content_weight = -1.0; });
  expect_out_of_range([](JobConfig& c) { c.style_weight = -0.5; });
  expect_out_of_range([](JobConfig& c) { c.tv_weight = -1e-9; });
  expect_out_of_range([](JobConfig& c) { c.kappa = -2.0; });
  expect_out_of_range([](JobConfig& c) { c.iterations = -1; });
  expect_out_of_range([](JobConfig& c) { c.lr = 0.0; });
  expect_out_of_range([](JobConfig& c) { c.lr = -0.1; });
  expect_out_of_range([](JobConfig& c) { c.init = "random"; });
  expect_out_of_range([](JobConfig& c) { c.snapshot_interval = -5; });

  JobConfig edge;
  edge.alpha = 0.0;
  edge.iterations = 0;
  edge.snapshot_interval = 0;
  CHECK_NOTHROW(validate_job_config(edge));
  edge.alpha = 1.0;
  CHECK_NOTHROW(validate_job_config(edge));
}

TEST_CASE("the cache environment variable overrides the merged value") {
  JobConfig cfg;
  cfg.cache_dir = "/from/flags";

  ::setenv("DEPTHSTYLE_CACHE", "/from/env", 1);
  apply_cache_env(cfg);
  CHECK(cfg.cache_dir == "/from/env");

  ::setenv("DEPTHSTYLE_CACHE", "", 1);
  cfg.cache_dir = "/from/flags";
  apply_cache_env(cfg);
  CHECK(cfg.cache_dir == "/from/flags");

  ::unsetenv("DEPTHSTYLE_CACHE");
  apply_cache_env(cfg);
  CHECK(cfg.cache_dir == "/from/flags");
}
