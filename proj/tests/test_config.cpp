#include <doctest.h>

#include <cstdlib>

#include "ordisco/config.hpp"
#include "ordisco/errors.hpp"

using namespace ordisco;

TEST_CASE("example config parses with documented defaults") {
  config::RunConfig cfg = config::parse_run_config(config::example_run_config());
  CHECK(cfg.train.method == train::Method::kOrdisco);
  CHECK(cfg.train.alpha == 0.5);
  CHECK(cfg.train.lambda == 0.001);
  CHECK(cfg.train.ema_decay == 0.99);
  CHECK(cfg.train.lr_gd == 0.0002);
  CHECK(cfg.train.labeled_batch_size == 32);
  CHECK(cfg.train.unlabeled_batch_size == 128);
  CHECK(cfg.benchmark.num_batches == 10);
  CHECK(cfg.benchmark.seed == 1);
  CHECK(cfg.train.seed == 1);
}

TEST_CASE("empty object falls back to defaults") {
  config::RunConfig cfg = config::parse_run_config("{}");
  CHECK(cfg.train.method == train::Method::kOrdisco);
  CHECK(cfg.benchmark.dataset_id == "synthetic10");
}

TEST_CASE("invalid JSON is a config error") {
  CHECK_THROWS_AS(config::parse_run_config("{nope"), ConfigError);
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_WITH_AS(config::parse_run_config(R"({"sneaky": 1})"),
                       doctest::Contains("sneaky"), ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(R"({"train": {"typo_lr": 1}})"), ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(R"({"arch": {"width": 1}})"), ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(R"({"data": {"synthetic": {"n": 1}}})"),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(R"({"output": {"path": "x"}})"), ConfigError);
}

TEST_CASE("wrong value types are rejected") {
  CHECK_THROWS_AS(config::parse_run_config(R"({"seed": "one"})"), ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(R"({"train": {"alpha": "half"}})"),
                  ConfigError);
}

TEST_CASE("out-of-range values are rejected before any compute") {
  CHECK_THROWS_AS(config::parse_run_config(R"({"train": {"alpha": 1.5}})"), ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(R"({"train": {"lambda": -0.1}})"),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(R"({"train": {"steps_per_batch": 0}})"),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(R"({"train": {"reg_scope": "everything"}})"),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(R"({"arch": {"classifier": "resnet"}})"),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(R"({"benchmark": {"num_batches": 0}})"),
                  ConfigError);
  CHECK_THROWS_AS(config::parse_run_config(R"({"method": "finetune"})"), ConfigError);
}

TEST_CASE("config hash is stable and sensitive") {
  config::RunConfig a = config::parse_run_config(config::example_run_config());
  config::RunConfig b = config::parse_run_config(config::example_run_config());
  CHECK(config::config_hash(a) == config::config_hash(b));
  CHECK(config::config_hash(a).size() == 16);
  b.train.lambda = 0.01;
  CHECK(config::config_hash(a) != config::config_hash(b));
}

TEST_CASE("canonical form round-trips through the parser") {
  config::RunConfig a = config::parse_run_config(config::example_run_config());
  config::RunConfig b = config::parse_run_config(config::run_config_json(a));
  CHECK(config::run_config_json(a) == config::run_config_json(b));
  CHECK(config::config_hash(a) == config::config_hash(b));
}

TEST_CASE("output root environment override") {
  config::RunConfig cfg = config::parse_run_config(R"({"output": {"dir": "some/runs"}})");
  CHECK(config::resolve_output_dir(cfg) == "some/runs");
  setenv("ORDISCO_OUTPUT_ROOT", "/tmp/ordisco_root", 1);
  CHECK(config::resolve_output_dir(cfg) == "/tmp/ordisco_root/runs");
  unsetenv("ORDISCO_OUTPUT_ROOT");
}

TEST_CASE("load_benchmark builds a consistent synthetic stream") {
  config::RunConfig cfg = config::parse_run_config(R"({
    "seed": 3,
    "benchmark": { "num_batches": 5, "labels_per_class": 2 },
    "data": { "synthetic": { "classes": 6, "per_class": 30, "side": 8, "test_per_class": 4 } }
  })");
  config::BenchmarkData data = config::load_benchmark(cfg);
  CHECK(data.train.num_classes == 6);
  CHECK(data.train.size() == 180);
  CHECK(data.test.size() == 24);
  CHECK(data.sequence.total_batches() == 5);
  // Train and test must share geometry.
  CHECK(data.train.shape == data.test.shape);
}
