#pragma once

#include <string>

#include "ordisco/split.hpp"
#include "ordisco/trainer.hpp"

namespace ordisco::config {

/// Everything one training run needs: stream recipe, optimizer/method knobs,
/// data locations and output plumbing. Parsed from a JSON file; the schema is
/// validated up front and unknown keys are rejected.
struct RunConfig {
  BenchmarkSpec benchmark;
  train::TrainConfig train;

  // Packed dataset paths; when empty the synthetic generator below is used.
  std::string dataset_path;
  std::string test_dataset_path;
  int synthetic_classes = 10;
  int synthetic_per_class = 200;
  int synthetic_side = 8;
  int synthetic_test_per_class = 25;

  std::string output_dir = "runs";
  int checkpoint_every = 0;    // batches between checkpoints; 0 = final only
  int sample_sheet_every = 0;  // batches between generator sample sheets; 0 = off
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Canonical serialized form (sorted keys, full field set); two configs hash
/// equal iff this string is equal.
std::string run_config_json(const RunConfig& cfg);

/// 16-hex-digit FNV-1a over the canonical form; stamped into every output.
std::string config_hash(const RunConfig& cfg);

/// output_dir, unless the ORDISCO_OUTPUT_ROOT environment variable is set, in
/// which case outputs land under that root instead.
std::string resolve_output_dir(const RunConfig& cfg);

/// Complete annotated example accepted by parse_run_config.
std::string example_run_config();

/// Train/test datasets plus the incremental stream described by the config.
struct BenchmarkData {
  Dataset train;
  Dataset test;
  TaskSequence sequence;
};

/// Loads packed datasets when paths are given, otherwise generates the
/// synthetic benchmark; then splits the training data into the stream.
BenchmarkData load_benchmark(const RunConfig& cfg);

}  // namespace ordisco::config
