#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "ordisco/dataset.hpp"
#include "ordisco/types.hpp"

namespace ordisco {

/// Deterministic recipe for building an SSCL stream from a dataset.
/// Benchmark names render as "dataset-L" (labels per class per batch).
struct BenchmarkSpec {
  std::string dataset_id;
  int num_batches = 30;          // B, total across all tasks
  int labels_per_class = 3;      // L, per class per batch
  Scenario scenario = Scenario::kNewInstance;
  std::vector<std::set<int>> classes_per_task;  // NEW_CLASS only
  std::uint64_t seed = 0;

  std::string name() const { return dataset_id + "-" + std::to_string(labels_per_class); }
};

/// Partition a fully labeled dataset into B near-equal batches with exactly L
/// labeled samples per class in each batch; single task.
TaskSequence split_new_instance(const Dataset& dataset, const BenchmarkSpec& spec);

/// Same per-class allocation, grouped into T tasks of B/T batches, each task
/// containing only its own classes.
TaskSequence split_new_class(const Dataset& dataset, const BenchmarkSpec& spec);

TaskSequence split(const Dataset& dataset, const BenchmarkSpec& spec);

/// Default class partition for NEW_CLASS: consecutive pairs (5 binary tasks
/// when K=10).
std::vector<std::set<int>> default_class_pairs(int num_classes);

}  // namespace ordisco
