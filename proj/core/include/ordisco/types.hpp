#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace ordisco {

constexpr int kUnlabeled = -1;

struct ImageShape {
  int h = 0;
  int w = 0;
  int c = 0;
  int size() const { return h * w * c; }
  bool operator==(const ImageShape&) const = default;
};

/// One training example. `source_index` is the position in the originating
/// dataset and doubles as the sample identity for disjointness checks.
struct Sample {
  std::vector<float> image;  // normalized to [0,1], row-major H x W x C
  int label = kUnlabeled;    // kUnlabeled or 0..K-1
  int source_index = -1;
};

/// One incremental unit of the stream: a labeled and an unlabeled sub-batch.
struct SemiSupBatch {
  std::vector<Sample> labeled;    // all label >= 0
  std::vector<Sample> unlabeled;  // all label == kUnlabeled
  int batch_index = 1;            // 1-based, global across tasks
};

enum class Scenario { kNewInstance, kNewClass };

std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

struct TaskSequence {
  std::vector<std::vector<SemiSupBatch>> tasks;
  Scenario scenario = Scenario::kNewInstance;
  std::vector<std::set<int>> classes_per_task;

  int total_batches() const {
    int n = 0;
    for (const auto& t : tasks) n += static_cast<int>(t.size());
    return n;
  }
};

struct MetricsRecord {
  int batch_or_task_index = 0;
  double averaged_accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  double wall_time_s = 0.0;
  std::string method;
  std::uint64_t seed = 0;
};

}  // namespace ordisco
