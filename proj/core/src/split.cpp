#include "ordisco/split.hpp"

#include <algorithm>
#include <map>

#include "ordisco/errors.hpp"
#include "ordisco/rng.hpp"

namespace ordisco {

std::vector<std::set<int>> default_class_pairs(int num_classes) {
  std::vector<std::set<int>> tasks;
  for (int c = 0; c < num_classes; c += 2) {
    std::set<int> t{c};
    if (c + 1 < num_classes) t.insert(c + 1);
    tasks.push_back(std::move(t));
  }
  return tasks;
}

namespace {

// Stratified allocation: each class's (seeded-shuffled) samples are dealt
// into `batches_in_task` near-equal groups; the first L of each group are the
// labeled designations. Remainder windows rotate across classes so batch
// totals differ by at most 1.
std::vector<SemiSupBatch> build_task(const Dataset& ds,
                                     const std::set<int>& classes,
                                     int batches_in_task, int labels_per_class,
                                     std::uint64_t seed, int first_batch_index) {
  std::map<int, std::vector<int>> by_class;
  for (const Sample& s : ds.samples) {
    if (classes.count(s.label)) by_class[s.label].push_back(s.source_index);
  }
  for (int c : classes) {
    const auto n = static_cast<long long>(by_class[c].size());
    if (n < static_cast<long long>(batches_in_task) * labels_per_class) {
      throw DataError("infeasible split: class " + std::to_string(c) + " has " +
                      std::to_string(n) + " samples, needs at least " +
                      std::to_string(batches_in_task * labels_per_class));
    }
  }

  std::vector<SemiSupBatch> batches(batches_in_task);
  for (int b = 0; b < batches_in_task; ++b) {
    batches[b].batch_index = first_batch_index + b;
  }

  int rotation = 0;
  for (int c : classes) {
    auto& idx = by_class[c];
    std::sort(idx.begin(), idx.end());
    Rng rng = Rng::substream(seed, "split", static_cast<std::uint64_t>(c));
    rng.shuffle(idx);

    const int n = static_cast<int>(idx.size());
    const int base = n / batches_in_task;
    const int rem = n % batches_in_task;
    int cursor = 0;
    for (int b = 0; b < batches_in_task; ++b) {
      int take = base;
      // Batch b gets one extra sample when it falls in this class's
      // rotated remainder window.
      const int pos = (b - rotation % batches_in_task + batches_in_task) % batches_in_task;
      if (pos < rem) ++take;
      for (int j = 0; j < take; ++j) {
        const int src = idx[cursor++];
        Sample s = ds.samples[static_cast<std::size_t>(src)];
        if (j < labels_per_class) {
          batches[b].labeled.push_back(std::move(s));
        } else {
          s.label = kUnlabeled;
          batches[b].unlabeled.push_back(std::move(s));
        }
      }
    }
    rotation += rem;
  }
  return batches;
}

}  // namespace

TaskSequence split_new_instance(const Dataset& dataset, const BenchmarkSpec& spec) {
  if (spec.num_batches < 1 || spec.labels_per_class < 1) {
    throw ConfigError("split: B >= 1 and L >= 1 required");
  }
  for (const Sample& s : dataset.samples) {
    if (s.label < 0) throw DataError("split: dataset must be fully labeled");
  }
  std::set<int> all_classes;
  for (int c = 0; c < dataset.num_classes; ++c) all_classes.insert(c);

  TaskSequence seq;
  seq.scenario = Scenario::kNewInstance;
  seq.classes_per_task = {all_classes};
  seq.tasks.push_back(
      build_task(dataset, all_classes, spec.num_batches, spec.labels_per_class,
                 spec.seed, 1));
  return seq;
}

TaskSequence split_new_class(const Dataset& dataset, const BenchmarkSpec& spec) {
  if (spec.classes_per_task.empty()) {
    throw ConfigError("split_new_class: classes_per_task required");
  }
  std::set<int> seen;
  for (const auto& t : spec.classes_per_task) {
    for (int c : t) {
      if (c < 0 || c >= dataset.num_classes) {
        throw ConfigError("split_new_class: class id " + std::to_string(c) +
                          " out of range");
      }
      if (!seen.insert(c).second) {
        throw ConfigError("split_new_class: overlapping class sets (class " +
                          std::to_string(c) + ")");
      }
    }
  }
  if (static_cast<int>(seen.size()) != dataset.num_classes) {
    throw ConfigError("split_new_class: classes_per_task must partition all classes");
  }
  const int num_tasks = static_cast<int>(spec.classes_per_task.size());
  if (spec.num_batches % num_tasks != 0) {
    throw ConfigError("split_new_class: B must be divisible by the task count");
  }
  for (const Sample& s : dataset.samples) {
    if (s.label < 0) throw DataError("split: dataset must be fully labeled");
  }
  const int per_task = spec.num_batches / num_tasks;

  TaskSequence seq;
  seq.scenario = Scenario::kNewClass;
  seq.classes_per_task = spec.classes_per_task;
  int next_index = 1;
  for (const auto& classes : spec.classes_per_task) {
    seq.tasks.push_back(build_task(dataset, classes, per_task,
                                   spec.labels_per_class, spec.seed, next_index));
    next_index += per_task;
  }
  return seq;
}

TaskSequence split(const Dataset& dataset, const BenchmarkSpec& spec) {
  return spec.scenario == Scenario::kNewInstance ? split_new_instance(dataset, spec)
                                                 : split_new_class(dataset, spec);
}

}  // namespace ordisco
