#pragma once

#include <functional>
#include <vector>

#include "ordisco/rng.hpp"
#include "ordisco/types.hpp"

namespace ordisco {

enum class SupervisedPolicy { kStoreAll, kMeanOfFeature };

/// Replayed labeled exemplars (smb). STORE_ALL keeps every label ever seen;
/// MEAN_OF_FEATURE keeps, per class, the entries closest to the class feature
/// mean, under a fixed capacity.
class SupervisedBuffer {
 public:
  explicit SupervisedBuffer(SupervisedPolicy policy = SupervisedPolicy::kStoreAll,
                            int capacity = 0)
      : policy_(policy), capacity_(capacity) {}

  SupervisedPolicy policy() const { return policy_; }
  int capacity() const { return capacity_; }
  const std::vector<Sample>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Fold a batch of labeled samples into the buffer. `feature_fn` is
  /// consulted only under MEAN_OF_FEATURE; ties broken by lower source index.
  void update(const std::vector<Sample>& new_labels,
              const std::function<std::vector<double>(const Sample&)>& feature_fn = {});

  void set_entries(std::vector<Sample> entries) { entries_ = std::move(entries); }

 private:
  SupervisedPolicy policy_;
  int capacity_;
  std::vector<Sample> entries_;
};

/// Replayed unlabeled exemplars (umb) under reservoir sampling: after n >=
/// capacity insertions every item seen is retained with probability
/// capacity/n.
class UnsupervisedBuffer {
 public:
  explicit UnsupervisedBuffer(int capacity = 0) : capacity_(capacity) {}

  int capacity() const { return capacity_; }
  long long seen_count() const { return seen_count_; }
  const std::vector<Sample>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  void update(const std::vector<Sample>& new_images, Rng& rng);

  void restore(std::vector<Sample> entries, long long seen_count) {
    entries_ = std::move(entries);
    seen_count_ = seen_count;
  }

 private:
  int capacity_;
  long long seen_count_ = 0;
  std::vector<Sample> entries_;
};

}  // namespace ordisco
