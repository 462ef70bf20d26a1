#include "ordisco/buffers.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ordisco/errors.hpp"

namespace ordisco {

void SupervisedBuffer::update(
    const std::vector<Sample>& new_labels,
    const std::function<std::vector<double>(const Sample&)>& feature_fn) {
  for (const auto& s : new_labels) {
    if (s.label < 0) throw DataError("SupervisedBuffer: unlabeled sample rejected");
  }
  if (policy_ == SupervisedPolicy::kStoreAll) {
    entries_.insert(entries_.end(), new_labels.begin(), new_labels.end());
    return;
  }

  if (!feature_fn) {
    throw ConfigError("SupervisedBuffer: MEAN_OF_FEATURE requires a feature_fn");
  }
  std::vector<Sample> pool = entries_;
  pool.insert(pool.end(), new_labels.begin(), new_labels.end());

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < pool.size(); ++i) by_class[pool[i].label].push_back(i);
  const int num_classes = static_cast<int>(by_class.size());
  if (num_classes > 0 && capacity_ < num_classes) {
    throw ConfigError("SupervisedBuffer: capacity " + std::to_string(capacity_) +
                      " below class count " + std::to_string(num_classes));
  }
  const int per_class = num_classes > 0 ? capacity_ / num_classes : 0;

  std::vector<Sample> kept;
  for (auto& [cls, members] : by_class) {
    std::vector<std::vector<double>> feats;
    feats.reserve(members.size());
    for (std::size_t i : members) feats.push_back(feature_fn(pool[i]));
    std::vector<double> mean(feats.empty() ? 0 : feats[0].size(), 0.0);
    for (const auto& f : feats)
      for (std::size_t d = 0; d < f.size(); ++d) mean[d] += f[d];
    for (double& m : mean) m /= static_cast<double>(feats.size());

    std::vector<std::pair<double, std::size_t>> ranked;  // (distance, pool index)
    for (std::size_t j = 0; j < members.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < mean.size(); ++d) {
        double diff = feats[j][d] - mean[d];
        d2 += diff * diff;
      }
      ranked.emplace_back(d2, members[j]);
    }
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return pool[a.second].source_index < pool[b.second].source_index;
    });
    const std::size_t keep = std::min<std::size_t>(per_class, ranked.size());
    for (std::size_t j = 0; j < keep; ++j) kept.push_back(pool[ranked[j].second]);
  }
  entries_ = std::move(kept);
}

void UnsupervisedBuffer::update(const std::vector<Sample>& new_images, Rng& rng) {
  for (const auto& s : new_images) {
    ++seen_count_;
    if (capacity_ <= 0) continue;
    if (static_cast<int>(entries_.size()) < capacity_) {
      Sample u = s;
      u.label = kUnlabeled;
      entries_.push_back(std::move(u));
    } else {
      // Classic reservoir step: replace slot j with probability capacity/seen.
      auto j = rng.uniform_int(static_cast<std::uint64_t>(seen_count_));
      if (j < static_cast<std::uint64_t>(capacity_)) {
        Sample u = s;
        u.label = kUnlabeled;
        entries_[static_cast<std::size_t>(j)] = std::move(u);
      }
    }
  }
}

}  // namespace ordisco
