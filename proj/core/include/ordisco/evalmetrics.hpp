#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "ordisco/dataset.hpp"
#include "ordisco/nets.hpp"
#include "ordisco/nn.hpp"
#include "ordisco/types.hpp"

namespace ordisco::eval {

using nn::Mat;

struct AccuracyReport {
  double averaged_accuracy = 0.0;
  std::vector<double> per_class_accuracy;  // indexed by class id, -1 where unseen
  std::vector<long long> per_class_count;
};

/// Single-head accuracy on the test samples whose class is in classes_seen;
/// the argmax ranges over the seen classes only (no task labels).
AccuracyReport averaged_accuracy(nn::Network& classifier,
                                 const std::vector<Sample>& test_set,
                                 const std::set<int>& classes_seen);

struct LabelConsistencyReport {
  double fraction = 0.0;
  bool oracle_warning = false;  // oracle accuracy below threshold
  double oracle_accuracy = -1.0;
};

/// Fraction of generated samples whose oracle prediction equals the
/// conditioning label y'.
LabelConsistencyReport conditional_label_consistency(
    nn::Network& generator, const TripleSpec& gen_spec, nn::Network& oracle,
    int k_seen, int n, std::uint64_t seed, double oracle_accuracy = -1.0,
    double oracle_threshold = 0.9);

using FeatureFn = std::function<Mat(const Mat&)>;

struct CoverageReport {
  Mat embedding;            // 2 x (n_ref + n_cand), first two principal components
  double covered_fraction = 0.0;
  std::string source;
  double radius = 0.0;
};

/// covered_fraction = fraction of reference points with at least one
/// candidate within `radius` in feature space. radius <= 0 selects the
/// median nearest-neighbor distance within the reference set.
CoverageReport coverage_report(const Mat& reference_images, const Mat& candidate_images,
                               const FeatureFn& feature_fn, double radius = 0.0,
                               const std::string& source = "");

/// Deterministic PCA projection to `dims` components (rows of the result).
Mat pca_project(const Mat& features, int dims = 2);

/// Contact sheet of conditional samples, one row per label, written as PNG.
void write_sample_sheet(nn::Network& generator, const TripleSpec& spec, int k_seen,
                        int per_class, std::uint64_t seed, const std::string& path);

std::string metrics_csv(const std::vector<MetricsRecord>& records,
                        const std::string& config_hash);

}  // namespace ordisco::eval
