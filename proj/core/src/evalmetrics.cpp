#include "ordisco/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ordisco/errors.hpp"
#include "ordisco/pngio.hpp"

namespace ordisco::eval {

AccuracyReport averaged_accuracy(nn::Network& classifier,
                                 const std::vector<Sample>& test_set,
                                 const std::set<int>& classes_seen) {
  std::vector<const Sample*> kept;
  for (const Sample& s : test_set) {
    if (classes_seen.count(s.label)) kept.push_back(&s);
  }
  if (kept.empty()) throw DataError("averaged_accuracy: empty test set");

  const int max_class = *classes_seen.rbegin();
  AccuracyReport report;
  report.per_class_accuracy.assign(static_cast<std::size_t>(max_class) + 1, -1.0);
  report.per_class_count.assign(static_cast<std::size_t>(max_class) + 1, 0);
  std::vector<long long> correct(static_cast<std::size_t>(max_class) + 1, 0);

  const std::size_t dim = kept[0]->image.size();
  constexpr std::size_t kChunk = 256;
  long long total_correct = 0;
  for (std::size_t start = 0; start < kept.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, kept.size() - start);
    Mat x(static_cast<long>(dim), static_cast<long>(n));
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < dim; ++i) {
        x(static_cast<long>(i), static_cast<long>(j)) =
            static_cast<double>(kept[start + j]->image[i]);
      }
    }
    Mat logits = classifier.forward(x, false, nullptr);
    for (std::size_t j = 0; j < n; ++j) {
      // Single-head over the classes seen: argmax restricted to that set.
      int best = -1;
      double best_v = 0.0;
      for (int c : classes_seen) {
        const double v = logits(c, static_cast<long>(j));
        if (best < 0 || v > best_v) {
          best = c;
          best_v = v;
        }
      }
      const int truth = kept[start + j]->label;
      report.per_class_count[static_cast<std::size_t>(truth)] += 1;
      if (best == truth) {
        correct[static_cast<std::size_t>(truth)] += 1;
        ++total_correct;
      }
    }
  }
  report.averaged_accuracy =
      static_cast<double>(total_correct) / static_cast<double>(kept.size());
  for (int c : classes_seen) {
    const auto idx = static_cast<std::size_t>(c);
    if (report.per_class_count[idx] > 0) {
      report.per_class_accuracy[idx] = static_cast<double>(correct[idx]) /
                                       static_cast<double>(report.per_class_count[idx]);
    }
  }
  return report;
}

LabelConsistencyReport conditional_label_consistency(
    nn::Network& generator, const TripleSpec& gen_spec, nn::Network& oracle,
    int k_seen, int n, std::uint64_t seed, double oracle_accuracy,
    double oracle_threshold) {
  Rng rng = Rng::substream(seed, "label_consistency");
  ConditionalSamples samples = sample_conditional(generator, gen_spec, k_seen, n, rng);
  Mat logits = oracle.forward(samples.images, false, nullptr);
  long long hits = 0;
  for (long j = 0; j < logits.cols(); ++j) {
    long pred = 0;
    logits.col(j).maxCoeff(&pred);
    if (static_cast<int>(pred) == samples.labels[static_cast<std::size_t>(j)]) ++hits;
  }
  LabelConsistencyReport report;
  report.fraction = static_cast<double>(hits) / static_cast<double>(n);
  report.oracle_accuracy = oracle_accuracy;
  report.oracle_warning = oracle_accuracy >= 0.0 && oracle_accuracy < oracle_threshold;
  return report;
}

Mat pca_project(const Mat& features, int dims) {
  const long d = features.rows();
  const long n = features.cols();
  Mat centered = features.colwise() - features.rowwise().mean();
  Mat cov = centered * centered.transpose() / std::max<long>(1, n - 1);
  Eigen::SelfAdjointEigenSolver<Mat> es(cov);
  // Eigenvalues ascend; take the trailing `dims` columns, largest first.
  Mat proj(dims, d);
  for (int i = 0; i < dims; ++i) {
    Eigen::VectorXd v = es.eigenvectors().col(d - 1 - i);
    // Deterministic sign: make the largest-magnitude entry positive.
    long arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    proj.row(i) = v.transpose();
  }
  return proj * centered;
}

CoverageReport coverage_report(const Mat& reference_images, const Mat& candidate_images,
                               const FeatureFn& feature_fn, double radius,
                               const std::string& source) {
  if (reference_images.cols() == 0) {
    throw DataError("coverage_report: empty reference set");
  }
  Mat ref = feature_fn(reference_images);
  Mat cand = candidate_images.cols() > 0 ? feature_fn(candidate_images)
                                         : Mat(ref.rows(), 0);

  if (radius <= 0.0) {
    // Median nearest-neighbor distance within the reference set.
    std::vector<double> nn_dist;
    for (long i = 0; i < ref.cols(); ++i) {
      double best = -1.0;
      for (long j = 0; j < ref.cols(); ++j) {
        if (i == j) continue;
        const double d = (ref.col(i) - ref.col(j)).norm();
        if (best < 0 || d < best) best = d;
      }
      if (best >= 0) nn_dist.push_back(best);
    }
    if (nn_dist.empty()) {
      radius = 0.0;
    } else {
      std::sort(nn_dist.begin(), nn_dist.end());
      radius = nn_dist[nn_dist.size() / 2];
    }
  }

  long long covered = 0;
  for (long i = 0; i < ref.cols(); ++i) {
    for (long j = 0; j < cand.cols(); ++j) {
      if ((ref.col(i) - cand.col(j)).norm() <= radius) {
        ++covered;
        break;
      }
    }
  }

  CoverageReport report;
  report.radius = radius;
  report.source = source;
  report.covered_fraction =
      static_cast<double>(covered) / static_cast<double>(ref.cols());
  Mat pooled(ref.rows(), ref.cols() + cand.cols());
  pooled.leftCols(ref.cols()) = ref;
  if (cand.cols() > 0) pooled.rightCols(cand.cols()) = cand;
  report.embedding = pca_project(pooled, 2);
  return report;
}

void write_sample_sheet(nn::Network& generator, const TripleSpec& spec, int k_seen,
                        int per_class, std::uint64_t seed, const std::string& path) {
  Rng rng = Rng::substream(seed, "sample_sheet");
  const int h = spec.image.h, w = spec.image.w, c = spec.image.c;
  std::vector<std::uint8_t> sheet(
      static_cast<std::size_t>(k_seen) * h * per_class * w * c, 0);
  for (int row = 0; row < k_seen; ++row) {
    Mat z(spec.z_dim, per_class);
    std::vector<int> labels(static_cast<std::size_t>(per_class), row);
    for (int j = 0; j < per_class; ++j)
      for (int i = 0; i < spec.z_dim; ++i) z(i, j) = rng.normal();
    Mat imgs = generator.forward(condition_g_input(spec, z, labels), false, nullptr);
    for (int j = 0; j < per_class; ++j) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          for (int ch = 0; ch < c; ++ch) {
            // Network layout is CHW; the sheet is HWC.
            const double v = imgs(static_cast<long>(ch) * h * w + y * w + x, j);
            const std::size_t py = static_cast<std::size_t>(row) * h + y;
            const std::size_t px = static_cast<std::size_t>(j) * w + x;
            sheet[(py * static_cast<std::size_t>(per_class) * w + px) * c + ch] =
                static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
          }
        }
      }
    }
  }
  write_png(path, sheet, per_class * w, k_seen * h, c);
}

std::string metrics_csv(const std::vector<MetricsRecord>& records,
                        const std::string& config_hash) {
  std::ostringstream os;
  os << "# config_hash=" << config_hash << "\n";
  std::size_t max_classes = 0;
  for (const auto& r : records)
    max_classes = std::max(max_classes, r.per_class_accuracy.size());
  os << "method,seed,batch_index,averaged_accuracy";
  for (std::size_t c = 0; c < max_classes; ++c) os << ",acc_class_" << c;
  os << ",wall_time_s\n";
  os.precision(10);
  for (const auto& r : records) {
    os << r.method << ',' << r.seed << ',' << r.batch_or_task_index << ','
       << r.averaged_accuracy;
    for (std::size_t c = 0; c < max_classes; ++c) {
      os << ',';
      if (c < r.per_class_accuracy.size()) os << r.per_class_accuracy[c];
    }
    os << ',' << r.wall_time_s << '\n';
  }
  return os.str();
}

}  // namespace ordisco::eval
