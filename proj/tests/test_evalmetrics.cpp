#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "ordisco/errors.hpp"
#include "ordisco/evalmetrics.hpp"
#include "ordisco/losses.hpp"

using namespace ordisco;
using nn::Mat;

namespace {

// Classifier that thresholds the first pixel into 3 classes (deterministic
// oracle for accuracy accounting).
nn::Network pixel_classifier() {
  Rng rng(1);
  nn::Network net;
  net.add(std::make_unique<nn::Dense>(4, 3));
  net.finalize(rng);
  auto& theta = net.theta();
  std::fill(theta.begin(), theta.end(), 0.0);
  // logits = [-x0, 0, x0 - 1] scaled: class 0 wins for x0<0.?, etc.
  // w is 3x4 column-major: w(i,j) at theta[j*3+i].
  theta[0] = -10.0;  // w(0,0)
  theta[2] = 10.0;   // w(2,0)
  theta[4 * 3 + 2] = -5.0;  // bias of class 2
  return net;
}

Sample make_sample(float x0, int label) {
  Sample s;
  s.image = {x0, 0.0f, 0.0f, 0.0f};
  s.label = label;
  return s;
}

}  // namespace

TEST_CASE("averaged accuracy is the count-weighted mean of per-class accuracy") {
  nn::Network net = pixel_classifier();
  std::vector<Sample> test;
  // class 0: x0 small -> logits favor class 0. 3 correct, 1 wrong.
  test.push_back(make_sample(0.0f, 0));
  test.push_back(make_sample(0.01f, 0));
  test.push_back(make_sample(0.02f, 0));
  test.push_back(make_sample(0.9f, 0));
  // class 2: x0 large. 2 correct.
  test.push_back(make_sample(0.9f, 2));
  test.push_back(make_sample(0.95f, 2));

  auto report = eval::averaged_accuracy(net, test, {0, 2});
  CHECK(report.averaged_accuracy == doctest::Approx(5.0 / 6.0));
  CHECK(report.per_class_accuracy[0] == doctest::Approx(0.75));
  CHECK(report.per_class_accuracy[2] == doctest::Approx(1.0));
  CHECK(report.per_class_accuracy[1] == -1.0);  // unseen
  // Weighted-mean identity.
  double weighted = 0.0;
  long long total = 0;
  for (int c : {0, 2}) {
    weighted += report.per_class_accuracy[c] * report.per_class_count[c];
    total += report.per_class_count[c];
  }
  CHECK(report.averaged_accuracy == doctest::Approx(weighted / total));
}

TEST_CASE("argmax is restricted to the seen classes") {
  nn::Network net = pixel_classifier();
  // x0 = 0.9 strongly favors class 2; with only {0,1} seen, class 1 (zero
  // logit) beats class 0 (-9).
  std::vector<Sample> test{make_sample(0.9f, 1)};
  auto report = eval::averaged_accuracy(net, test, {0, 1});
  CHECK(report.averaged_accuracy == doctest::Approx(1.0));
}

TEST_CASE("samples from unseen classes are excluded") {
  nn::Network net = pixel_classifier();
  std::vector<Sample> test{make_sample(0.0f, 0), make_sample(0.5f, 1)};
  auto report = eval::averaged_accuracy(net, test, {0});
  CHECK(report.per_class_count[0] == 1);
  CHECK(report.averaged_accuracy == doctest::Approx(1.0));
}

TEST_CASE("empty effective test set is a data error") {
  nn::Network net = pixel_classifier();
  std::vector<Sample> test{make_sample(0.0f, 1)};
  CHECK_THROWS_AS(eval::averaged_accuracy(net, test, {0}), DataError);
}

TEST_CASE("pca projection is deterministic and orthogonal") {
  Rng rng(2);
  Mat x(5, 40);
  for (long j = 0; j < x.cols(); ++j)
    for (long i = 0; i < x.rows(); ++i) x(i, j) = rng.normal();
  Mat a = eval::pca_project(x, 2);
  Mat b = eval::pca_project(x, 2);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 40);
  // Components are uncorrelated.
  Mat centered = a.colwise() - a.rowwise().mean();
  const double cross = (centered.row(0) * centered.row(1).transpose())(0, 0);
  CHECK(std::abs(cross) / a.cols() < 1e-8);
}

TEST_CASE("coverage matches a brute-force oracle on identity features") {
  auto identity = [](const Mat& m) { return m; };
  Mat ref(1, 4);
  ref << 0.0, 1.0, 2.0, 10.0;
  Mat cand(1, 2);
  cand << 0.4, 2.2;
  auto report = eval::coverage_report(ref, cand, identity, 0.5, "test");
  // Covered: 0.0 (|0-0.4|=0.4) and 2.0 (|2-2.2|=0.2); 1.0 and 10.0 are not.
  CHECK(report.covered_fraction == doctest::Approx(0.5));
  CHECK(report.radius == 0.5);
  CHECK(report.source == "test");
  CHECK(report.embedding.cols() == 6);
}

TEST_CASE("coverage is monotone in the candidate set") {
  auto identity = [](const Mat& m) { return m; };
  Rng rng(3);
  Mat ref(2, 20);
  for (long j = 0; j < 20; ++j)
    for (long i = 0; i < 2; ++i) ref(i, j) = rng.normal();
  Mat cand_small(2, 3), cand_big(2, 10);
  for (long j = 0; j < 10; ++j)
    for (long i = 0; i < 2; ++i) cand_big(i, j) = rng.normal();
  cand_small = cand_big.leftCols(3);
  const double r = 0.7;
  const double small = eval::coverage_report(ref, cand_small, identity, r).covered_fraction;
  const double big = eval::coverage_report(ref, cand_big, identity, r).covered_fraction;
  CHECK(big >= small);
}

TEST_CASE("default radius is the median reference NN distance") {
  auto identity = [](const Mat& m) { return m; };
  Mat ref(1, 4);
  ref << 0.0, 1.0, 3.0, 6.0;  // NN distances: 1,1,2,3 -> median (upper) = 2
  auto report = eval::coverage_report(ref, Mat(1, 0), identity);
  CHECK(report.radius == doctest::Approx(2.0));
  CHECK(report.covered_fraction == 0.0);
}

TEST_CASE("empty reference set is a data error") {
  auto identity = [](const Mat& m) { return m; };
  CHECK_THROWS_AS(eval::coverage_report(Mat(1, 0), Mat(1, 0), identity), DataError);
}

TEST_CASE("metrics csv carries the config hash and per-class columns") {
  MetricsRecord rec;
  rec.batch_or_task_index = 3;
  rec.averaged_accuracy = 0.5;
  rec.per_class_accuracy = {1.0, 0.0};
  rec.wall_time_s = 0.25;
  rec.method = "smb";
  rec.seed = 7;
  const std::string csv = eval::metrics_csv({rec}, "deadbeef");
  CHECK(csv.find("# config_hash=deadbeef") == 0);
  CHECK(csv.find("acc_class_1") != std::string::npos);
  CHECK(csv.find("smb,7,3,0.5") != std::string::npos);
}

TEST_CASE("sample sheet writes a PNG grid") {
  namespace fs = std::filesystem;
  TripleSpec spec;
  spec.image = {8, 8, 1};
  spec.num_classes = 3;
  spec.z_dim = 2;
  spec.gan_width = 4;
  Rng rng(4);
  nn::Network g = build_generator(spec, rng);
  const std::string path = (fs::temp_directory_path() / "ordisco_sheet.png").string();
  eval::write_sample_sheet(g, spec, 3, 4, 1, path);
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  unsigned char magic[8];
  is.read(reinterpret_cast<char*>(magic), 8);
  CHECK(magic[0] == 0x89);
  CHECK(magic[1] == 'P');
  CHECK(magic[2] == 'N');
  CHECK(magic[3] == 'G');
  fs::remove(path);
}

TEST_CASE("label consistency on a fixed generator and oracle") {
  // Oracle always predicts class 0; generator labels are uniform over k_seen,
  // so consistency ~ 1/k_seen.
  TripleSpec spec;
  spec.image = {4, 4, 1};
  spec.num_classes = 4;
  spec.z_dim = 2;
  spec.gan_arch = "mlp";
  spec.gan_width = 2;
  Rng rng(5);
  nn::Network g = build_generator(spec, rng);

  nn::Network oracle;
  Rng orng(6);
  oracle.add(std::make_unique<nn::Dense>(16, 4));
  oracle.finalize(orng);
  std::fill(oracle.theta().begin(), oracle.theta().end(), 0.0);
  oracle.theta()[16 * 4] = 1.0;  // bias of class 0

  auto report = eval::conditional_label_consistency(g, spec, oracle, 4, 2000, 1);
  CHECK(report.fraction == doctest::Approx(0.25).epsilon(0.15));
  CHECK(!report.oracle_warning);  // no oracle accuracy supplied
  auto flagged = eval::conditional_label_consistency(g, spec, oracle, 4, 100, 1, 0.5);
  CHECK(flagged.oracle_warning);
  CHECK(flagged.oracle_accuracy == 0.5);
}
