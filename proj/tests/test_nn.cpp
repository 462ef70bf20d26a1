#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>
#include <memory>
#include <sstream>

#include "ordisco/errors.hpp"
#include "ordisco/nn.hpp"

using namespace ordisco;
using nn::Mat;
using nn::Vec;

namespace {

// Relative error of analytic network gradients against central differences of
// the scalar loss sum(W .* f(x)) for a fixed random weighting W.
double fd_max_rel_error(nn::Network& net, const Mat& x, double h = 1e-4) {
  Rng rng(99);
  Mat y0 = net.forward(x, false, nullptr);
  Mat weights(y0.rows(), y0.cols());
  for (long j = 0; j < weights.cols(); ++j)
    for (long i = 0; i < weights.rows(); ++i) weights(i, j) = rng.normal();

  net.zero_grad();
  net.backward(weights);
  const auto analytic = net.grad();

  auto loss = [&]() { return net.forward(x, false, nullptr).cwiseProduct(weights).sum(); };
  double max_rel = 0.0;
  auto& theta = net.theta();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + h;
    const double lp = loss();
    theta[i] = orig - h;
    const double lm = loss();
    theta[i] = orig;
    const double fd = (lp - lm) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
    max_rel = std::max(max_rel, std::abs(fd - analytic[i]) / denom);
  }
  return max_rel;
}

Mat random_input(long rows, long cols, std::uint64_t seed) {
  Rng rng(seed);
  Mat x(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i) x(i, j) = rng.normal();
  return x;
}

}  // namespace

TEST_CASE("dense gradient matches finite differences") {
  Rng init(1);
  nn::Network net;
  net.add(std::make_unique<nn::Dense>(5, 4));
  net.add(std::make_unique<nn::ReLU>());
  net.add(std::make_unique<nn::Dense>(4, 3));
  net.finalize(init);
  CHECK(fd_max_rel_error(net, random_input(5, 6, 2)) < 1e-6);
}

TEST_CASE("spectral-norm dense gradient matches finite differences in eval mode") {
  Rng init(2);
  nn::Network net;
  net.add(std::make_unique<nn::Dense>(4, 3, true));
  net.finalize(init);
  CHECK(fd_max_rel_error(net, random_input(4, 5, 3)) < 1e-6);
}

TEST_CASE("conv gradient matches finite differences") {
  Rng init(3);
  nn::Network net;
  net.add(std::make_unique<nn::Conv2d>(nn::ConvGeom{{2, 5, 5}, 3, 3, 1, 1}));
  net.add(std::make_unique<nn::LeakyReLU>(0.2));
  net.add(std::make_unique<nn::Conv2d>(nn::ConvGeom{{3, 5, 5}, 2, 4, 2, 1}));
  net.finalize(init);
  CHECK(fd_max_rel_error(net, random_input(2 * 5 * 5, 3, 4)) < 1e-6);
}

TEST_CASE("strided spectral-norm conv gradient matches finite differences") {
  Rng init(4);
  nn::Network net;
  net.add(std::make_unique<nn::Conv2d>(nn::ConvGeom{{1, 6, 6}, 2, 4, 2, 1}, true));
  net.finalize(init);
  CHECK(fd_max_rel_error(net, random_input(36, 2, 5)) < 1e-6);
}

TEST_CASE("transposed conv gradient matches finite differences") {
  Rng init(5);
  nn::Network net;
  net.add(std::make_unique<nn::ConvTranspose2d>(nn::TensorShape{2, 3, 3}, 3, 4, 2, 1));
  net.add(std::make_unique<nn::Sigmoid>());
  net.finalize(init);
  // The sigmoid head amplifies the finite-difference truncation error a bit,
  // so this check runs at a slightly looser tolerance than the linear layers.
  CHECK(fd_max_rel_error(net, random_input(2 * 3 * 3, 2, 6)) < 1e-5);
}

TEST_CASE("transposed conv inverts the conv geometry") {
  // stride 2, k 4, pad 1 doubles spatial dims.
  nn::ConvTranspose2d up(nn::TensorShape{2, 4, 4}, 1, 4, 2, 1);
  CHECK(up.out_shape({2, 4, 4}) == nn::TensorShape{1, 8, 8});
}

TEST_CASE("input gradients match finite differences too") {
  Rng init(6);
  nn::Network net;
  net.add(std::make_unique<nn::Dense>(4, 4));
  net.add(std::make_unique<nn::Sigmoid>());
  net.add(std::make_unique<nn::Dense>(4, 2));
  net.finalize(init);

  Mat x = random_input(4, 3, 7);
  Mat y0 = net.forward(x, false, nullptr);
  Mat weights = random_input(y0.rows(), y0.cols(), 8);
  net.zero_grad();
  Mat gx = net.backward(weights);

  const double h = 1e-5;
  for (long j = 0; j < x.cols(); ++j) {
    for (long i = 0; i < x.rows(); ++i) {
      Mat xp = x, xm = x;
      xp(i, j) += h;
      xm(i, j) -= h;
      const double fd = (net.forward(xp, false, nullptr).cwiseProduct(weights).sum() -
                         net.forward(xm, false, nullptr).cwiseProduct(weights).sum()) /
                        (2.0 * h);
      CHECK(gx(i, j) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("spectral norm estimate converges to the top singular value") {
  Rng init(7);
  nn::Network net;
  net.add(std::make_unique<nn::Dense>(6, 5, true));
  net.finalize(init);
  auto& dense = dynamic_cast<nn::Dense&>(net.layer(0));
  dense.power_iterate(100);
  Eigen::Map<Mat> w(net.theta().data(), 5, 6);
  Eigen::JacobiSVD<Mat> svd(w);
  const double sigma_true = svd.singularValues()(0);
  CHECK(dense.sigma_estimate() ==
        doctest::Approx(sigma_true).epsilon(0.05));  // 5% oracle tolerance
  // One power-iteration step per training forward keeps tracking:
  CHECK(dense.sigma_estimate() <= sigma_true + 1e-9);
}

TEST_CASE("spectral-norm conv sigma matches the SVD of the unrolled weight") {
  Rng init(8);
  nn::Network net;
  net.add(std::make_unique<nn::Conv2d>(nn::ConvGeom{{2, 4, 4}, 3, 3, 1, 1}, true));
  net.finalize(init);
  auto& conv = dynamic_cast<nn::Conv2d&>(net.layer(0));
  conv.power_iterate(200);
  Eigen::Map<Mat> w(net.theta().data(), 3, 2 * 3 * 3);
  Eigen::JacobiSVD<Mat> svd(w);
  CHECK(conv.sigma_estimate() == doctest::Approx(svd.singularValues()(0)).epsilon(0.05));
}

TEST_CASE("spectral-norm forward divides by sigma") {
  Rng init(9);
  nn::Network net;
  net.add(std::make_unique<nn::Dense>(4, 4, true));
  net.finalize(init);
  auto& dense = dynamic_cast<nn::Dense&>(net.layer(0));
  dense.power_iterate(100);
  Mat x = random_input(4, 3, 10);
  Mat y = net.forward(x, false, nullptr);
  // After normalization the layer's top singular value is ~1, so outputs are
  // bounded by ||x|| (plus zero bias).
  Eigen::Map<Mat> w(net.theta().data(), 4, 4);
  Mat expected = (w / dense.sigma_estimate()) * x;
  CHECK((y - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sigmoid clamps outputs away from 0 and 1") {
  nn::Sigmoid sig(1e-6);
  Mat x(1, 2);
  x << -100.0, 100.0;
  Mat y = sig.forward(x, false, nullptr);
  CHECK(y(0, 0) == doctest::Approx(1e-6));
  CHECK(y(0, 1) == doctest::Approx(1.0 - 1e-6));
}

TEST_CASE("dropout is inverted-scaled and off at eval") {
  nn::Dropout drop(0.5);
  Mat x = Mat::Ones(1000, 1);
  Rng rng(11);
  Mat y = drop.forward(x, true, &rng);
  int zeros = 0;
  for (long i = 0; i < y.rows(); ++i) {
    if (y(i, 0) == 0.0) {
      ++zeros;
    } else {
      CHECK(y(i, 0) == doctest::Approx(2.0));
    }
  }
  CHECK(zeros > 400);
  CHECK(zeros < 600);
  Mat ye = drop.forward(x, false, nullptr);
  CHECK(ye == x);
}

TEST_CASE("dropout without an rng in train mode is an error") {
  nn::Dropout drop(0.5);
  Mat x = Mat::Ones(4, 1);
  CHECK_THROWS_AS(drop.forward(x, true, nullptr), NumericalError);
}

TEST_CASE("softmax columns are distributions and shift-invariant") {
  Mat logits = random_input(5, 4, 12);
  Mat p = nn::softmax(logits);
  for (long j = 0; j < p.cols(); ++j) {
    CHECK(p.col(j).sum() == doctest::Approx(1.0));
    for (long i = 0; i < p.rows(); ++i) CHECK(p(i, j) > 0.0);
  }
  Mat shifted = logits;
  shifted.array() += 100.0;
  CHECK((nn::softmax(shifted) - p).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("softmax_vjp matches finite differences") {
  Mat logits = random_input(4, 3, 13);
  Mat g = random_input(4, 3, 14);
  Mat p = nn::softmax(logits);
  Mat analytic = nn::softmax_vjp(p, g);
  const double h = 1e-6;
  for (long j = 0; j < logits.cols(); ++j) {
    for (long i = 0; i < logits.rows(); ++i) {
      Mat lp = logits, lm = logits;
      lp(i, j) += h;
      lm(i, j) -= h;
      const double fd =
          (nn::softmax(lp).cwiseProduct(g).sum() - nn::softmax(lm).cwiseProduct(g).sum()) /
          (2.0 * h);
      CHECK(analytic(i, j) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("adam first step moves each parameter by about lr") {
  nn::Adam opt(3, 0.1);
  std::vector<double> theta{1.0, -2.0, 0.5};
  // Bias-corrected first step: theta -= lr * g/|g| (approximately).
  opt.step(theta, {0.3, -0.7, 0.001});
  CHECK(theta[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-4));
  CHECK(theta[1] == doctest::Approx(-2.0 + 0.1).epsilon(1e-4));
  CHECK(theta[2] < 0.5);  // moves in the negative-gradient direction
}

TEST_CASE("adam state save/load resumes identically") {
  nn::Adam a(4, 0.01), b(4, 0.01);
  std::vector<double> ta{1, 2, 3, 4}, tb{1, 2, 3, 4};
  std::vector<double> g{0.1, -0.2, 0.3, -0.4};
  for (int i = 0; i < 5; ++i) a.step(ta, g);

  std::ostringstream os;
  a.save(os);
  for (int i = 0; i < 5; ++i) b.step(tb, g);  // advance b's internal t too
  std::istringstream is(os.str());
  b.load(is);
  tb = ta;
  a.step(ta, g);
  b.step(tb, g);
  for (int i = 0; i < 4; ++i) CHECK(ta[i] == tb[i]);
}

TEST_CASE("network aux round-trips spectral-norm vectors") {
  Rng init(15);
  nn::Network net;
  net.add(std::make_unique<nn::Dense>(4, 3, true));
  net.finalize(init);
  Mat x = random_input(4, 2, 16);
  net.forward(x, true, nullptr);  // advance the power iteration
  std::ostringstream os;
  net.save_aux(os);

  nn::Network other;
  Rng init2(17);
  other.add(std::make_unique<nn::Dense>(4, 3, true));
  other.finalize(init2);
  other.theta() = net.theta();
  std::istringstream is(os.str());
  other.load_aux(is);
  Mat ya = net.forward(x, false, nullptr);
  Mat yb = other.forward(x, false, nullptr);
  CHECK((ya - yb).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("features returns penultimate activations") {
  Rng init(18);
  nn::Network net;
  net.add(std::make_unique<nn::Dense>(3, 5));
  net.add(std::make_unique<nn::ReLU>());
  net.add(std::make_unique<nn::Dense>(5, 2));
  net.finalize(init);
  Mat x = random_input(3, 2, 19);
  Mat f = net.features(x);
  CHECK(f.rows() == 5);  // activations before the final dense layer
  CHECK(f.cols() == 2);
}
