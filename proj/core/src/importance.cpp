#include "ordisco/importance.hpp"

#include <cmath>

#include "ordisco/errors.hpp"

namespace ordisco::reg {

Vec estimate_batch_importance(ModelTriple& model,
                              const std::vector<Mat>& unlabeled_images, int cap) {
  if (unlabeled_images.empty()) {
    throw DataError("estimate_batch_importance: empty unlabeled set");
  }
  const std::size_t use =
      std::min<std::size_t>(unlabeled_images.size(), static_cast<std::size_t>(cap));
  Vec xi = Vec::Zero(static_cast<long>(model.d.param_count()));
  // Chunk size 1 semantics: one backward pass per sample, absolute values of
  // the per-sample gradients averaged.
  for (std::size_t s = 0; s < use; ++s) {
    const Mat& x = unlabeled_images[s];
    Mat logits = model.c.forward(x, false, nullptr);
    long yhat = 0;
    logits.col(0).maxCoeff(&yhat);
    Mat din = condition_d_input(model.spec, x, {static_cast<int>(yhat)});
    Mat d = model.d.forward(din, false, nullptr);
    model.d.zero_grad();
    Mat gy(1, 1);
    gy(0, 0) = 2.0 * d(0, 0);  // d/dD of D^2
    model.d.backward(gy);
    const auto& g = model.d.grad();
    for (std::size_t i = 0; i < g.size(); ++i) xi(static_cast<long>(i)) += std::abs(g[i]);
  }
  model.d.zero_grad();
  xi /= static_cast<double>(use);
  return xi;
}

Vec estimate_batch_importance(ModelTriple& model, const Mat& unlabeled, int cap) {
  std::vector<Mat> cols;
  cols.reserve(static_cast<std::size_t>(unlabeled.cols()));
  for (long j = 0; j < unlabeled.cols(); ++j) cols.push_back(unlabeled.col(j));
  return estimate_batch_importance(model, cols, cap);
}

void update_running_importance(ImportanceVector& state, const Vec& xi_b) {
  if (xi_b.minCoeff() < 0.0) {
    throw NumericalError("update_running_importance: negative importance entry");
  }
  if (state.empty()) {
    state.running = Vec::Zero(xi_b.size());
  } else if (state.running.size() != xi_b.size()) {
    throw NumericalError("update_running_importance: shape mismatch");
  }
  const double b = static_cast<double>(state.batches_seen + 1);
  state.running = ((b - 1.0) * state.running + xi_b) / b;
  state.batches_seen += 1;
  if (state.keep_history) state.history.push_back(xi_b);
}

double consistency_penalty(const std::vector<double>& theta_d,
                           const ParamSnapshot& anchor, const Vec& xi, double lambda) {
  if (lambda < 0.0) throw ConfigError("consistency_penalty: lambda must be >= 0");
  if (lambda == 0.0) return 0.0;
  if (!anchor.valid()) {
    throw ConfigError("consistency_penalty: missing snapshot while lambda > 0");
  }
  if (anchor.theta.size() != theta_d.size() ||
      static_cast<std::size_t>(xi.size()) != theta_d.size()) {
    throw NumericalError("consistency_penalty: shape mismatch");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < theta_d.size(); ++i) {
    const double d = theta_d[i] - anchor.theta[i];
    acc += xi(static_cast<long>(i)) * d * d;
  }
  return lambda * acc;
}

void add_penalty_gradient(const std::vector<double>& theta_d,
                          const ParamSnapshot& anchor, const Vec& xi, double lambda,
                          std::vector<double>& grad) {
  if (lambda == 0.0) return;
  for (std::size_t i = 0; i < theta_d.size(); ++i) {
    grad[i] += 2.0 * lambda * xi(static_cast<long>(i)) * (theta_d[i] - anchor.theta[i]);
  }
}

double regularized_d_loss(double neg_value, double penalty) {
  return neg_value + penalty;
}

}  // namespace ordisco::reg
