#pragma once

#include <optional>
#include <vector>

#include "ordisco/nets.hpp"
#include "ordisco/nn.hpp"

namespace ordisco::reg {

using nn::Mat;
using nn::Vec;

/// Running per-parameter importance for the discriminator-consistency
/// regularizer: xi_{1:b} = ((b-1)*xi_{1:b-1} + xi_b)/b. History retention is
/// test mode only.
struct ImportanceVector {
  Vec running;       // aligned with theta_D, all entries >= 0
  int batches_seen = 0;
  bool keep_history = false;
  std::vector<Vec> history;

  bool empty() const { return running.size() == 0; }
};

/// xi_b: per parameter, the mean over unlabeled samples of
/// |d ||D(x, yhat(x))||^2 / d theta_i| with yhat(x) = argmax C(x).
/// Per-sample semantics (chunk size 1); `cap` bounds the subsample used.
Vec estimate_batch_importance(ModelTriple& model, const std::vector<Mat>& unlabeled_images,
                              int cap = 1024);

/// Convenience overload: columns of `unlabeled` are samples.
Vec estimate_batch_importance(ModelTriple& model, const Mat& unlabeled, int cap = 1024);

void update_running_importance(ImportanceVector& state, const Vec& xi_b);

/// lambda * sum_i xi_i (theta_i - theta*_i)^2.
double consistency_penalty(const std::vector<double>& theta_d,
                           const ParamSnapshot& anchor, const Vec& xi, double lambda);

/// Gradient of the penalty wrt theta_D, added into `grad`.
void add_penalty_gradient(const std::vector<double>& theta_d,
                          const ParamSnapshot& anchor, const Vec& xi, double lambda,
                          std::vector<double>& grad);

/// L_D = -V + penalty (descending it maximizes V while penalizing drift).
double regularized_d_loss(double neg_value, double penalty);

}  // namespace ordisco::reg
