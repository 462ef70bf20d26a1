#pragma once

#include <vector>

#include "ordisco/nn.hpp"

namespace ordisco::losses {

using nn::Mat;
using nn::Vec;

/// Per-step objective values, for logging and NaN diagnostics.
struct LossBreakdown {
  double sl = 0.0;          // supervised cross entropy
  double ul = 0.0;          // mean-teacher consistency
  double d_real = 0.0;      // E[log D(x,y)]
  double d_fake_gen = 0.0;  // alpha * E[log(1-D(G,y'))]
  double d_fake_cls = 0.0;  // (1-alpha) * E[log(1-D(x,C(x)))]
  double g = 0.0;
  double replay_sl = 0.0;
  double replay_ul = 0.0;
  double penalty = 0.0;
  bool finite() const;
};

struct ValueGrad {
  double value = 0.0;
  Mat grad;  // wrt the first argument
};

/// Mean over the batch of -y . log softmax(logits); labels as one-hot columns.
/// Gradient is wrt the logits.
ValueGrad supervised_ce(const Mat& logits, const Mat& one_hot_labels);

Mat one_hot(const std::vector<int>& labels, int num_classes);

/// Mean over the batch of ||p_student - p_teacher||^2 over class-probability
/// columns. Gradient is wrt p_student.
ValueGrad mt_consistency(const Mat& probs_student, const Mat& probs_teacher);

/// L_{C,pl} = L_sl + L_ul.
double classifier_pl_loss(double sl, double ul);

struct DiscriminatorValue {
  double value = 0.0;  // V, to be maximized (descend -V)
  double term_real = 0.0, term_gen = 0.0, term_cls = 0.0;
  Vec g_real, g_gen, g_cls;  // dV/d(D outputs), per stream
};

/// V = E[log D(x,y)] + alpha E[log(1-D(G(z,y'),y'))] + (1-alpha) E[log(1-D(x,yhat))].
/// Empty streams contribute zero.
DiscriminatorValue discriminator_pl_value(const Vec& d_real, const Vec& d_gen,
                                          const Vec& d_cls, double alpha);

/// Non-saturating generator loss, mean of -log D(G(z,y'),y'). The literal
/// printed form mean of -log(1-D) is available behind `literal_form` for
/// comparison.
ValueGrad generator_loss(const Vec& d_gen, bool literal_form = false);

/// L_{G->C}: cross entropy of C on (G(z,y'), y') plus mean-teacher
/// consistency on the same samples. Returns the two sub-terms and the
/// gradient wrt the classifier logits (teacher probs held fixed).
struct ReplayLoss {
  double sl = 0.0;
  double ul = 0.0;
  double total() const { return sl + ul; }
  Mat grad_logits;
};

ReplayLoss replay_loss(const Mat& student_logits, const Mat& teacher_probs,
                       const std::vector<int>& cond_labels, int num_classes);

/// L_C = L_{C,pl} + L_{G->C}.
double classifier_total_loss(double pl, double replay);

}  // namespace ordisco::losses
