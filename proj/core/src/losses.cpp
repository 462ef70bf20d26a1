#include "ordisco/losses.hpp"

#include <cmath>

#include "ordisco/errors.hpp"

namespace ordisco::losses {

bool LossBreakdown::finite() const {
  for (double v : {sl, ul, d_real, d_fake_gen, d_fake_cls, g, replay_sl, replay_ul,
                   penalty}) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Mat one_hot(const std::vector<int>& labels, int num_classes) {
  Mat y = Mat::Zero(num_classes, static_cast<long>(labels.size()));
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j] < 0 || labels[j] >= num_classes) {
      throw DataError("one_hot: label " + std::to_string(labels[j]) +
                      " out of range for K=" + std::to_string(num_classes));
    }
    y(labels[j], static_cast<long>(j)) = 1.0;
  }
  return y;
}

ValueGrad supervised_ce(const Mat& logits, const Mat& one_hot_labels) {
  if (logits.rows() != one_hot_labels.rows() || logits.cols() != one_hot_labels.cols()) {
    throw NumericalError("supervised_ce: shape mismatch");
  }
  const long n = logits.cols();
  ValueGrad out;
  if (n == 0) {
    out.grad = Mat::Zero(logits.rows(), 0);
    return out;
  }
  Mat p = nn::softmax(logits);
  double loss = 0.0;
  for (long j = 0; j < n; ++j) {
    for (long i = 0; i < logits.rows(); ++i) {
      if (one_hot_labels(i, j) > 0.0) {
        loss -= one_hot_labels(i, j) * std::log(std::max(p(i, j), 1e-300));
      }
    }
  }
  out.value = loss / static_cast<double>(n);
  out.grad = (p - one_hot_labels) / static_cast<double>(n);
  return out;
}

ValueGrad mt_consistency(const Mat& probs_student, const Mat& probs_teacher) {
  if (probs_student.rows() != probs_teacher.rows() ||
      probs_student.cols() != probs_teacher.cols()) {
    throw NumericalError("mt_consistency: shape mismatch");
  }
  const long n = probs_student.cols();
  ValueGrad out;
  if (n == 0) {
    out.grad = Mat::Zero(probs_student.rows(), 0);
    return out;
  }
  Mat diff = probs_student - probs_teacher;
  out.value = diff.squaredNorm() / static_cast<double>(n);
  out.grad = 2.0 * diff / static_cast<double>(n);
  return out;
}

double classifier_pl_loss(double sl, double ul) { return sl + ul; }

DiscriminatorValue discriminator_pl_value(const Vec& d_real, const Vec& d_gen,
                                          const Vec& d_cls, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) {
    throw ConfigError("discriminator_pl_value: alpha must be in [0,1]");
  }
  DiscriminatorValue out;
  auto mean_log = [](const Vec& d, bool one_minus, Vec& grad, double coeff) {
    grad = Vec::Zero(d.size());
    if (d.size() == 0 || coeff == 0.0) return 0.0;
    double acc = 0.0;
    for (long i = 0; i < d.size(); ++i) {
      const double v = one_minus ? 1.0 - d(i) : d(i);
      acc += std::log(v);
      grad(i) = coeff * (one_minus ? -1.0 : 1.0) / (v * static_cast<double>(d.size()));
    }
    return coeff * acc / static_cast<double>(d.size());
  };
  out.term_real = mean_log(d_real, false, out.g_real, 1.0);
  out.term_gen = mean_log(d_gen, true, out.g_gen, alpha);
  out.term_cls = mean_log(d_cls, true, out.g_cls, 1.0 - alpha);
  out.value = out.term_real + out.term_gen + out.term_cls;
  return out;
}

ValueGrad generator_loss(const Vec& d_gen, bool literal_form) {
  ValueGrad out;
  const long n = d_gen.size();
  out.grad = Mat::Zero(n, 1);
  if (n == 0) return out;
  double acc = 0.0;
  for (long i = 0; i < n; ++i) {
    if (literal_form) {
      acc += -std::log(1.0 - d_gen(i));
      out.grad(i, 0) = 1.0 / ((1.0 - d_gen(i)) * static_cast<double>(n));
    } else {
      acc += -std::log(d_gen(i));
      out.grad(i, 0) = -1.0 / (d_gen(i) * static_cast<double>(n));
    }
  }
  out.value = acc / static_cast<double>(n);
  return out;
}

ReplayLoss replay_loss(const Mat& student_logits, const Mat& teacher_probs,
                       const std::vector<int>& cond_labels, int num_classes) {
  ReplayLoss out;
  ValueGrad ce = supervised_ce(student_logits, one_hot(cond_labels, num_classes));
  Mat student_probs = nn::softmax(student_logits);
  ValueGrad cons = mt_consistency(student_probs, teacher_probs);
  out.sl = ce.value;
  out.ul = cons.value;
  out.grad_logits = ce.grad + nn::softmax_vjp(student_probs, cons.grad);
  return out;
}

double classifier_total_loss(double pl, double replay) { return pl + replay; }

}  // namespace ordisco::losses
