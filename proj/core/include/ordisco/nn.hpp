#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iostream>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ordisco/rng.hpp"
#include "ordisco/types.hpp"

namespace ordisco::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Feature-map geometry in CHW order; a Mat column holds one flattened example.
struct TensorShape {
  int c = 0;
  int h = 0;
  int w = 0;
  int size() const { return c * h * w; }
  bool operator==(const TensorShape&) const = default;
};

/// One differentiable stage. Parameters live in the owning Network's flat
/// theta/grad arrays; bind() attaches the layer's views into them.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Mat forward(const Mat& x, bool train, Rng* rng) = 0;
  virtual Mat backward(const Mat& gy) = 0;  // accumulates parameter grads
  virtual int param_count() const { return 0; }
  virtual void bind(double* /*theta*/, double* /*grad*/) {}
  virtual void init(Rng& /*rng*/) {}
  virtual TensorShape out_shape(const TensorShape& in) const { return in; }
  // Non-parameter persistent state (spectral-norm power-iteration vectors).
  virtual void save_aux(std::ostream& /*os*/) const {}
  virtual void load_aux(std::istream& /*is*/) {}
};

class Dense : public Layer {
 public:
  Dense(int in, int out, bool spectral_norm = false);
  Mat forward(const Mat& x, bool train, Rng* rng) override;
  Mat backward(const Mat& gy) override;
  int param_count() const override { return in_ * out_ + out_; }
  void bind(double* theta, double* grad) override;
  void init(Rng& rng) override;
  TensorShape out_shape(const TensorShape&) const override { return {out_, 1, 1}; }
  void save_aux(std::ostream& os) const override;
  void load_aux(std::istream& is) override;

  /// Spectral-norm estimate of the top singular value for the current weights.
  double sigma_estimate() const;
  void power_iterate(int steps);

 private:
  Mat effective_weight() const;
  int in_, out_;
  bool sn_;
  Eigen::Map<Mat> w_{nullptr, 0, 0};
  Eigen::Map<Vec> b_{nullptr, 0};
  Eigen::Map<Mat> gw_{nullptr, 0, 0};
  Eigen::Map<Vec> gb_{nullptr, 0};
  Vec u_, v_;  // persistent power-iteration vectors
  Mat x_cache_;
  double sigma_cache_ = 1.0;
};

struct ConvGeom {
  TensorShape in;
  int out_c = 0;
  int k = 3;
  int stride = 1;
  int pad = 1;
  TensorShape out() const {
    return {out_c, (in.h + 2 * pad - k) / stride + 1, (in.w + 2 * pad - k) / stride + 1};
  }
};

class Conv2d : public Layer {
 public:
  Conv2d(ConvGeom geom, bool spectral_norm = false);
  Mat forward(const Mat& x, bool train, Rng* rng) override;
  Mat backward(const Mat& gy) override;
  int param_count() const override;
  void bind(double* theta, double* grad) override;
  void init(Rng& rng) override;
  TensorShape out_shape(const TensorShape&) const override { return geom_.out(); }
  void save_aux(std::ostream& os) const override;
  void load_aux(std::istream& is) override;

  double sigma_estimate() const;
  void power_iterate(int steps);

 private:
  Mat effective_weight() const;
  ConvGeom geom_;
  bool sn_;
  int rows_, cols_;  // weight viewed as (out_c) x (in_c*k*k)
  Eigen::Map<Mat> w_{nullptr, 0, 0};
  Eigen::Map<Vec> b_{nullptr, 0};
  Eigen::Map<Mat> gw_{nullptr, 0, 0};
  Eigen::Map<Vec> gb_{nullptr, 0};
  Vec u_, v_;
  Mat cols_cache_;
  double sigma_cache_ = 1.0;
};

/// Transposed convolution: the adjoint of a Conv2d that would map the output
/// shape back to the input shape. out_h = stride*(h-1) + k - 2*pad.
class ConvTranspose2d : public Layer {
 public:
  ConvTranspose2d(TensorShape in, int out_c, int k, int stride, int pad);
  Mat forward(const Mat& x, bool train, Rng* rng) override;
  Mat backward(const Mat& gy) override;
  int param_count() const override;
  void bind(double* theta, double* grad) override;
  void init(Rng& rng) override;
  TensorShape out_shape(const TensorShape&) const override { return out_; }

 private:
  TensorShape in_, out_;
  ConvGeom adjoint_;  // conv from out_ back to in_
  Eigen::Map<Mat> w_{nullptr, 0, 0};  // (in_c) x (out_c*k*k)
  Eigen::Map<Vec> b_{nullptr, 0};     // per output channel
  Eigen::Map<Mat> gw_{nullptr, 0, 0};
  Eigen::Map<Vec> gb_{nullptr, 0};
  Mat x_cache_;
};

class ReLU : public Layer {
 public:
  Mat forward(const Mat& x, bool train, Rng* rng) override;
  Mat backward(const Mat& gy) override;

 private:
  Mat mask_;
};

class LeakyReLU : public Layer {
 public:
  explicit LeakyReLU(double slope = 0.2) : slope_(slope) {}
  Mat forward(const Mat& x, bool train, Rng* rng) override;
  Mat backward(const Mat& gy) override;

 private:
  double slope_;
  Mat x_cache_;
};

/// Sigmoid with optional clamping of the output to [eps, 1-eps] so that
/// downstream logs stay finite.
class Sigmoid : public Layer {
 public:
  explicit Sigmoid(double clamp_eps = 0.0) : eps_(clamp_eps) {}
  Mat forward(const Mat& x, bool train, Rng* rng) override;
  Mat backward(const Mat& gy) override;

 private:
  double eps_;
  Mat y_cache_;
};

class Dropout : public Layer {
 public:
  explicit Dropout(double rate) : rate_(rate) {}
  Mat forward(const Mat& x, bool train, Rng* rng) override;
  Mat backward(const Mat& gy) override;

 private:
  double rate_;
  Mat mask_;
};

class Network {
 public:
  Network() = default;
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  /// Allocate flat parameter storage, bind layers and draw initial weights.
  void finalize(Rng& init_rng);

  Mat forward(const Mat& x, bool train = false, Rng* rng = nullptr);
  /// Gradient wrt the input; parameter grads accumulate into grad().
  Mat backward(const Mat& gy);
  /// Eval-mode activations after `upto` layers (default: before the last
  /// parametric layer, i.e. the penultimate features).
  Mat features(const Mat& x, int upto = -1);

  std::vector<double>& theta() { return theta_; }
  const std::vector<double>& theta() const { return theta_; }
  std::vector<double>& grad() { return grad_; }
  void zero_grad() { std::fill(grad_.begin(), grad_.end(), 0.0); }
  std::size_t param_count() const { return theta_.size(); }
  std::size_t num_layers() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }

  void save_aux(std::ostream& os) const;
  void load_aux(std::istream& is);

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<double> theta_, grad_;
  bool finalized_ = false;
};

/// First-order optimizer with adaptive moments.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step(std::vector<double>& theta, const std::vector<double>& grad);
  double lr() const { return lr_; }

  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long long t_ = 0;
  std::vector<double> m_, v_;
};

Mat softmax(const Mat& logits);
/// VJP of softmax: given probs p and upstream grad g (wrt p), the grad wrt logits.
Mat softmax_vjp(const Mat& probs, const Mat& g);

}  // namespace ordisco::nn
