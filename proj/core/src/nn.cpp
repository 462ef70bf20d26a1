#include "ordisco/nn.hpp"

#include <cmath>

#include "ordisco/errors.hpp"

namespace ordisco::nn {

namespace {

// Patch matrix for a conv described by `g`: input batch X (g.in.size() x N)
// becomes (in_c*k*k) x (P*N) with P = out.h*out.w. Column n*P + oy*ow + ox
// holds the receptive field of output position (oy,ox) of sample n.
Mat im2col(const ConvGeom& g, const Mat& x) {
  const TensorShape out = g.out();
  const int P = out.h * out.w;
  const long n = x.cols();
  Mat cols = Mat::Zero(static_cast<long>(g.in.c) * g.k * g.k, static_cast<long>(P) * n);
  for (long s = 0; s < n; ++s) {
    for (int oy = 0; oy < out.h; ++oy) {
      for (int ox = 0; ox < out.w; ++ox) {
        const long col = s * P + static_cast<long>(oy) * out.w + ox;
        for (int ci = 0; ci < g.in.c; ++ci) {
          for (int ky = 0; ky < g.k; ++ky) {
            const int iy = oy * g.stride + ky - g.pad;
            if (iy < 0 || iy >= g.in.h) continue;
            for (int kx = 0; kx < g.k; ++kx) {
              const int ix = ox * g.stride + kx - g.pad;
              if (ix < 0 || ix >= g.in.w) continue;
              cols(static_cast<long>(ci) * g.k * g.k + ky * g.k + kx, col) =
                  x(static_cast<long>(ci) * g.in.h * g.in.w + iy * g.in.w + ix, s);
            }
          }
        }
      }
    }
  }
  return cols;
}

// Adjoint of im2col: scatter-add patch columns back onto the input canvas.
Mat col2im(const ConvGeom& g, const Mat& cols, long n) {
  const TensorShape out = g.out();
  const int P = out.h * out.w;
  Mat x = Mat::Zero(g.in.size(), n);
  for (long s = 0; s < n; ++s) {
    for (int oy = 0; oy < out.h; ++oy) {
      for (int ox = 0; ox < out.w; ++ox) {
        const long col = s * P + static_cast<long>(oy) * out.w + ox;
        for (int ci = 0; ci < g.in.c; ++ci) {
          for (int ky = 0; ky < g.k; ++ky) {
            const int iy = oy * g.stride + ky - g.pad;
            if (iy < 0 || iy >= g.in.h) continue;
            for (int kx = 0; kx < g.k; ++kx) {
              const int ix = ox * g.stride + kx - g.pad;
              if (ix < 0 || ix >= g.in.w) continue;
              x(static_cast<long>(ci) * g.in.h * g.in.w + iy * g.in.w + ix, s) +=
                  cols(static_cast<long>(ci) * g.k * g.k + ky * g.k + kx, col);
            }
          }
        }
      }
    }
  }
  return x;
}

void write_vec(std::ostream& os, const Vec& v) {
  const std::uint64_t n = static_cast<std::uint64_t>(v.size());
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(n * sizeof(double)));
}

Vec read_vec(std::istream& is) {
  std::uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  Vec v(static_cast<long>(n));
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  return v;
}

void power_step(const Mat& w, Vec& u, Vec& v) {
  v = w.transpose() * u;
  double nv = v.norm();
  if (nv > 0) v /= nv;
  u = w * v;
  double nu = u.norm();
  if (nu > 0) u /= nu;
}

}  // namespace

// ---------------------------------------------------------------- Dense

Dense::Dense(int in, int out, bool spectral_norm)
    : in_(in), out_(out), sn_(spectral_norm) {}

void Dense::bind(double* theta, double* grad) {
  new (&w_) Eigen::Map<Mat>(theta, out_, in_);
  new (&b_) Eigen::Map<Vec>(theta + static_cast<std::size_t>(out_) * in_, out_);
  new (&gw_) Eigen::Map<Mat>(grad, out_, in_);
  new (&gb_) Eigen::Map<Vec>(grad + static_cast<std::size_t>(out_) * in_, out_);
}

void Dense::init(Rng& rng) {
  const double std = std::sqrt(2.0 / in_);
  for (long j = 0; j < w_.cols(); ++j)
    for (long i = 0; i < w_.rows(); ++i) w_(i, j) = std * rng.normal();
  b_.setZero();
  if (sn_) {
    u_.resize(out_);
    v_.resize(in_);
    for (long i = 0; i < u_.size(); ++i) u_(i) = rng.normal();
    u_ /= u_.norm();
    power_step(w_, u_, v_);
  }
}

Mat Dense::effective_weight() const { return sn_ ? Mat(w_ / sigma_cache_) : Mat(w_); }

double Dense::sigma_estimate() const {
  return sn_ ? u_.dot(w_ * v_) : 0.0;
}

void Dense::power_iterate(int steps) {
  for (int i = 0; i < steps; ++i) power_step(w_, u_, v_);
}

Mat Dense::forward(const Mat& x, bool train, Rng*) {
  if (sn_) {
    if (train) power_step(w_, u_, v_);
    sigma_cache_ = std::max(u_.dot(w_ * v_), 1e-12);
  }
  x_cache_ = x;
  Mat y = effective_weight() * x;
  y.colwise() += b_;
  return y;
}

Mat Dense::backward(const Mat& gy) {
  Mat g_eff = gy * x_cache_.transpose();
  if (sn_) {
    // d(W/sigma)/dW with sigma = u'Wv and u,v held fixed.
    const double inner = g_eff.cwiseProduct(w_).sum();
    gw_ += g_eff / sigma_cache_ -
           (inner / (sigma_cache_ * sigma_cache_)) * (u_ * v_.transpose());
  } else {
    gw_ += g_eff;
  }
  gb_ += gy.rowwise().sum();
  return effective_weight().transpose() * gy;
}

void Dense::save_aux(std::ostream& os) const {
  if (!sn_) return;
  write_vec(os, u_);
  write_vec(os, v_);
}

void Dense::load_aux(std::istream& is) {
  if (!sn_) return;
  u_ = read_vec(is);
  v_ = read_vec(is);
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(ConvGeom geom, bool spectral_norm)
    : geom_(geom), sn_(spectral_norm), rows_(geom.out_c),
      cols_(geom.in.c * geom.k * geom.k) {}

int Conv2d::param_count() const { return rows_ * cols_ + rows_; }

void Conv2d::bind(double* theta, double* grad) {
  new (&w_) Eigen::Map<Mat>(theta, rows_, cols_);
  new (&b_) Eigen::Map<Vec>(theta + static_cast<std::size_t>(rows_) * cols_, rows_);
  new (&gw_) Eigen::Map<Mat>(grad, rows_, cols_);
  new (&gb_) Eigen::Map<Vec>(grad + static_cast<std::size_t>(rows_) * cols_, rows_);
}

void Conv2d::init(Rng& rng) {
  const double std = std::sqrt(2.0 / cols_);
  for (long j = 0; j < w_.cols(); ++j)
    for (long i = 0; i < w_.rows(); ++i) w_(i, j) = std * rng.normal();
  b_.setZero();
  if (sn_) {
    u_.resize(rows_);
    v_.resize(cols_);
    for (long i = 0; i < u_.size(); ++i) u_(i) = rng.normal();
    u_ /= u_.norm();
    power_step(w_, u_, v_);
  }
}

Mat Conv2d::effective_weight() const { return sn_ ? Mat(w_ / sigma_cache_) : Mat(w_); }

double Conv2d::sigma_estimate() const { return sn_ ? u_.dot(w_ * v_) : 0.0; }

void Conv2d::power_iterate(int steps) {
  for (int i = 0; i < steps; ++i) power_step(w_, u_, v_);
}

Mat Conv2d::forward(const Mat& x, bool train, Rng*) {
  if (sn_) {
    if (train) power_step(w_, u_, v_);
    sigma_cache_ = std::max(u_.dot(w_ * v_), 1e-12);
  }
  const TensorShape out = geom_.out();
  const int P = out.h * out.w;
  const long n = x.cols();
  cols_cache_ = im2col(geom_, x);
  Mat ygemm = effective_weight() * cols_cache_;  // out_c x (P*N)
  Mat y(out.size(), n);
  for (long s = 0; s < n; ++s) {
    for (int c = 0; c < out.c; ++c) {
      for (int p = 0; p < P; ++p) {
        y(static_cast<long>(c) * P + p, s) = ygemm(c, s * P + p) + b_(c);
      }
    }
  }
  return y;
}

Mat Conv2d::backward(const Mat& gy) {
  const TensorShape out = geom_.out();
  const int P = out.h * out.w;
  const long n = gy.cols();
  Mat ggemm(out.c, static_cast<long>(P) * n);
  for (long s = 0; s < n; ++s) {
    for (int c = 0; c < out.c; ++c) {
      for (int p = 0; p < P; ++p) {
        ggemm(c, s * P + p) = gy(static_cast<long>(c) * P + p, s);
      }
    }
  }
  for (int c = 0; c < out.c; ++c) gb_(c) += ggemm.row(c).sum();

  Mat g_eff = ggemm * cols_cache_.transpose();
  if (sn_) {
    const double inner = g_eff.cwiseProduct(w_).sum();
    gw_ += g_eff / sigma_cache_ -
           (inner / (sigma_cache_ * sigma_cache_)) * (u_ * v_.transpose());
  } else {
    gw_ += g_eff;
  }
  Mat gcols = effective_weight().transpose() * ggemm;
  return col2im(geom_, gcols, n);
}

void Conv2d::save_aux(std::ostream& os) const {
  if (!sn_) return;
  write_vec(os, u_);
  write_vec(os, v_);
}

void Conv2d::load_aux(std::istream& is) {
  if (!sn_) return;
  u_ = read_vec(is);
  v_ = read_vec(is);
}

// ------------------------------------------------------- ConvTranspose2d

ConvTranspose2d::ConvTranspose2d(TensorShape in, int out_c, int k, int stride, int pad)
    : in_(in) {
  out_ = {out_c, stride * (in.h - 1) + k - 2 * pad, stride * (in.w - 1) + k - 2 * pad};
  adjoint_ = ConvGeom{out_, in.c, k, stride, pad};
  if (!(adjoint_.out() == in_)) {
    throw ConfigError("ConvTranspose2d: geometry is not invertible by its adjoint conv");
  }
}

int ConvTranspose2d::param_count() const {
  return in_.c * out_.c * adjoint_.k * adjoint_.k + out_.c;
}

void ConvTranspose2d::bind(double* theta, double* grad) {
  const int rows = in_.c;
  const int cols = out_.c * adjoint_.k * adjoint_.k;
  new (&w_) Eigen::Map<Mat>(theta, rows, cols);
  new (&b_) Eigen::Map<Vec>(theta + static_cast<std::size_t>(rows) * cols, out_.c);
  new (&gw_) Eigen::Map<Mat>(grad, rows, cols);
  new (&gb_) Eigen::Map<Vec>(grad + static_cast<std::size_t>(rows) * cols, out_.c);
}

void ConvTranspose2d::init(Rng& rng) {
  const double std = std::sqrt(2.0 / w_.cols());
  for (long j = 0; j < w_.cols(); ++j)
    for (long i = 0; i < w_.rows(); ++i) w_(i, j) = std * rng.normal();
  b_.setZero();
}

Mat ConvTranspose2d::forward(const Mat& x, bool, Rng*) {
  const int P = in_.h * in_.w;  // positions of the adjoint conv's output
  const long n = x.cols();
  Mat xgemm(in_.c, static_cast<long>(P) * n);
  for (long s = 0; s < n; ++s)
    for (int c = 0; c < in_.c; ++c)
      for (int p = 0; p < P; ++p)
        xgemm(c, s * P + p) = x(static_cast<long>(c) * P + p, s);
  x_cache_ = xgemm;
  Mat cols = w_.transpose() * xgemm;  // (out_c*k*k) x (P*N)
  Mat y = col2im(adjoint_, cols, n);
  const int Q = out_.h * out_.w;
  for (long s = 0; s < n; ++s)
    for (int c = 0; c < out_.c; ++c)
      for (int q = 0; q < Q; ++q) y(static_cast<long>(c) * Q + q, s) += b_(c);
  return y;
}

Mat ConvTranspose2d::backward(const Mat& gy) {
  const long n = gy.cols();
  const int P = in_.h * in_.w;
  const int Q = out_.h * out_.w;
  for (long s = 0; s < n; ++s)
    for (int c = 0; c < out_.c; ++c)
      for (int q = 0; q < Q; ++q) gb_(c) += gy(static_cast<long>(c) * Q + q, s);

  Mat cols_g = im2col(adjoint_, gy);        // (out_c*k*k) x (P*N)
  gw_ += x_cache_ * cols_g.transpose();     // (in_c) x (out_c*k*k)
  Mat gx_gemm = w_ * cols_g;                // (in_c) x (P*N)
  Mat gx(in_.size(), n);
  for (long s = 0; s < n; ++s)
    for (int c = 0; c < in_.c; ++c)
      for (int p = 0; p < P; ++p)
        gx(static_cast<long>(c) * P + p, s) = gx_gemm(c, s * P + p);
  return gx;
}

// ---------------------------------------------------------------- misc

Mat ReLU::forward(const Mat& x, bool, Rng*) {
  mask_ = (x.array() > 0.0).cast<double>();
  return x.cwiseProduct(mask_);
}

Mat ReLU::backward(const Mat& gy) { return gy.cwiseProduct(mask_); }

Mat LeakyReLU::forward(const Mat& x, bool, Rng*) {
  x_cache_ = x;
  return x.unaryExpr([this](double v) { return v > 0 ? v : slope_ * v; });
}

Mat LeakyReLU::backward(const Mat& gy) {
  Mat g = gy;
  for (long j = 0; j < g.cols(); ++j)
    for (long i = 0; i < g.rows(); ++i)
      if (x_cache_(i, j) <= 0) g(i, j) *= slope_;
  return g;
}

Mat Sigmoid::forward(const Mat& x, bool, Rng*) {
  y_cache_ = x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  if (eps_ > 0.0) {
    y_cache_ = y_cache_.unaryExpr(
        [this](double v) { return std::min(std::max(v, eps_), 1.0 - eps_); });
  }
  return y_cache_;
}

Mat Sigmoid::backward(const Mat& gy) {
  // At the clamp boundary the derivative is sigma'(x) ~ eps; keep the smooth
  // form so gradients never vanish identically.
  return gy.cwiseProduct(
      y_cache_.cwiseProduct(Mat::Ones(y_cache_.rows(), y_cache_.cols()) - y_cache_));
}

Mat Dropout::forward(const Mat& x, bool train, Rng* rng) {
  if (!train || rate_ <= 0.0) {
    mask_ = Mat::Ones(x.rows(), x.cols());
    return x;
  }
  if (rng == nullptr) throw NumericalError("Dropout: train-mode forward needs an rng");
  mask_.resize(x.rows(), x.cols());
  const double keep = 1.0 - rate_;
  for (long j = 0; j < x.cols(); ++j)
    for (long i = 0; i < x.rows(); ++i)
      mask_(i, j) = rng->uniform() < keep ? 1.0 / keep : 0.0;
  return x.cwiseProduct(mask_);
}

Mat Dropout::backward(const Mat& gy) { return gy.cwiseProduct(mask_); }

// ---------------------------------------------------------------- Network

void Network::finalize(Rng& init_rng) {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l->param_count());
  theta_.assign(n, 0.0);
  grad_.assign(n, 0.0);
  std::size_t off = 0;
  for (const auto& l : layers_) {
    l->bind(theta_.data() + off, grad_.data() + off);
    l->init(init_rng);
    off += static_cast<std::size_t>(l->param_count());
  }
  finalized_ = true;
}

Mat Network::forward(const Mat& x, bool train, Rng* rng) {
  Mat a = x;
  for (const auto& l : layers_) a = l->forward(a, train, rng);
  return a;
}

Mat Network::backward(const Mat& gy) {
  Mat g = gy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

Mat Network::features(const Mat& x, int upto) {
  const std::size_t stop =
      upto < 0 ? (layers_.empty() ? 0 : layers_.size() - 1)
               : static_cast<std::size_t>(upto);
  Mat a = x;
  for (std::size_t i = 0; i < stop && i < layers_.size(); ++i) {
    a = layers_[i]->forward(a, false, nullptr);
  }
  return a;
}

void Network::save_aux(std::ostream& os) const {
  for (const auto& l : layers_) l->save_aux(os);
}

void Network::load_aux(std::istream& is) {
  for (const auto& l : layers_) l->load_aux(is);
}

// ---------------------------------------------------------------- Adam

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::vector<double>& theta, const std::vector<double>& grad) {
  if (theta.size() != m_.size() || grad.size() != m_.size()) {
    throw NumericalError("Adam: parameter/gradient size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    theta[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

void Adam::save(std::ostream& os) const {
  os.write(reinterpret_cast<const char*>(&lr_), sizeof lr_);
  os.write(reinterpret_cast<const char*>(&beta1_), sizeof beta1_);
  os.write(reinterpret_cast<const char*>(&beta2_), sizeof beta2_);
  os.write(reinterpret_cast<const char*>(&eps_), sizeof eps_);
  os.write(reinterpret_cast<const char*>(&t_), sizeof t_);
  const std::uint64_t n = m_.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(m_.data()),
           static_cast<std::streamsize>(n * sizeof(double)));
  os.write(reinterpret_cast<const char*>(v_.data()),
           static_cast<std::streamsize>(n * sizeof(double)));
}

void Adam::load(std::istream& is) {
  is.read(reinterpret_cast<char*>(&lr_), sizeof lr_);
  is.read(reinterpret_cast<char*>(&beta1_), sizeof beta1_);
  is.read(reinterpret_cast<char*>(&beta2_), sizeof beta2_);
  is.read(reinterpret_cast<char*>(&eps_), sizeof eps_);
  is.read(reinterpret_cast<char*>(&t_), sizeof t_);
  std::uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  m_.resize(n);
  v_.resize(n);
  is.read(reinterpret_cast<char*>(m_.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  is.read(reinterpret_cast<char*>(v_.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
}

Mat softmax(const Mat& logits) {
  Mat p(logits.rows(), logits.cols());
  for (long j = 0; j < logits.cols(); ++j) {
    const double mx = logits.col(j).maxCoeff();
    Vec e = (logits.col(j).array() - mx).exp();
    p.col(j) = e / e.sum();
  }
  return p;
}

Mat softmax_vjp(const Mat& probs, const Mat& g) {
  Mat out(probs.rows(), probs.cols());
  for (long j = 0; j < probs.cols(); ++j) {
    const double dot = g.col(j).dot(probs.col(j));
    out.col(j) = probs.col(j).cwiseProduct(g.col(j) - Vec::Constant(probs.rows(), dot));
  }
  return out;
}

}  // namespace ordisco::nn
