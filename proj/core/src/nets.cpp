#include "ordisco/nets.hpp"

#include <algorithm>
#include <memory>

#include "ordisco/errors.hpp"

namespace ordisco {

using nn::Conv2d;
using nn::ConvGeom;
using nn::ConvTranspose2d;
using nn::Dense;
using nn::Dropout;
using nn::LeakyReLU;
using nn::Mat;
using nn::Network;
using nn::ReLU;
using nn::Sigmoid;
using nn::TensorShape;

namespace {

TensorShape img_shape(const TripleSpec& s) {
  return {s.image.c, s.image.h, s.image.w};
}

void require_quarterable(const TripleSpec& s, const char* who) {
  if (s.image.h % 4 != 0 || s.image.w % 4 != 0) {
    throw ConfigError(std::string(who) + ": conv architectures need H and W divisible by 4");
  }
}

}  // namespace

Network build_classifier(const TripleSpec& spec, Rng& init_rng) {
  Network net;
  const int k = spec.num_classes;
  const int w = spec.classifier_width;
  if (spec.classifier_arch == "mlp") {
    net.add(std::make_unique<Dense>(spec.image.size(), w * 8));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<Dropout>(spec.dropout));
    net.add(std::make_unique<Dense>(w * 8, k));
  } else if (spec.classifier_arch == "small") {
    require_quarterable(spec, "classifier");
    TensorShape in = img_shape(spec);
    net.add(std::make_unique<Conv2d>(ConvGeom{in, w, 4, 2, 1}));
    net.add(std::make_unique<ReLU>());
    TensorShape h1{w, spec.image.h / 2, spec.image.w / 2};
    net.add(std::make_unique<Conv2d>(ConvGeom{h1, 2 * w, 4, 2, 1}));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<Dropout>(spec.dropout));
    net.add(std::make_unique<Dense>(2 * w * (spec.image.h / 4) * (spec.image.w / 4), k));
  } else if (spec.classifier_arch == "conv9") {
    // 9 convolutions, no residual connections.
    require_quarterable(spec, "classifier");
    TensorShape in = img_shape(spec);
    auto conv = [&](TensorShape s, int oc, int stride) {
      net.add(std::make_unique<Conv2d>(ConvGeom{s, oc, 3, stride, 1}));
      net.add(std::make_unique<ReLU>());
      return TensorShape{oc, (s.h + 2 - 3) / stride + 1, (s.w + 2 - 3) / stride + 1};
    };
    TensorShape s = conv(in, w, 1);
    s = conv(s, w, 1);
    s = conv(s, 2 * w, 2);
    net.add(std::make_unique<Dropout>(spec.dropout));
    s = conv(s, 2 * w, 1);
    s = conv(s, 2 * w, 1);
    s = conv(s, 4 * w, 2);
    net.add(std::make_unique<Dropout>(spec.dropout));
    s = conv(s, 4 * w, 1);
    s = conv(s, 4 * w, 1);
    s = conv(s, 4 * w, 1);
    net.add(std::make_unique<Dense>(s.size(), k));
  } else {
    throw ConfigError("unknown classifier_arch: " + spec.classifier_arch);
  }
  net.finalize(init_rng);
  return net;
}

Network build_generator(const TripleSpec& spec, Rng& init_rng) {
  Network net;
  const int in_dim = spec.z_dim + spec.num_classes;
  if (spec.gan_arch == "mlp") {
    net.add(std::make_unique<Dense>(in_dim, spec.gan_width * 4));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<Dense>(spec.gan_width * 4, spec.image.size()));
    net.add(std::make_unique<Sigmoid>());
  } else if (spec.gan_arch == "conv") {
    require_quarterable(spec, "generator");
    const int w = spec.gan_width;
    const int h4 = spec.image.h / 4, w4 = spec.image.w / 4;
    net.add(std::make_unique<Dense>(in_dim, 2 * w * h4 * w4));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<ConvTranspose2d>(TensorShape{2 * w, h4, w4}, w, 4, 2, 1));
    net.add(std::make_unique<ReLU>());
    net.add(std::make_unique<ConvTranspose2d>(
        TensorShape{w, spec.image.h / 2, spec.image.w / 2}, spec.image.c, 4, 2, 1));
    net.add(std::make_unique<Sigmoid>());
  } else {
    throw ConfigError("unknown gan_arch: " + spec.gan_arch);
  }
  net.finalize(init_rng);
  return net;
}

Network build_discriminator(const TripleSpec& spec, Rng& init_rng) {
  Network net;
  const bool sn = spec.spectral_norm;
  if (spec.gan_arch == "mlp") {
    const int in_dim = spec.image.size() + spec.num_classes;
    net.add(std::make_unique<Dense>(in_dim, spec.gan_width * 4, sn));
    net.add(std::make_unique<LeakyReLU>(0.2));
    net.add(std::make_unique<Dense>(spec.gan_width * 4, 1, sn));
    net.add(std::make_unique<Sigmoid>(spec.d_clamp_eps));
  } else if (spec.gan_arch == "conv") {
    require_quarterable(spec, "discriminator");
    const int w = spec.gan_width;
    TensorShape in{spec.image.c + spec.num_classes, spec.image.h, spec.image.w};
    net.add(std::make_unique<Conv2d>(ConvGeom{in, w, 4, 2, 1}, sn));
    net.add(std::make_unique<LeakyReLU>(0.2));
    TensorShape h1{w, spec.image.h / 2, spec.image.w / 2};
    net.add(std::make_unique<Conv2d>(ConvGeom{h1, 2 * w, 4, 2, 1}, sn));
    net.add(std::make_unique<LeakyReLU>(0.2));
    net.add(std::make_unique<Dense>(2 * w * (spec.image.h / 4) * (spec.image.w / 4), 1, sn));
    net.add(std::make_unique<Sigmoid>(spec.d_clamp_eps));
  } else {
    throw ConfigError("unknown gan_arch: " + spec.gan_arch);
  }
  net.finalize(init_rng);
  return net;
}

ModelTriple ModelTriple::build(const TripleSpec& spec, Rng& init_rng) {
  ModelTriple m;
  m.spec = spec;
  m.c = build_classifier(spec, init_rng);
  m.g = build_generator(spec, init_rng);
  m.d = build_discriminator(spec, init_rng);
  return m;
}

EmaTeacher EmaTeacher::from(const TripleSpec& spec, const nn::Network& student,
                            double decay) {
  EmaTeacher t;
  Rng dummy(0);
  t.net = build_classifier(spec, dummy);
  std::copy(student.theta().begin(), student.theta().end(), t.net.theta().begin());
  t.decay = decay;
  return t;
}

void ema_update(std::vector<double>& teacher_theta,
                const std::vector<double>& student_theta, double beta) {
  if (teacher_theta.size() != student_theta.size()) {
    throw NumericalError("ema_update: parameter shape mismatch");
  }
  for (std::size_t i = 0; i < teacher_theta.size(); ++i) {
    teacher_theta[i] = beta * teacher_theta[i] + (1.0 - beta) * student_theta[i];
  }
}

ParamSnapshot snapshot_discriminator(const nn::Network& d, int taken_after_batch) {
  return ParamSnapshot{d.theta(), taken_after_batch};
}

Mat condition_d_input(const TripleSpec& spec, const Mat& images,
                      const std::vector<int>& labels) {
  const long n = images.cols();
  if (static_cast<long>(labels.size()) != n) {
    throw NumericalError("condition_d_input: image/label count mismatch");
  }
  const int k = spec.num_classes;
  for (int y : labels) {
    if (y < 0 || y >= k) {
      throw DataError("condition_d_input: label " + std::to_string(y) +
                      " out of range for K=" + std::to_string(k));
    }
  }
  if (spec.gan_arch == "mlp") {
    Mat out = Mat::Zero(images.rows() + k, n);
    out.topRows(images.rows()) = images;
    for (long j = 0; j < n; ++j) out(images.rows() + labels[j], j) = 1.0;
    return out;
  }
  const int plane = spec.image.h * spec.image.w;
  Mat out = Mat::Zero(images.rows() + static_cast<long>(k) * plane, n);
  out.topRows(images.rows()) = images;
  for (long j = 0; j < n; ++j) {
    out.block(images.rows() + static_cast<long>(labels[j]) * plane, j, plane, 1)
        .setOnes();
  }
  return out;
}

Mat condition_g_input(const TripleSpec& spec, const Mat& z,
                      const std::vector<int>& labels) {
  const long n = z.cols();
  if (static_cast<long>(labels.size()) != n) {
    throw NumericalError("condition_g_input: noise/label count mismatch");
  }
  Mat out = Mat::Zero(z.rows() + spec.num_classes, n);
  out.topRows(z.rows()) = z;
  for (long j = 0; j < n; ++j) {
    const int y = labels[static_cast<std::size_t>(j)];
    if (y < 0 || y >= spec.num_classes) {
      throw DataError("condition_g_input: label " + std::to_string(y) +
                      " out of range for K=" + std::to_string(spec.num_classes));
    }
    out(z.rows() + y, j) = 1.0;
  }
  return out;
}

ConditionalSamples sample_conditional(nn::Network& g, const TripleSpec& spec,
                                      int k_seen, int n, Rng& rng) {
  if (k_seen < 1 || k_seen > spec.num_classes) {
    throw ConfigError("sample_conditional: k_seen " + std::to_string(k_seen) +
                      " outside generator capacity " + std::to_string(spec.num_classes));
  }
  ConditionalSamples out;
  out.labels.resize(static_cast<std::size_t>(n));
  Mat z(spec.z_dim, n);
  for (int j = 0; j < n; ++j) {
    out.labels[static_cast<std::size_t>(j)] =
        static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(k_seen)));
    for (int i = 0; i < spec.z_dim; ++i) z(i, j) = rng.normal();
  }
  out.images = g.forward(condition_g_input(spec, z, out.labels), false, nullptr);
  return out;
}

}  // namespace ordisco
