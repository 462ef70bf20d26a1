#pragma once

#include <string>
#include <vector>

#include "ordisco/nn.hpp"
#include "ordisco/rng.hpp"
#include "ordisco/types.hpp"

namespace ordisco {

/// Architecture recipe for the classifier/generator/discriminator triple.
/// classifier_arch: "mlp" | "small" | "conv9" (the reference 9-conv stack,
/// no residual connections). gan_arch: "mlp" | "conv".
struct TripleSpec {
  ImageShape image;
  int num_classes = 10;   // generator/discriminator class capacity
  int z_dim = 16;
  std::string classifier_arch = "conv9";
  int classifier_width = 8;
  double dropout = 0.1;
  std::string gan_arch = "conv";
  int gan_width = 16;
  bool spectral_norm = true;
  double d_clamp_eps = 1e-6;  // D outputs clamped to [eps, 1-eps]
};

nn::Network build_classifier(const TripleSpec& spec, Rng& init_rng);
nn::Network build_generator(const TripleSpec& spec, Rng& init_rng);
nn::Network build_discriminator(const TripleSpec& spec, Rng& init_rng);

/// The three networks of one training run.
struct ModelTriple {
  TripleSpec spec;
  nn::Network c, g, d;

  static ModelTriple build(const TripleSpec& spec, Rng& init_rng);
};

/// Exponential-moving-average copy of the classifier, used as the
/// consistency target.
struct EmaTeacher {
  nn::Network net;
  double decay = 0.99;

  static EmaTeacher from(const TripleSpec& spec, const nn::Network& student,
                         double decay);
};

/// theta' <- beta*theta' + (1-beta)*theta, elementwise.
void ema_update(std::vector<double>& teacher_theta,
                const std::vector<double>& student_theta, double beta);

/// Frozen copy of discriminator parameters (the regularizer anchor).
struct ParamSnapshot {
  std::vector<double> theta;
  int taken_after_batch = 0;
  bool valid() const { return !theta.empty(); }
};

ParamSnapshot snapshot_discriminator(const nn::Network& d, int taken_after_batch);

/// Discriminator conditioning: one-hot label planes appended to the image
/// channels ("conv") or a one-hot vector appended to the flat image ("mlp").
nn::Mat condition_d_input(const TripleSpec& spec, const nn::Mat& images,
                          const std::vector<int>& labels);

/// Generator conditioning: one-hot label appended to the noise vector.
nn::Mat condition_g_input(const TripleSpec& spec, const nn::Mat& z,
                          const std::vector<int>& labels);

struct ConditionalSamples {
  nn::Mat images;           // image.size() x n
  std::vector<int> labels;  // the conditioning labels y'
};

/// y' ~ U{0..k_seen-1}, z ~ N(0,I); returns G(z,y') with the sampled labels.
ConditionalSamples sample_conditional(nn::Network& g, const TripleSpec& spec,
                                      int k_seen, int n, Rng& rng);

}  // namespace ordisco
