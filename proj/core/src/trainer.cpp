#include "ordisco/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ordisco/checkpoint.hpp"
#include "ordisco/errors.hpp"
#include "ordisco/evalmetrics.hpp"

namespace ordisco::train {

using losses::LossBreakdown;

std::string to_string(Method m) {
  switch (m) {
    case Method::kOrdisco: return "ordisco";
    case Method::kJt: return "jt";
    case Method::kSt: return "st";
    case Method::kSmb: return "smb";
    case Method::kSmbUmb: return "smb_umb";
    case Method::kEwc: return "ewc";
    case Method::kMas: return "mas";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "ordisco") return Method::kOrdisco;
  if (s == "jt") return Method::kJt;
  if (s == "st") return Method::kSt;
  if (s == "smb") return Method::kSmb;
  if (s == "smb_umb") return Method::kSmbUmb;
  if (s == "ewc") return Method::kEwc;
  if (s == "mas") return Method::kMas;
  throw ConfigError("unknown method: " + s);
}

Vec estimate_ewc_importance(nn::Network& classifier, const Mat& images,
                            const std::vector<int>& labels) {
  if (images.cols() == 0) throw DataError("estimate_ewc_importance: empty data");
  Vec omega = Vec::Zero(static_cast<long>(classifier.param_count()));
  for (long j = 0; j < images.cols(); ++j) {
    Mat logits = classifier.forward(images.col(j), false, nullptr);
    Mat p = nn::softmax(logits);
    // d log p_y / d logits = onehot(y) - p.
    Mat g = -p;
    g(labels[static_cast<std::size_t>(j)], 0) += 1.0;
    classifier.zero_grad();
    classifier.backward(g);
    const auto& grad = classifier.grad();
    for (std::size_t i = 0; i < grad.size(); ++i) {
      omega(static_cast<long>(i)) += grad[i] * grad[i];
    }
  }
  classifier.zero_grad();
  return omega / static_cast<double>(images.cols());
}

Vec estimate_mas_importance(nn::Network& net, const Mat& images, bool apply_softmax) {
  if (images.cols() == 0) throw DataError("estimate_mas_importance: empty data");
  Vec omega = Vec::Zero(static_cast<long>(net.param_count()));
  for (long j = 0; j < images.cols(); ++j) {
    Mat out = net.forward(images.col(j), false, nullptr);
    Mat g;
    if (apply_softmax) {
      Mat p = nn::softmax(out);
      g = nn::softmax_vjp(p, Mat(2.0 * p));
    } else {
      g = 2.0 * out;
    }
    net.zero_grad();
    net.backward(g);
    const auto& grad = net.grad();
    for (std::size_t i = 0; i < grad.size(); ++i) {
      omega(static_cast<long>(i)) += std::abs(grad[i]);
    }
  }
  net.zero_grad();
  return omega / static_cast<double>(images.cols());
}

Trainer::Trainer(const TaskSequence& sequence, const TrainConfig& config,
                 const std::vector<Sample>& test_set, std::string config_hash)
    : cfg_(config),
      config_hash_(std::move(config_hash)),
      sequence_(&sequence),
      test_set_(&test_set) {
  if (cfg_.steps_per_batch < 1) throw ConfigError("steps_per_batch must be >= 1");
  for (std::size_t t = 0; t < sequence.tasks.size(); ++t) {
    for (const auto& b : sequence.tasks[t]) {
      flat_.push_back({&b, static_cast<int>(t)});
    }
  }
  if (flat_.empty()) throw ConfigError("empty task sequence");

  Rng init_rng = Rng::substream(cfg_.seed, "init");
  model_ = ModelTriple::build(cfg_.arch, init_rng);
  teacher_ = EmaTeacher::from(cfg_.arch, model_.c, cfg_.ema_decay);
  adam_c_ = nn::Adam(model_.c.param_count(), cfg_.lr_c);
  adam_g_ = nn::Adam(model_.g.param_count(), cfg_.lr_gd, cfg_.adam_beta1_gd,
                     cfg_.adam_beta2_gd);
  adam_d_ = nn::Adam(model_.d.param_count(), cfg_.lr_gd, cfg_.adam_beta1_gd,
                     cfg_.adam_beta2_gd);
  smb_ = SupervisedBuffer(cfg_.smb_capacity > 0 ? SupervisedPolicy::kMeanOfFeature
                                                : SupervisedPolicy::kStoreAll,
                          cfg_.smb_capacity);
  umb_ = UnsupervisedBuffer(cfg_.umb_capacity);
  rng_train_ = Rng::substream(cfg_.seed, "training");
  rng_sample_ = Rng::substream(cfg_.seed, "sampling");
  rng_buffer_ = Rng::substream(cfg_.seed, "buffers");
}

std::vector<const Sample*> Trainer::labeled_pool(const FlatBatch& fb) const {
  std::vector<const Sample*> pool;
  for (const auto& s : fb.batch->labeled) pool.push_back(&s);
  switch (cfg_.method) {
    case Method::kOrdisco:
    case Method::kSmb:
    case Method::kSmbUmb:
      for (const auto& s : smb_.entries()) pool.push_back(&s);
      break;
    case Method::kJt:
      for (const auto& s : jt_labeled_) pool.push_back(&s);
      break;
    case Method::kSt:
    case Method::kEwc:
    case Method::kMas:
      break;
  }
  return pool;
}

std::vector<const Sample*> Trainer::unlabeled_pool(const FlatBatch& fb) const {
  std::vector<const Sample*> pool;
  for (const auto& s : fb.batch->unlabeled) pool.push_back(&s);
  if (cfg_.method == Method::kSmbUmb) {
    for (const auto& s : umb_.entries()) pool.push_back(&s);
  } else if (cfg_.method == Method::kJt) {
    for (const auto& s : jt_unlabeled_) pool.push_back(&s);
  }
  return pool;
}

Mat Trainer::gather_images(const std::vector<const Sample*>& pool,
                           const std::vector<std::size_t>& idx) const {
  const long dim = cfg_.arch.image.size();
  Mat x(dim, static_cast<long>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const auto& img = pool[idx[j]]->image;
    for (long i = 0; i < dim; ++i) {
      x(i, static_cast<long>(j)) = static_cast<double>(img[static_cast<std::size_t>(i)]);
    }
  }
  return x;
}

std::vector<int> Trainer::sample_seen_labels(int n) {
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const auto pick = rng_sample_.uniform_int(classes_seen_sorted_.size());
    labels[static_cast<std::size_t>(j)] =
        classes_seen_sorted_[static_cast<std::size_t>(pick)];
  }
  return labels;
}

LossBreakdown Trainer::classifier_step(const std::vector<const Sample*>& lp,
                                       const std::vector<const Sample*>& up,
                                       int batch_index) {
  LossBreakdown out;
  const int k = cfg_.arch.num_classes;
  const long dim = cfg_.arch.image.size();

  const int nl = lp.empty() ? 0 : cfg_.labeled_batch_size;
  const int nu = up.empty() ? 0 : cfg_.unlabeled_batch_size;
  std::vector<std::size_t> lidx, uidx;
  std::vector<int> ylab;
  for (int j = 0; j < nl; ++j) {
    lidx.push_back(static_cast<std::size_t>(rng_train_.uniform_int(lp.size())));
    ylab.push_back(lp[lidx.back()]->label);
  }
  for (int j = 0; j < nu; ++j) {
    uidx.push_back(static_cast<std::size_t>(rng_train_.uniform_int(up.size())));
  }

  const bool replay = cfg_.method == Method::kOrdisco && cfg_.replay_on &&
                      batch_index >= cfg_.replay_start_batch &&
                      !classes_seen_sorted_.empty();
  int nr = 0;
  Mat x_r;
  std::vector<int> y_r;
  if (replay) {
    nr = cfg_.unlabeled_batch_size;
    y_r = sample_seen_labels(nr);
    Mat z(cfg_.arch.z_dim, nr);
    for (int j = 0; j < nr; ++j)
      for (int i = 0; i < cfg_.arch.z_dim; ++i) z(i, j) = rng_sample_.normal();
    x_r = model_.g.forward(condition_g_input(cfg_.arch, z, y_r), false, nullptr);
  }

  Mat x(dim, static_cast<long>(nl + nu + nr));
  if (nl > 0) x.leftCols(nl) = gather_images(lp, lidx);
  if (nu > 0) x.middleCols(nl, nu) = gather_images(up, uidx);
  if (nr > 0) x.rightCols(nr) = x_r;

  Mat logits = model_.c.forward(x, true, &rng_train_);
  Mat grad = Mat::Zero(k, logits.cols());

  if (nl > 0) {
    auto ce = losses::supervised_ce(logits.leftCols(nl), losses::one_hot(ylab, k));
    out.sl = ce.value;
    grad.leftCols(nl) = ce.grad;
  }

  Mat teacher_probs;
  if (nu + nr > 0) {
    Mat xt(dim, static_cast<long>(nu + nr));
    if (nu > 0) xt.leftCols(nu) = x.middleCols(nl, nu);
    if (nr > 0) xt.rightCols(nr) = x_r;
    teacher_probs = nn::softmax(teacher_.net.forward(xt, true, &rng_train_));
  }
  if (nu > 0) {
    Mat probs_u = nn::softmax(logits.middleCols(nl, nu));
    auto cons = losses::mt_consistency(probs_u, teacher_probs.leftCols(nu));
    out.ul = cfg_.consistency_weight * cons.value;
    grad.middleCols(nl, nu) =
        nn::softmax_vjp(probs_u, Mat(cfg_.consistency_weight * cons.grad));
  }
  if (nr > 0) {
    auto rl = losses::replay_loss(logits.rightCols(nr), teacher_probs.rightCols(nr),
                                  y_r, k);
    out.replay_sl = rl.sl;
    out.replay_ul = rl.ul;
    grad.rightCols(nr) = rl.grad_logits;
  }

  model_.c.zero_grad();
  model_.c.backward(grad);

  if ((cfg_.method == Method::kEwc || cfg_.method == Method::kMas) &&
      !anchor_c_.empty() && omega_.size() > 0) {
    const auto& theta = model_.c.theta();
    auto& g = model_.c.grad();
    double pen = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double d = theta[i] - anchor_c_[i];
      pen += omega_(static_cast<long>(i)) * d * d;
      g[i] += 2.0 * cfg_.lambda_reg * omega_(static_cast<long>(i)) * d;
    }
    out.penalty = cfg_.lambda_reg * pen;
  }

  adam_c_.step(model_.c.theta(), model_.c.grad());
  return out;
}

LossBreakdown Trainer::train_inner_step(int flat_batch_idx) {
  const FlatBatch& fb = flat_[static_cast<std::size_t>(flat_batch_idx)];
  const int batch_index = fb.batch->batch_index;
  bool grew = false;
  for (int c : sequence_->classes_per_task[static_cast<std::size_t>(fb.task_index)]) {
    grew |= classes_seen_.insert(c).second;
  }
  if (grew || classes_seen_sorted_.empty()) {
    classes_seen_sorted_.assign(classes_seen_.begin(), classes_seen_.end());
  }
  const auto lp = labeled_pool(fb);
  const auto up = unlabeled_pool(fb);

  LossBreakdown out;
  if (cfg_.method == Method::kOrdisco) {
    const int k = cfg_.arch.num_classes;
    const long dim = cfg_.arch.image.size();

    // --- discriminator update (descend -V + penalty)
    const int nl = lp.empty() ? 0 : cfg_.labeled_batch_size;
    std::vector<std::size_t> lidx;
    std::vector<int> ylab;
    for (int j = 0; j < nl; ++j) {
      lidx.push_back(static_cast<std::size_t>(rng_train_.uniform_int(lp.size())));
      ylab.push_back(lp[lidx.back()]->label);
    }
    const int ng = cfg_.unlabeled_batch_size;
    std::vector<int> ygen = sample_seen_labels(ng);
    Mat z(cfg_.arch.z_dim, ng);
    for (int j = 0; j < ng; ++j)
      for (int i = 0; i < cfg_.arch.z_dim; ++i) z(i, j) = rng_sample_.normal();
    Mat g_out = model_.g.forward(condition_g_input(cfg_.arch, z, ygen), false, nullptr);

    const int nu = up.empty() ? 0 : cfg_.unlabeled_batch_size;
    std::vector<std::size_t> uidx;
    for (int j = 0; j < nu; ++j) {
      uidx.push_back(static_cast<std::size_t>(rng_train_.uniform_int(up.size())));
    }
    Mat x_u = nu > 0 ? gather_images(up, uidx) : Mat(dim, 0);
    std::vector<int> yhat(static_cast<std::size_t>(nu));
    if (nu > 0) {
      Mat cl = model_.c.forward(x_u, false, nullptr);
      if (cfg_.pseudo_label_sample) {
        Mat p = nn::softmax(cl);
        for (int j = 0; j < nu; ++j) {
          double r = rng_train_.uniform();
          int pick = k - 1;
          double acc = 0.0;
          for (int i = 0; i < k; ++i) {
            acc += p(i, j);
            if (r < acc) { pick = i; break; }
          }
          yhat[static_cast<std::size_t>(j)] = pick;
        }
      } else {
        for (int j = 0; j < nu; ++j) {
          long arg = 0;
          cl.col(j).maxCoeff(&arg);
          yhat[static_cast<std::size_t>(j)] = static_cast<int>(arg);
        }
      }
    }

    Mat din_real = nl > 0 ? condition_d_input(cfg_.arch, gather_images(lp, lidx), ylab)
                          : Mat();
    Mat din_gen = condition_d_input(cfg_.arch, g_out, ygen);
    Mat din_cls = nu > 0 ? condition_d_input(cfg_.arch, x_u, yhat) : Mat();
    Mat din(din_gen.rows(), static_cast<long>(nl + ng + nu));
    if (nl > 0) din.leftCols(nl) = din_real;
    din.middleCols(nl, ng) = din_gen;
    if (nu > 0) din.rightCols(nu) = din_cls;

    Mat d_all = model_.d.forward(din, true, &rng_train_);
    Vec d_real = d_all.row(0).segment(0, nl).transpose();
    Vec d_gen = d_all.row(0).segment(nl, ng).transpose();
    Vec d_cls = d_all.row(0).segment(nl + ng, nu).transpose();
    auto dv = losses::discriminator_pl_value(d_real, d_gen, d_cls, cfg_.alpha);
    out.d_real = dv.term_real;
    out.d_fake_gen = dv.term_gen;
    out.d_fake_cls = dv.term_cls;

    Mat gy = Mat::Zero(1, d_all.cols());
    if (nl > 0) gy.block(0, 0, 1, nl) = -dv.g_real.transpose();
    gy.block(0, nl, 1, ng) = -dv.g_gen.transpose();
    if (nu > 0) gy.block(0, nl + ng, 1, nu) = -dv.g_cls.transpose();
    model_.d.zero_grad();
    model_.d.backward(gy);

    const bool reg_active = cfg_.reg_on && anchor_.valid() && xi_.running.size() > 0;
    if (reg_active) {
      out.penalty = reg::consistency_penalty(model_.d.theta(), anchor_, xi_.running,
                                             cfg_.lambda);
      reg::add_penalty_gradient(model_.d.theta(), anchor_, xi_.running, cfg_.lambda,
                                model_.d.grad());
    }
    adam_d_.step(model_.d.theta(), model_.d.grad());

    // --- generator update
    std::vector<int> yg2 = sample_seen_labels(ng);
    Mat z2(cfg_.arch.z_dim, ng);
    for (int j = 0; j < ng; ++j)
      for (int i = 0; i < cfg_.arch.z_dim; ++i) z2(i, j) = rng_sample_.normal();
    Mat gin2 = condition_g_input(cfg_.arch, z2, yg2);
    Mat gimg = model_.g.forward(gin2, true, &rng_train_);
    Mat d2 = model_.d.forward(condition_d_input(cfg_.arch, gimg, yg2), false, nullptr);
    auto gl = losses::generator_loss(Vec(d2.row(0).transpose()),
                                     cfg_.generator_literal_loss);
    out.g = gl.value;
    model_.d.zero_grad();
    model_.g.zero_grad();
    Mat gd = gl.grad.transpose();  // 1 x ng
    Mat gx = model_.d.backward(gd);
    model_.g.backward(gx.topRows(dim));
    adam_g_.step(model_.g.theta(), model_.g.grad());
    model_.d.zero_grad();

    // --- classifier update (with online replay)
    LossBreakdown c_part = classifier_step(lp, up, batch_index);
    out.sl = c_part.sl;
    out.ul = c_part.ul;
    out.replay_sl = c_part.replay_sl;
    out.replay_ul = c_part.replay_ul;
  } else {
    out = classifier_step(lp, up, batch_index);
  }

  ema_update(teacher_.net.theta(), model_.c.theta(), cfg_.ema_decay);

  if (!out.finite()) {
    last_losses_ = out;
    throw NumericalError("non-finite loss at batch " + std::to_string(batch_index));
  }
  last_losses_ = out;
  return out;
}

void Trainer::after_batch(const FlatBatch& fb) {
  switch (cfg_.method) {
    case Method::kOrdisco:
    case Method::kSmb:
    case Method::kSmbUmb: {
      if (smb_.policy() == SupervisedPolicy::kMeanOfFeature) {
        const long dim = cfg_.arch.image.size();
        auto feature_fn = [&](const Sample& s) {
          Mat x(dim, 1);
          for (long i = 0; i < dim; ++i)
            x(i, 0) = static_cast<double>(s.image[static_cast<std::size_t>(i)]);
          Mat f = model_.c.features(x);
          return std::vector<double>(f.data(), f.data() + f.size());
        };
        smb_.update(fb.batch->labeled, feature_fn);
      } else {
        smb_.update(fb.batch->labeled);
      }
      if (cfg_.method == Method::kSmbUmb) {
        umb_.update(fb.batch->unlabeled, rng_buffer_);
      }
      break;
    }
    case Method::kJt:
      jt_labeled_.insert(jt_labeled_.end(), fb.batch->labeled.begin(),
                         fb.batch->labeled.end());
      jt_unlabeled_.insert(jt_unlabeled_.end(), fb.batch->unlabeled.begin(),
                           fb.batch->unlabeled.end());
      break;
    case Method::kSt:
      break;
    case Method::kEwc:
    case Method::kMas: {
      const auto& labeled = fb.batch->labeled;
      const long dim = cfg_.arch.image.size();
      Mat x(dim, static_cast<long>(labeled.size()));
      std::vector<int> y;
      for (std::size_t j = 0; j < labeled.size(); ++j) {
        for (long i = 0; i < dim; ++i)
          x(i, static_cast<long>(j)) =
              static_cast<double>(labeled[j].image[static_cast<std::size_t>(i)]);
        y.push_back(labeled[j].label);
      }
      Vec omega_b = cfg_.method == Method::kEwc
                        ? estimate_ewc_importance(model_.c, x, y)
                        : estimate_mas_importance(model_.c, x, true);
      if (cfg_.reg_scope == "sl_plus_ul" && !fb.batch->unlabeled.empty()) {
        // Add the consistency-loss contribution from unlabeled data.
        const auto& ul = fb.batch->unlabeled;
        Mat xu(dim, static_cast<long>(ul.size()));
        for (std::size_t j = 0; j < ul.size(); ++j)
          for (long i = 0; i < dim; ++i)
            xu(i, static_cast<long>(j)) =
                static_cast<double>(ul[j].image[static_cast<std::size_t>(i)]);
        Vec extra = Vec::Zero(omega_b.size());
        for (long j = 0; j < xu.cols(); ++j) {
          Mat logits = model_.c.forward(xu.col(j), false, nullptr);
          Mat p = nn::softmax(logits);
          Mat pt = nn::softmax(teacher_.net.forward(xu.col(j), false, nullptr));
          Mat g = nn::softmax_vjp(p, Mat(2.0 * (p - pt)));
          model_.c.zero_grad();
          model_.c.backward(g);
          const auto& grad = model_.c.grad();
          for (std::size_t i = 0; i < grad.size(); ++i) {
            extra(static_cast<long>(i)) += cfg_.method == Method::kEwc
                                               ? grad[i] * grad[i]
                                               : std::abs(grad[i]);
          }
        }
        model_.c.zero_grad();
        omega_b += extra / static_cast<double>(xu.cols());
      }
      const double b = static_cast<double>(omega_batches_ + 1);
      if (omega_.size() == 0) omega_ = Vec::Zero(omega_b.size());
      omega_ = ((b - 1.0) * omega_ + omega_b) / b;
      ++omega_batches_;
      anchor_c_ = model_.c.theta();
      break;
    }
  }

  if (cfg_.method == Method::kOrdisco && cfg_.reg_on) {
    const auto& ul = fb.batch->unlabeled;
    if (!ul.empty()) {
      const long dim = cfg_.arch.image.size();
      std::vector<Mat> imgs;
      const std::size_t cap =
          std::min<std::size_t>(ul.size(), static_cast<std::size_t>(cfg_.xi_subsample_cap));
      imgs.reserve(cap);
      for (std::size_t j = 0; j < cap; ++j) {
        Mat x(dim, 1);
        for (long i = 0; i < dim; ++i)
          x(i, 0) = static_cast<double>(ul[j].image[static_cast<std::size_t>(i)]);
        imgs.push_back(std::move(x));
      }
      Vec xi_b = reg::estimate_batch_importance(model_, imgs, cfg_.xi_subsample_cap);
      reg::update_running_importance(xi_, xi_b);
    }
    anchor_ = snapshot_discriminator(model_.d, fb.batch->batch_index);
  }
}

void Trainer::evaluate_batch(const SemiSupBatch& batch, double wall_time_s) {
  const std::vector<Sample>* test = test_set_;
  std::vector<Sample> subsample;
  if (cfg_.eval_max_test > 0 &&
      static_cast<int>(test_set_->size()) > cfg_.eval_max_test) {
    Rng r = Rng::substream(cfg_.seed, "eval",
                           static_cast<std::uint64_t>(batch.batch_index));
    auto idx = r.sample_without_replacement(test_set_->size(),
                                            static_cast<std::size_t>(cfg_.eval_max_test));
    for (auto i : idx) subsample.push_back((*test_set_)[i]);
    test = &subsample;
  }
  auto report = eval::averaged_accuracy(model_.c, *test, classes_seen_);
  MetricsRecord rec;
  rec.batch_or_task_index = batch.batch_index;
  rec.averaged_accuracy = report.averaged_accuracy;
  rec.per_class_accuracy = report.per_class_accuracy;
  rec.wall_time_s = wall_time_s;
  rec.method = to_string(cfg_.method);
  rec.seed = cfg_.seed;
  metrics_.push_back(std::move(rec));
}

void Trainer::train_one_batch() {
  const FlatBatch& fb = flat_[static_cast<std::size_t>(next_batch_)];
  const auto t0 = std::chrono::steady_clock::now();
  for (int step = 0; step < cfg_.steps_per_batch; ++step) {
    train_inner_step(next_batch_);
  }
  after_batch(fb);
  const auto t1 = std::chrono::steady_clock::now();
  evaluate_batch(*fb.batch, std::chrono::duration<double>(t1 - t0).count());
  ++next_batch_;
}

std::vector<MetricsRecord> Trainer::run() { return run(total_batches()); }

std::vector<MetricsRecord> Trainer::run(int max_batches) {
  for (int i = 0; i < max_batches && !done(); ++i) train_one_batch();
  return metrics_;
}

std::string Trainer::diagnostic_dump() const {
  std::ostringstream os;
  os << "method=" << to_string(cfg_.method) << "\n"
     << "seed=" << cfg_.seed << "\n"
     << "config_hash=" << config_hash_ << "\n"
     << "batches_completed=" << next_batch_ << "\n"
     << "losses: sl=" << last_losses_.sl << " ul=" << last_losses_.ul
     << " d_real=" << last_losses_.d_real << " d_fake_gen=" << last_losses_.d_fake_gen
     << " d_fake_cls=" << last_losses_.d_fake_cls << " g=" << last_losses_.g
     << " replay_sl=" << last_losses_.replay_sl
     << " replay_ul=" << last_losses_.replay_ul
     << " penalty=" << last_losses_.penalty << "\n"
     << "rng_train=" << rng_train_.serialize() << "\n"
     << "rng_sample=" << rng_sample_.serialize() << "\n";
  return os.str();
}

namespace {
constexpr char kCkptMagic[] = "ORCK";
constexpr std::uint64_t kCkptVersion = 1;
}  // namespace

void Trainer::save_checkpoint(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open checkpoint for writing: " + tmp);
    os.write(kCkptMagic, 4);
    ckpt::write_u64(os, kCkptVersion);
    ckpt::write_string(os, config_hash_);
    ckpt::write_i64(os, next_batch_);

    ckpt::write_doubles(os, model_.c.theta());
    ckpt::write_doubles(os, model_.g.theta());
    ckpt::write_doubles(os, model_.d.theta());
    ckpt::write_doubles(os, teacher_.net.theta());
    std::ostringstream aux;
    model_.c.save_aux(aux);
    model_.g.save_aux(aux);
    model_.d.save_aux(aux);
    ckpt::write_string(os, aux.str());

    std::ostringstream adam;
    adam_c_.save(adam);
    adam_g_.save(adam);
    adam_d_.save(adam);
    ckpt::write_string(os, adam.str());

    ckpt::write_samples(os, smb_.entries());
    ckpt::write_samples(os, umb_.entries());
    ckpt::write_i64(os, umb_.seen_count());

    ckpt::write_eigen(os, xi_.running.size() > 0 ? xi_.running : Vec());
    ckpt::write_i64(os, xi_.batches_seen);
    ckpt::write_doubles(os, anchor_.theta);
    ckpt::write_i64(os, anchor_.taken_after_batch);

    ckpt::write_eigen(os, omega_.size() > 0 ? omega_ : Vec());
    ckpt::write_i64(os, omega_batches_);
    ckpt::write_doubles(os, anchor_c_);

    ckpt::write_string(os, rng_train_.serialize());
    ckpt::write_string(os, rng_sample_.serialize());
    ckpt::write_string(os, rng_buffer_.serialize());

    ckpt::write_u64(os, metrics_.size());
    for (const auto& m : metrics_) {
      ckpt::write_i64(os, m.batch_or_task_index);
      ckpt::write_f64(os, m.averaged_accuracy);
      ckpt::write_doubles(os, m.per_class_accuracy);
      ckpt::write_f64(os, m.wall_time_s);
      ckpt::write_string(os, m.method);
      ckpt::write_u64(os, m.seed);
    }
    if (!os) throw DataError("checkpoint write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void Trainer::load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  if (!is.read(magic, 4) || std::string(magic, 4) != kCkptMagic) {
    throw DataError("bad checkpoint magic in " + path);
  }
  if (ckpt::read_u64(is) != kCkptVersion) {
    throw DataError("unsupported checkpoint version in " + path);
  }
  const std::string saved_hash = ckpt::read_string(is);
  if (!saved_hash.empty() && !config_hash_.empty() && saved_hash != config_hash_) {
    throw ConfigError("checkpoint/config mismatch: saved hash " + saved_hash +
                      " vs " + config_hash_);
  }
  next_batch_ = static_cast<int>(ckpt::read_i64(is));
  if (next_batch_ > total_batches()) {
    throw ConfigError("checkpoint is ahead of the provided task sequence");
  }

  // Copy in place: the layers hold views into the existing parameter storage.
  auto restore_theta = [&is](std::vector<double>& dst) {
    std::vector<double> v = ckpt::read_doubles(is);
    if (v.size() != dst.size()) {
      throw DataError("checkpoint parameter count mismatch");
    }
    std::copy(v.begin(), v.end(), dst.begin());
  };
  restore_theta(model_.c.theta());
  restore_theta(model_.g.theta());
  restore_theta(model_.d.theta());
  restore_theta(teacher_.net.theta());
  std::istringstream aux(ckpt::read_string(is));
  model_.c.load_aux(aux);
  model_.g.load_aux(aux);
  model_.d.load_aux(aux);

  std::istringstream adam(ckpt::read_string(is));
  adam_c_.load(adam);
  adam_g_.load(adam);
  adam_d_.load(adam);

  smb_.set_entries(ckpt::read_samples(is));
  auto umb_entries = ckpt::read_samples(is);
  umb_.restore(std::move(umb_entries), ckpt::read_i64(is));

  xi_.running = ckpt::read_eigen(is);
  xi_.batches_seen = static_cast<int>(ckpt::read_i64(is));
  anchor_.theta = ckpt::read_doubles(is);
  anchor_.taken_after_batch = static_cast<int>(ckpt::read_i64(is));

  omega_ = ckpt::read_eigen(is);
  omega_batches_ = static_cast<int>(ckpt::read_i64(is));
  anchor_c_ = ckpt::read_doubles(is);

  rng_train_.deserialize(ckpt::read_string(is));
  rng_sample_.deserialize(ckpt::read_string(is));
  rng_buffer_.deserialize(ckpt::read_string(is));

  metrics_.clear();
  const auto nm = ckpt::read_u64(is);
  for (std::uint64_t i = 0; i < nm; ++i) {
    MetricsRecord m;
    m.batch_or_task_index = static_cast<int>(ckpt::read_i64(is));
    m.averaged_accuracy = ckpt::read_f64(is);
    m.per_class_accuracy = ckpt::read_doubles(is);
    m.wall_time_s = ckpt::read_f64(is);
    m.method = ckpt::read_string(is);
    m.seed = ckpt::read_u64(is);
    metrics_.push_back(std::move(m));
  }

  // Rebuild pools and class bookkeeping from the sequence prefix.
  jt_labeled_.clear();
  jt_unlabeled_.clear();
  classes_seen_.clear();
  for (int i = 0; i < next_batch_; ++i) {
    const FlatBatch& fb = flat_[static_cast<std::size_t>(i)];
    for (int c : sequence_->classes_per_task[static_cast<std::size_t>(fb.task_index)]) {
      classes_seen_.insert(c);
    }
    if (cfg_.method == Method::kJt) {
      jt_labeled_.insert(jt_labeled_.end(), fb.batch->labeled.begin(),
                         fb.batch->labeled.end());
      jt_unlabeled_.insert(jt_unlabeled_.end(), fb.batch->unlabeled.begin(),
                           fb.batch->unlabeled.end());
    }
  }
  classes_seen_sorted_.assign(classes_seen_.begin(), classes_seen_.end());
}

std::vector<SweepRow> sweep(const std::vector<SweepEntry>& entries,
                            const TaskSequence& sequence,
                            const std::vector<Sample>& test_set) {
  if (entries.empty()) throw ConfigError("sweep: at least one config required");
  std::vector<SweepRow> rows;
  for (const auto& entry : entries) {
    SweepRow row;
    row.label = entry.label;
    row.seed = entry.config.seed;
    try {
      Trainer trainer(sequence, entry.config, test_set);
      auto metrics = trainer.run();
      row.final_accuracy = metrics.back().averaged_accuracy;
      for (const auto& m : metrics) {
        row.best_accuracy = std::max(row.best_accuracy, m.averaged_accuracy);
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "label,seed,final_accuracy,best_accuracy,error\n";
  os.precision(10);
  for (const auto& r : rows) {
    os << r.label << ',' << r.seed << ',' << r.final_accuracy << ','
       << r.best_accuracy << ',' << r.error << '\n';
  }
  return os.str();
}

}  // namespace ordisco::train
