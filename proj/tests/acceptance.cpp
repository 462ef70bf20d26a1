// Acceptance gate: one line per criterion, PASS or FAIL, exit 0 only if all
// criteria hold. Criteria 6 and 9 share the same desk-scale experiment runs.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <vector>

#include "ordisco/evalmetrics.hpp"
#include "ordisco/importance.hpp"
#include "ordisco/losses.hpp"
#include "ordisco/manifest.hpp"
#include "ordisco/replaysim.hpp"
#include "ordisco/split.hpp"
#include "ordisco/trainer.hpp"

using namespace ordisco;
using nn::Mat;
using nn::Vec;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& what,
            const std::string& detail = "") {
  std::printf("[%s] criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion,
              what.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Mat random_mat(long rows, long cols, std::uint64_t seed) {
  Rng rng(seed);
  Mat x(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i) x(i, j) = rng.normal();
  return x;
}

// ------------------------------------------------------------- criterion 1

void criterion_1() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;

  Rng rng(1);
  ParamSnapshot anchor;
  Vec xi(64);
  for (long i = 0; i < 64; ++i) {
    anchor.theta.push_back(rng.normal());
    xi(i) = rng.uniform();
  }
  if (reg::consistency_penalty(anchor.theta, anchor, xi, 0.001) != 0.0) {
    ok = false;
    detail += "penalty at the anchor is nonzero; ";
  }
  for (int t = 0; t < 10000 && ok; ++t) {
    std::vector<double> theta = anchor.theta;
    for (double& v : theta) v += rng.normal();
    if (reg::consistency_penalty(theta, anchor, xi, 0.001) < 0.0) {
      ok = false;
      detail += "negative penalty under perturbation; ";
    }
  }

  TripleSpec spec;
  spec.image = {4, 4, 1};
  spec.num_classes = 3;
  spec.z_dim = 2;
  spec.classifier_arch = "mlp";
  spec.classifier_width = 1;
  spec.dropout = 0.0;
  spec.gan_arch = "mlp";
  spec.gan_width = 2;
  Rng mrng(2);
  ModelTriple model = ModelTriple::build(spec, mrng);
  std::vector<Mat> images;
  for (int i = 0; i < 8; ++i) {
    Mat img(16, 1);
    for (long p = 0; p < 16; ++p) img(p, 0) = rng.uniform();
    images.push_back(img);
  }
  Vec xi_b = reg::estimate_batch_importance(model, images);
  if (xi_b.minCoeff() < 0.0) {
    ok = false;
    detail += "negative importance entry; ";
  }

  reg::ImportanceVector state;
  state.keep_history = true;
  for (int b = 0; b < 10; ++b) {
    Vec sample(32);
    for (long i = 0; i < 32; ++i) sample(i) = rng.uniform();
    reg::update_running_importance(state, sample);
  }
  Vec mean = Vec::Zero(32);
  for (const Vec& h : state.history) mean += h;
  mean /= 10.0;
  if ((state.running - mean).cwiseAbs().maxCoeff() > 1e-6) {
    ok = false;
    detail += "running average drifts from the history mean; ";
  }

  const double secs = seconds_since(t0);
  if (secs >= 10.0) {
    ok = false;
    detail += "runtime " + std::to_string(secs) + "s exceeds 10s";
  }
  report(1, ok, "regularizer suite (zero at anchor, nonnegative, running mean)", detail);
}

// ------------------------------------------------------------- criterion 2

double fd_max_rel_error(nn::Network& net, const std::function<double()>& loss_fn,
                        const std::vector<double>& analytic, double h = 1e-4) {
  double max_rel = 0.0;
  auto& theta = net.theta();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + h;
    const double lp = loss_fn();
    theta[i] = orig - h;
    const double lm = loss_fn();
    theta[i] = orig;
    const double fd = (lp - lm) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
    max_rel = std::max(max_rel, std::abs(fd - analytic[i]) / denom);
  }
  return max_rel;
}

nn::Network small_mlp(int in, int out, std::uint64_t seed, bool sigmoid_head) {
  Rng rng(seed);
  nn::Network net;
  net.add(std::make_unique<nn::Dense>(in, 8));
  net.add(std::make_unique<nn::ReLU>());
  net.add(std::make_unique<nn::Dense>(8, out));
  if (sigmoid_head) net.add(std::make_unique<nn::Sigmoid>(1e-6));
  net.finalize(rng);
  return net;
}

void criterion_2() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  double worst = 0.0;

  {  // supervised cross entropy
    nn::Network net = small_mlp(6, 5, 10, false);  // 6*8+8 + 8*5+5 = 101 params
    Mat x = random_mat(6, 4, 11);
    const std::vector<int> labels{0, 2, 4, 1};
    auto loss = [&]() {
      return losses::supervised_ce(net.forward(x, false, nullptr),
                                   losses::one_hot(labels, 5))
          .value;
    };
    auto ce = losses::supervised_ce(net.forward(x, false, nullptr),
                                    losses::one_hot(labels, 5));
    net.zero_grad();
    net.backward(ce.grad);
    worst = std::max(worst, fd_max_rel_error(net, loss, net.grad()));
  }
  {  // mean-teacher consistency
    nn::Network net = small_mlp(6, 5, 12, false);
    Mat x = random_mat(6, 4, 13);
    const Mat teacher = nn::softmax(random_mat(5, 4, 14));
    auto loss = [&]() {
      Mat p = nn::softmax(net.forward(x, false, nullptr));
      return losses::mt_consistency(p, teacher).value;
    };
    Mat p = nn::softmax(net.forward(x, false, nullptr));
    auto cons = losses::mt_consistency(p, teacher);
    net.zero_grad();
    net.backward(nn::softmax_vjp(p, cons.grad));
    worst = std::max(worst, fd_max_rel_error(net, loss, net.grad()));
  }
  {  // discriminator value (all three streams)
    nn::Network net = small_mlp(4, 1, 15, true);
    Mat x(4, 10);
    x << random_mat(4, 3, 16), random_mat(4, 5, 17), random_mat(4, 2, 18);
    auto neg_value = [&]() {
      Mat d = net.forward(x, false, nullptr);
      Vec dr = d.row(0).segment(0, 3).transpose();
      Vec dg = d.row(0).segment(3, 5).transpose();
      Vec dc = d.row(0).segment(8, 2).transpose();
      return -losses::discriminator_pl_value(dr, dg, dc, 0.5).value;
    };
    Mat d = net.forward(x, false, nullptr);
    auto dv = losses::discriminator_pl_value(
        Vec(d.row(0).segment(0, 3).transpose()),
        Vec(d.row(0).segment(3, 5).transpose()),
        Vec(d.row(0).segment(8, 2).transpose()), 0.5);
    Mat gy(1, 10);
    gy.block(0, 0, 1, 3) = -dv.g_real.transpose();
    gy.block(0, 3, 1, 5) = -dv.g_gen.transpose();
    gy.block(0, 8, 1, 2) = -dv.g_cls.transpose();
    net.zero_grad();
    net.backward(gy);
    worst = std::max(worst, fd_max_rel_error(net, neg_value, net.grad()));
  }
  {  // non-saturating generator loss through a frozen D
    nn::Network g = small_mlp(3, 4, 19, false);
    nn::Network d = small_mlp(4, 1, 20, true);
    Mat z = random_mat(3, 4, 21);
    auto loss = [&]() {
      Mat dd = d.forward(g.forward(z, false, nullptr), false, nullptr);
      return losses::generator_loss(Vec(dd.row(0).transpose()), false).value;
    };
    Mat dd = d.forward(g.forward(z, false, nullptr), false, nullptr);
    auto gl = losses::generator_loss(Vec(dd.row(0).transpose()), false);
    d.zero_grad();
    g.zero_grad();
    g.backward(d.backward(gl.grad.transpose()));
    worst = std::max(worst, fd_max_rel_error(g, loss, g.grad()));
  }
  {  // replay loss
    nn::Network net = small_mlp(5, 4, 22, false);
    Mat x = random_mat(5, 3, 23);
    const Mat teacher = nn::softmax(random_mat(4, 3, 24));
    const std::vector<int> labels{1, 3, 0};
    auto loss = [&]() {
      return losses::replay_loss(net.forward(x, false, nullptr), teacher, labels, 4)
          .total();
    };
    auto rl = losses::replay_loss(net.forward(x, false, nullptr), teacher, labels, 4);
    net.zero_grad();
    net.backward(rl.grad_logits);
    worst = std::max(worst, fd_max_rel_error(net, loss, net.grad()));
  }

  if (worst >= 1e-4) {
    ok = false;
    detail += "max relative error " + std::to_string(worst) + "; ";
  } else {
    char buf[64];
    std::snprintf(buf, sizeof buf, "max relative error %.2e", worst);
    detail += buf;
  }
  const double secs = seconds_since(t0);
  if (secs >= 60.0) {
    ok = false;
    detail += "; runtime " + std::to_string(secs) + "s exceeds 60s";
  }
  report(2, ok, "analytic gradients match central finite differences", detail);
}

// ------------------------------------------------------------- criterion 3

void criterion_3() {
  bool ok = true;
  std::string detail;

  Mat logits = Mat::Zero(10, 4);
  const double ce =
      losses::supervised_ce(logits, losses::one_hot({0, 3, 7, 9}, 10)).value;
  if (std::abs(ce - std::log(10.0)) > 1e-6) {
    ok = false;
    detail += "uniform CE != ln 10; ";
  }

  Vec half = Vec::Constant(6, 0.5);
  const double v = losses::discriminator_pl_value(half, half, half, 0.5).value;
  if (std::abs(v - 2.0 * std::log(0.5)) > 1e-6) {
    ok = false;
    detail += "D value at 0.5 != 2 ln 0.5; ";
  }

  const double beta = 0.99, t0v = 2.0, s = -1.0;
  std::vector<double> teacher{t0v};
  const std::vector<double> student{s};
  for (int n = 0; n < 100; ++n) ema_update(teacher, student, beta);
  const double expect = std::pow(beta, 100) * t0v + (1.0 - std::pow(beta, 100)) * s;
  if (std::abs(teacher[0] - expect) > 1e-10) {
    ok = false;
    detail += "EMA closed form violated";
  }
  report(3, ok, "closed-form spot values (ln 10, 2 ln 0.5, EMA)", detail);
}

// ------------------------------------------------------------- criterion 4

void criterion_4() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;

  Dataset ds = gen_synthetic(10, 90, 8, 1);
  BenchmarkSpec spec;
  spec.dataset_id = "synthetic10";
  spec.num_batches = 30;
  spec.labels_per_class = 3;
  spec.seed = 1;
  TaskSequence seq = split(ds, spec);

  int total_labeled = 0;
  std::set<int> sources;
  std::size_t total = 0;
  for (const auto& b : seq.tasks[0]) {
    if (b.labeled.size() != 30) {
      ok = false;
      detail += "batch " + std::to_string(b.batch_index) + " has " +
                std::to_string(b.labeled.size()) + " labels; ";
      break;
    }
    total_labeled += static_cast<int>(b.labeled.size());
    for (const auto& s : b.labeled) sources.insert(s.source_index);
    for (const auto& s : b.unlabeled) sources.insert(s.source_index);
    total += b.labeled.size() + b.unlabeled.size();
  }
  if (total_labeled != 900) {
    ok = false;
    detail += "total labels " + std::to_string(total_labeled) + " != 900; ";
  }
  if (total != ds.size() || sources.size() != ds.size()) {
    ok = false;
    detail += "batches do not partition the dataset; ";
  }
  TaskSequence again = split(ds, spec);
  if (manifest_to_string(seq, spec) != manifest_to_string(again, spec)) {
    ok = false;
    detail += "same-seed split not bit-exact; ";
  }
  const double secs = seconds_since(t0);
  if (secs >= 5.0) {
    ok = false;
    detail += "runtime " + std::to_string(secs) + "s exceeds 5s";
  }
  report(4, ok, "splitter counts (30 labels/batch, 900 total, partition, determinism)",
         detail);
}

// ------------------------------------------------------------- criterion 5

void criterion_5() {
  namespace rs = ordisco::replaysim;
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;

  auto s1 = rs::fit_complexity(rs::simulate(rs::Strategy::kOfflineS1, 20));
  auto s2 = rs::fit_complexity(rs::simulate(rs::Strategy::kOfflineS2, 20));
  auto on = rs::fit_complexity(rs::simulate(rs::Strategy::kOrdiscoOnline, 20));
  if (s1.time != rs::ComplexityClass::kLinear ||
      s1.storage != rs::ComplexityClass::kLinear) {
    ok = false;
    detail += "S1 fit wrong; ";
  }
  if (s2.time != rs::ComplexityClass::kQuadratic ||
      s2.storage != rs::ComplexityClass::kConstant) {
    ok = false;
    detail += "S2 fit wrong; ";
  }
  if (on.time != rs::ComplexityClass::kLinear ||
      on.storage != rs::ComplexityClass::kConstant) {
    ok = false;
    detail += "online fit wrong; ";
  }
  const long long replay = rs::simulate(rs::Strategy::kOfflineS2, 20).cumulative_replay();
  if (replay != 20 * 21 / 2) {
    ok = false;
    detail += "S2 replay ops " + std::to_string(replay) + " != 210; ";
  }
  const double secs = seconds_since(t0);
  if (secs >= 1.0) {
    ok = false;
    detail += "runtime exceeds 1s";
  }
  report(5, ok, "replay simulator recovers the complexity table", detail);
}

// ----------------------------------------------- criteria 6 and 9 (shared)

struct ExperimentOutcome {
  std::map<std::string, double> mean_final_accuracy;
  double consistency_reg = 0.0;     // mean over seeds, at batch 5
  double consistency_noreg = 0.0;
  double untrained_consistency = 0.0;
  double oracle_accuracy = 0.0;
  double secs = 0.0;
};

train::TrainConfig experiment_config(train::Method method, std::uint64_t seed,
                                     bool reg_on) {
  train::TrainConfig cfg;
  cfg.method = method;
  cfg.seed = seed;
  cfg.reg_on = reg_on;
  cfg.lambda = 1.0;  // desk scale: few parameters, so a stronger pin on D
  cfg.steps_per_batch = 700;
  cfg.labeled_batch_size = 20;
  cfg.unlabeled_batch_size = 40;
  cfg.xi_subsample_cap = 64;
  cfg.eval_max_test = 0;
  cfg.arch.image = {8, 8, 1};
  cfg.arch.num_classes = 10;
  cfg.arch.classifier_arch = "small";
  cfg.arch.classifier_width = 4;
  cfg.arch.gan_width = 8;
  cfg.arch.z_dim = 8;
  return cfg;
}

// Supervised oracle for judging generated-sample labels.
nn::Network train_oracle(const Dataset& train_ds, const Dataset& test_ds,
                         double& accuracy_out) {
  TripleSpec spec;
  spec.image = train_ds.shape;
  spec.num_classes = train_ds.num_classes;
  spec.classifier_arch = "small";
  spec.classifier_width = 4;
  spec.dropout = 0.0;
  Rng rng = Rng::substream(123, "oracle");
  nn::Network net = build_classifier(spec, rng);
  nn::Adam opt(net.param_count(), 1e-3);
  const long dim = train_ds.shape.size();
  Rng batch_rng = Rng::substream(123, "oracle_batches");
  for (int step = 0; step < 1500; ++step) {
    const int n = 32;
    Mat x(dim, n);
    std::vector<int> y;
    for (int j = 0; j < n; ++j) {
      const auto pick = batch_rng.uniform_int(train_ds.size());
      const Sample& s = train_ds.samples[pick];
      for (long i = 0; i < dim; ++i)
        x(i, j) = static_cast<double>(s.image[static_cast<std::size_t>(i)]);
      y.push_back(s.label);
    }
    Mat logits = net.forward(x, false, nullptr);
    auto ce = losses::supervised_ce(logits, losses::one_hot(y, spec.num_classes));
    net.zero_grad();
    net.backward(ce.grad);
    opt.step(net.theta(), net.grad());
  }
  std::set<int> all;
  for (int c = 0; c < train_ds.num_classes; ++c) all.insert(c);
  accuracy_out = eval::averaged_accuracy(net, test_ds.samples, all).averaged_accuracy;
  return net;
}

ExperimentOutcome run_experiment() {
  const auto t0 = Clock::now();
  ExperimentOutcome out;

  Dataset train_ds = gen_synthetic(10, 120, 8, 42);
  Dataset test_ds = gen_synthetic(10, 25, 8, 777);
  nn::Network oracle = train_oracle(train_ds, test_ds, out.oracle_accuracy);

  struct Variant {
    std::string name;
    train::Method method;
    bool reg_on;
  };
  const std::vector<Variant> variants{
      {"st", train::Method::kSt, false},
      {"smb", train::Method::kSmb, false},
      {"ordisco_noreg", train::Method::kOrdisco, false},
      {"ordisco_reg", train::Method::kOrdisco, true},
  };
  const std::vector<std::uint64_t> seeds{1, 2, 3};

  std::map<std::string, double> acc_sum;
  double cons_reg_sum = 0.0, cons_noreg_sum = 0.0, untrained_sum = 0.0;

  for (std::uint64_t seed : seeds) {
    BenchmarkSpec spec;
    spec.dataset_id = "synthetic10";
    spec.num_batches = 10;
    spec.labels_per_class = 2;
    spec.scenario = Scenario::kNewClass;  // classes arrive two at a time
    spec.classes_per_task = default_class_pairs(10);
    spec.seed = seed;
    TaskSequence seq = split(train_ds, spec);

    for (const auto& v : variants) {
      train::TrainConfig cfg = experiment_config(v.method, seed, v.reg_on);
      train::Trainer trainer(seq, cfg, test_ds.samples);
      if (v.method == train::Method::kOrdisco) {
        trainer.run(5);  // mid-stream: judge conditional label consistency
        auto lc = eval::conditional_label_consistency(
            trainer.model().g, cfg.arch, oracle,
            static_cast<int>(trainer.classes_seen().size()), 500, 99,
            out.oracle_accuracy);
        if (v.reg_on) {
          cons_reg_sum += lc.fraction;
        } else {
          cons_noreg_sum += lc.fraction;
        }
      }
      auto metrics = trainer.run();
      acc_sum[v.name] += metrics.back().averaged_accuracy;
      std::printf("  [experiment] %s seed %llu: final acc %.4f\n", v.name.c_str(),
                  static_cast<unsigned long long>(seed),
                  metrics.back().averaged_accuracy);
      std::fflush(stdout);
    }

    // Untrained generator: conditional consistency should sit at chance.
    train::TrainConfig cfg = experiment_config(train::Method::kOrdisco, seed, true);
    Rng grng = Rng::substream(seed, "untrained_g");
    nn::Network g = build_generator(cfg.arch, grng);
    untrained_sum += eval::conditional_label_consistency(g, cfg.arch, oracle, 10, 2000,
                                                         seed, out.oracle_accuracy)
                         .fraction;
  }

  for (auto& [name, sum] : acc_sum) {
    out.mean_final_accuracy[name] = sum / static_cast<double>(seeds.size());
  }
  out.consistency_reg = cons_reg_sum / static_cast<double>(seeds.size());
  out.consistency_noreg = cons_noreg_sum / static_cast<double>(seeds.size());
  out.untrained_consistency = untrained_sum / static_cast<double>(seeds.size());
  out.secs = seconds_since(t0);
  return out;
}

void criterion_6(const ExperimentOutcome& exp) {
  bool ok = true;
  std::string detail;
  const double st = exp.mean_final_accuracy.at("st");
  const double smb = exp.mean_final_accuracy.at("smb");
  const double noreg = exp.mean_final_accuracy.at("ordisco_noreg");
  const double reg = exp.mean_final_accuracy.at("ordisco_reg");
  char buf[160];
  std::snprintf(buf, sizeof buf, "reg=%.3f noreg=%.3f smb=%.3f st=%.3f (%.0fs)", reg,
                noreg, smb, st, exp.secs);
  detail = buf;
  if (!(reg >= noreg)) {
    ok = false;
    detail += "; +Reg below -Reg";
  }
  if (!(noreg > smb)) {
    ok = false;
    detail += "; -Reg not above SMB";
  }
  if (!(smb > st)) {
    ok = false;
    detail += "; SMB not above ST";
  }
  if (!(reg >= smb + 0.03)) {
    ok = false;
    detail += "; +Reg does not exceed SMB by 3 points";
  }
  if (exp.secs >= 900.0) {
    ok = false;
    detail += "; runtime exceeds 15 minutes";
  }
  report(6, ok, "desk-scale stream experiment ordering", detail);
}

void criterion_9(const ExperimentOutcome& exp) {
  bool ok = true;
  char buf[160];
  std::snprintf(buf, sizeof buf, "reg=%.3f noreg=%.3f untrained=%.3f oracle=%.3f",
                exp.consistency_reg, exp.consistency_noreg, exp.untrained_consistency,
                exp.oracle_accuracy);
  std::string detail = buf;
  if (!(exp.consistency_reg > exp.consistency_noreg)) {
    ok = false;
    detail += "; +Reg consistency not above -Reg";
  }
  if (std::abs(exp.untrained_consistency - 0.1) > 0.03) {
    ok = false;
    detail += "; untrained generator off chance level";
  }
  if (exp.oracle_accuracy < 0.9) {
    ok = false;
    detail += "; oracle accuracy below 0.9";
  }
  report(9, ok, "conditional label consistency at mid-stream", detail);
}

// ------------------------------------------------------------- criterion 7

void criterion_7() {
  bool ok = true;
  std::string detail;

  // 1-parameter sigmoid: D(x)=sigmoid(w x), w=0, x=1 -> xi = |d D^2/dw| = 0.25.
  {
    nn::Network d;
    Rng rng(1);
    d.add(std::make_unique<nn::Dense>(1, 1));
    d.add(std::make_unique<nn::Sigmoid>());
    d.finalize(rng);
    std::fill(d.theta().begin(), d.theta().end(), 0.0);
    Mat x = Mat::Ones(1, 1);
    Mat out = d.forward(x, false, nullptr);
    d.zero_grad();
    d.backward(Mat(2.0 * out));
    if (std::abs(std::abs(d.grad()[0]) - 0.25) > 1e-8) {
      ok = false;
      detail += "sigmoid case != 0.25; ";
    }
  }

  TripleSpec spec;
  spec.image = {4, 4, 1};
  spec.num_classes = 3;
  spec.z_dim = 2;
  spec.classifier_arch = "mlp";
  spec.classifier_width = 1;
  spec.dropout = 0.0;
  spec.gan_arch = "mlp";
  spec.gan_width = 2;
  Rng rng(2);
  ModelTriple model = ModelTriple::build(spec, rng);
  Rng irng(3);
  std::vector<Mat> images;
  for (int i = 0; i < 8; ++i) {
    Mat img(16, 1);
    for (long p = 0; p < 16; ++p) img(p, 0) = irng.uniform();
    images.push_back(img);
  }
  Vec xi = reg::estimate_batch_importance(model, images);
  Vec brute = Vec::Zero(xi.size());
  for (const Mat& img : images) {
    Mat logits = model.c.forward(img, false, nullptr);
    long yhat = 0;
    logits.col(0).maxCoeff(&yhat);
    Mat dval = model.d.forward(
        condition_d_input(spec, img, {static_cast<int>(yhat)}), false, nullptr);
    model.d.zero_grad();
    model.d.backward(Mat(2.0 * dval));
    for (long i = 0; i < brute.size(); ++i) {
      brute(i) += std::abs(model.d.grad()[static_cast<std::size_t>(i)]);
    }
  }
  brute /= static_cast<double>(images.size());
  const double diff = (xi - brute).cwiseAbs().maxCoeff();
  if (diff > 1e-6) {
    ok = false;
    detail += "batched vs per-sample difference " + std::to_string(diff);
  }
  report(7, ok, "importance estimation matches per-sample brute force", detail);
}

// ------------------------------------------------------------- criterion 8

void criterion_8() {
  namespace fs = std::filesystem;
  bool ok = true;
  std::string detail;

  Dataset train_ds = gen_synthetic(10, 40, 8, 5);
  Dataset test_ds = gen_synthetic(10, 5, 8, 6);
  BenchmarkSpec spec;
  spec.dataset_id = "synthetic10";
  spec.num_batches = 4;
  spec.labels_per_class = 2;
  spec.seed = 5;
  TaskSequence seq = split(train_ds, spec);

  train::TrainConfig cfg = experiment_config(train::Method::kOrdisco, 5, true);
  cfg.steps_per_batch = 20;
  train::Trainer full(seq, cfg, test_ds.samples, "acc8");
  auto reference = full.run();

  train::Trainer first(seq, cfg, test_ds.samples, "acc8");
  first.run(2);
  const std::string path = (fs::temp_directory_path() / "ordisco_acc8.bin").string();
  first.save_checkpoint(path);
  train::Trainer resumed(seq, cfg, test_ds.samples, "acc8");
  resumed.load_checkpoint(path);
  auto metrics = resumed.run();
  fs::remove(path);

  if (metrics.size() != reference.size()) {
    ok = false;
    detail = "metric counts differ";
  } else {
    double worst = 0.0;
    for (std::size_t i = 0; i < metrics.size(); ++i) {
      worst = std::max(worst, std::abs(metrics[i].averaged_accuracy -
                                       reference[i].averaged_accuracy));
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max accuracy gap %.2e", worst);
    detail = buf;
    if (worst > 1e-6) ok = false;
  }
  report(8, ok, "checkpoint interrupt-resume matches the uninterrupted run", detail);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  ExperimentOutcome exp = run_experiment();
  criterion_6(exp);
  criterion_7();
  criterion_8();
  criterion_9(exp);
  if (g_failures > 0) {
    std::printf("%d criterion(s) failing\n", g_failures);
    return 1;
  }
  std::printf("all acceptance criteria pass\n");
  return 0;
}
