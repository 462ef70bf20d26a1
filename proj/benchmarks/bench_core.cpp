#include <benchmark/benchmark.h>

#include <memory>

#include "ordisco/importance.hpp"
#include "ordisco/losses.hpp"
#include "ordisco/nets.hpp"
#include "ordisco/replaysim.hpp"
#include "ordisco/split.hpp"
#include "ordisco/trainer.hpp"

using namespace ordisco;
using nn::Mat;

namespace {

TripleSpec bench_spec() {
  TripleSpec spec;
  spec.image = {8, 8, 1};
  spec.num_classes = 10;
  spec.classifier_arch = "small";
  spec.classifier_width = 8;
  spec.gan_arch = "conv";
  spec.gan_width = 8;
  spec.z_dim = 16;
  return spec;
}

Mat random_batch(long rows, long cols, Rng& rng) {
  Mat x(rows, cols);
  for (long j = 0; j < cols; ++j)
    for (long i = 0; i < rows; ++i) x(i, j) = rng.uniform();
  return x;
}

void bm_classifier_forward_backward(benchmark::State& state) {
  TripleSpec spec = bench_spec();
  Rng rng(1);
  nn::Network net = build_classifier(spec, rng);
  Mat x = random_batch(spec.image.size(), state.range(0), rng);
  std::vector<int> labels(static_cast<std::size_t>(state.range(0)));
  for (auto& y : labels) y = static_cast<int>(rng.uniform_int(10));
  for (auto _ : state) {
    Mat logits = net.forward(x, true, &rng);
    auto ce = losses::supervised_ce(logits, losses::one_hot(labels, 10));
    net.zero_grad();
    net.backward(ce.grad);
    benchmark::DoNotOptimize(net.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_classifier_forward_backward)->Arg(32)->Arg(128);

void bm_discriminator_step(benchmark::State& state) {
  TripleSpec spec = bench_spec();
  Rng rng(2);
  nn::Network d = build_discriminator(spec, rng);
  const long n = state.range(0);
  Mat x = random_batch(spec.image.size(), n, rng);
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (auto& y : labels) y = static_cast<int>(rng.uniform_int(10));
  Mat cond = condition_d_input(spec, x, labels);
  for (auto _ : state) {
    Mat out = d.forward(cond, true, &rng);
    d.zero_grad();
    d.backward(Mat(2.0 * out));
    benchmark::DoNotOptimize(d.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(bm_discriminator_step)->Arg(32)->Arg(128);

void bm_importance_estimation(benchmark::State& state) {
  TripleSpec spec = bench_spec();
  Rng rng(3);
  ModelTriple model = ModelTriple::build(spec, rng);
  std::vector<Mat> images;
  for (long i = 0; i < state.range(0); ++i) {
    images.push_back(random_batch(spec.image.size(), 1, rng));
  }
  for (auto _ : state) {
    nn::Vec xi = reg::estimate_batch_importance(model, images);
    benchmark::DoNotOptimize(xi.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_importance_estimation)->Arg(16)->Arg(64);

void bm_split(benchmark::State& state) {
  Dataset ds = gen_synthetic(10, static_cast<int>(state.range(0)), 8, 4);
  BenchmarkSpec spec;
  spec.dataset_id = "synthetic10";
  spec.num_batches = 30;
  spec.labels_per_class = 3;
  spec.seed = 1;
  for (auto _ : state) {
    TaskSequence seq = split(ds, spec);
    benchmark::DoNotOptimize(seq.tasks.data());
  }
}
BENCHMARK(bm_split)->Arg(90)->Arg(900);

void bm_replaysim(benchmark::State& state) {
  for (auto _ : state) {
    auto ledger = replaysim::simulate(replaysim::Strategy::kOfflineS2,
                                      static_cast<int>(state.range(0)));
    auto fit = replaysim::fit_complexity(ledger);
    benchmark::DoNotOptimize(fit);
  }
}
BENCHMARK(bm_replaysim)->Arg(20)->Arg(200);

void bm_train_step(benchmark::State& state) {
  Dataset train_ds = gen_synthetic(10, 40, 8, 5);
  Dataset test_ds = gen_synthetic(10, 5, 8, 6);
  BenchmarkSpec bspec;
  bspec.dataset_id = "synthetic10";
  bspec.num_batches = 4;
  bspec.labels_per_class = 2;
  bspec.seed = 5;
  TaskSequence seq = split(train_ds, bspec);
  train::TrainConfig cfg;
  cfg.method = train::Method::kOrdisco;
  cfg.seed = 1;
  cfg.steps_per_batch = 1;
  cfg.labeled_batch_size = 16;
  cfg.unlabeled_batch_size = 32;
  cfg.arch = bench_spec();
  train::Trainer trainer(seq, cfg, test_ds.samples);
  trainer.run(1);
  for (auto _ : state) {
    trainer.train_inner_step(1);
  }
}
BENCHMARK(bm_train_step);

}  // namespace

BENCHMARK_MAIN();
