#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ordisco/config.hpp"
#include "ordisco/errors.hpp"
#include "ordisco/evalmetrics.hpp"
#include "ordisco/manifest.hpp"
#include "ordisco/replaysim.hpp"
#include "ordisco/trainer.hpp"

namespace fs = std::filesystem;
using namespace ordisco;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw DataError("cannot open for writing: " + tmp);
    os << text;
  }
  fs::rename(tmp, path);
}

struct SplitArgs {
  std::string dataset_path;
  int classes = 10, per_class = 200, side = 8;
  int batches = 30, labels = 3;
  std::string scenario = "new_instance";
  int tasks = 0;  // NEW_CLASS: number of consecutive-pair tasks (0 = pairs)
  std::uint64_t seed = 0;
  std::string out = "manifest.json";
};

Dataset load_split_dataset(const SplitArgs& a) {
  if (!a.dataset_path.empty()) {
    return unpack(read_packed(a.dataset_path), fs::path(a.dataset_path).stem().string());
  }
  Dataset ds = gen_synthetic(a.classes, a.per_class, a.side, a.seed);
  ds.id = "synthetic" + std::to_string(a.classes);
  return ds;
}

int cmd_split(const SplitArgs& a) {
  Dataset ds = load_split_dataset(a);
  BenchmarkSpec spec;
  spec.dataset_id = ds.id;
  spec.num_batches = a.batches;
  spec.labels_per_class = a.labels;
  spec.scenario = scenario_from_string(a.scenario);
  spec.seed = a.seed;
  if (spec.scenario == Scenario::kNewClass) {
    spec.classes_per_task = default_class_pairs(ds.num_classes);
  }
  TaskSequence seq = split(ds, spec);
  write_manifest(seq, spec, a.out);
  int labeled = 0;
  for (const auto& task : seq.tasks)
    for (const auto& b : task) labeled += static_cast<int>(b.labeled.size());
  std::cout << "wrote " << a.out << ": " << seq.total_batches() << " batches, "
            << labeled << " labeled samples total\n";
  return 0;
}

struct TrainArgs {
  std::string config_path;
  std::string out_dir_override;
  std::string resume;
  int max_batches = 0;  // 0 = run to completion
};

std::string run_dir_for(const config::RunConfig& cfg, const std::string& hash) {
  std::ostringstream name;
  name << train::to_string(cfg.train.method) << "-" << cfg.benchmark.name() << "-seed"
       << cfg.train.seed << "-" << hash.substr(0, 8);
  return (fs::path(config::resolve_output_dir(cfg)) / name.str()).string();
}

int cmd_train(const TrainArgs& a) {
  config::RunConfig cfg = config::load_run_config(a.config_path);
  if (!a.out_dir_override.empty()) cfg.output_dir = a.out_dir_override;
  const std::string hash = config::config_hash(cfg);
  config::BenchmarkData data = config::load_benchmark(cfg);
  cfg.train.arch.image = data.train.shape;
  cfg.train.arch.num_classes = data.train.num_classes;

  const std::string dir = run_dir_for(cfg, hash);
  fs::create_directories(dir);
  write_text_atomic(dir + "/run_config.json", config::run_config_json(cfg) + "\n");

  train::Trainer trainer(data.sequence, cfg.train, data.test.samples, hash);
  if (!a.resume.empty()) trainer.load_checkpoint(a.resume);

  try {
    while (!trainer.done() &&
           (a.max_batches == 0 || trainer.batches_completed() < a.max_batches)) {
      trainer.run(1);
      const int b = trainer.batches_completed();
      if (cfg.checkpoint_every > 0 && b % cfg.checkpoint_every == 0) {
        trainer.save_checkpoint(dir + "/checkpoint_batch" + std::to_string(b) + ".bin");
      }
      if (cfg.sample_sheet_every > 0 && b % cfg.sample_sheet_every == 0 &&
          cfg.train.method == train::Method::kOrdisco) {
        eval::write_sample_sheet(trainer.model().g, cfg.train.arch,
                                 static_cast<int>(trainer.classes_seen().size()), 8,
                                 cfg.train.seed,
                                 dir + "/samples_batch" + std::to_string(b) + ".png");
      }
      const auto& m = trainer.metrics().back();
      std::cout << "batch " << m.batch_or_task_index << " acc " << m.averaged_accuracy
                << " (" << m.wall_time_s << "s)\n";
    }
  } catch (const NumericalError& e) {
    write_text_atomic(dir + "/diagnostic_dump.txt",
                      std::string(e.what()) + "\n\n" + trainer.diagnostic_dump());
    write_text_atomic(dir + "/metrics.csv",
                      eval::metrics_csv(trainer.metrics(), hash));
    std::cerr << "numerical failure: " << e.what() << " (dump in " << dir << ")\n";
    return kExitNumerical;
  }

  trainer.save_checkpoint(dir + "/checkpoint.bin");
  write_text_atomic(dir + "/metrics.csv", eval::metrics_csv(trainer.metrics(), hash));
  std::cout << "wrote " << dir << "/metrics.csv\n";
  return 0;
}

struct EvalArgs {
  std::string config_path;
  std::string checkpoint;
  std::string test_path;
  std::string out = "eval_metrics.csv";
};

int cmd_eval(const EvalArgs& a) {
  config::RunConfig cfg = config::load_run_config(a.config_path);
  if (!a.test_path.empty()) cfg.test_dataset_path = a.test_path;
  const std::string hash = config::config_hash(cfg);
  config::BenchmarkData data = config::load_benchmark(cfg);
  cfg.train.arch.image = data.train.shape;
  cfg.train.arch.num_classes = data.train.num_classes;

  train::Trainer trainer(data.sequence, cfg.train, data.test.samples, hash);
  trainer.load_checkpoint(a.checkpoint);
  auto report = eval::averaged_accuracy(trainer.model().c, data.test.samples,
                                        trainer.classes_seen());
  MetricsRecord rec;
  rec.batch_or_task_index = trainer.batches_completed();
  rec.averaged_accuracy = report.averaged_accuracy;
  rec.per_class_accuracy = report.per_class_accuracy;
  rec.method = train::to_string(cfg.train.method);
  rec.seed = cfg.train.seed;
  write_text_atomic(a.out, eval::metrics_csv({rec}, hash));
  std::cout << "averaged accuracy " << report.averaged_accuracy << " over "
            << trainer.classes_seen().size() << " classes; wrote " << a.out << "\n";
  return 0;
}

struct ReplaySimArgs {
  std::string strategy = "ordisco";
  int batches = 20;
  bool inference_each_batch = false;
  long long train_cost = 1, replay_cost = 1, store_cost = 1;
  std::string out;
};

int cmd_replaysim(const ReplaySimArgs& a) {
  namespace rs = ordisco::replaysim;
  rs::UnitCosts costs{a.train_cost, a.replay_cost, a.store_cost};
  rs::CostLedger ledger = rs::simulate(rs::strategy_from_string(a.strategy), a.batches,
                                       costs, a.inference_each_batch);
  const std::string csv = rs::ledger_csv(ledger);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    write_text_atomic(a.out, csv);
  }
  rs::ComplexityFit fit = rs::fit_complexity(ledger);
  std::cout << "strategy " << rs::to_string(ledger.strategy) << ": time "
            << rs::to_string(fit.time) << ", storage " << rs::to_string(fit.storage)
            << ", cumulative time " << ledger.cumulative_time() << ", final storage "
            << ledger.final_storage() << "\n";
  return 0;
}

struct ReportArgs {
  std::vector<std::string> run_dirs;
  std::string out;
};

int cmd_report(const ReportArgs& a) {
  using nlohmann::json;
  json reference_bench;
  std::ostringstream table;
  table << "method,seed,batch_index,averaged_accuracy,config_hash\n";
  for (const std::string& dir : a.run_dirs) {
    const std::string cfg_path = dir + "/run_config.json";
    std::ifstream cf(cfg_path);
    if (!cf) throw DataError("missing " + cfg_path);
    json cfg = json::parse(cf, nullptr, false);
    if (cfg.is_discarded()) throw DataError("invalid JSON in " + cfg_path);
    json bench = cfg.value("benchmark", json::object());
    bench["synthetic"] = cfg.value("data", json::object()).value("synthetic", json());
    if (reference_bench.is_null()) {
      reference_bench = bench;
    } else if (bench != reference_bench) {
      throw ConfigError("refusing to mix runs with different benchmark specs (" + dir +
                        ")");
    }

    std::ifstream mf(dir + "/metrics.csv");
    if (!mf) throw DataError("missing " + dir + "/metrics.csv");
    std::string line, hash;
    while (std::getline(mf, line)) {
      if (line.rfind("# config_hash=", 0) == 0) {
        hash = line.substr(14);
        continue;
      }
      if (line.rfind("method,", 0) == 0 || line.empty()) continue;
      // method,seed,batch_index,averaged_accuracy,...
      std::istringstream ls(line);
      std::string method, seed, batch, acc;
      std::getline(ls, method, ',');
      std::getline(ls, seed, ',');
      std::getline(ls, batch, ',');
      std::getline(ls, acc, ',');
      table << method << ',' << seed << ',' << batch << ',' << acc << ',' << hash
            << '\n';
    }
  }
  if (a.out.empty()) {
    std::cout << table.str();
  } else {
    write_text_atomic(a.out, table.str());
    std::cout << "wrote " << a.out << "\n";
  }
  return 0;
}

struct SweepArgs {
  std::string config_path;
  std::vector<double> lambda_grid;
  std::vector<std::uint64_t> seeds;
  std::string out = "sweep.csv";
};

int cmd_sweep(const SweepArgs& a) {
  config::RunConfig base = config::load_run_config(a.config_path);
  config::BenchmarkData data = config::load_benchmark(base);
  base.train.arch.image = data.train.shape;
  base.train.arch.num_classes = data.train.num_classes;

  std::vector<double> lambdas =
      a.lambda_grid.empty() ? std::vector<double>{base.train.lambda} : a.lambda_grid;
  std::vector<std::uint64_t> seeds =
      a.seeds.empty() ? std::vector<std::uint64_t>{base.train.seed} : a.seeds;

  std::vector<train::SweepEntry> entries;
  for (double lambda : lambdas) {
    for (std::uint64_t seed : seeds) {
      train::SweepEntry e;
      e.config = base.train;
      e.config.lambda = lambda;
      e.config.seed = seed;
      std::ostringstream label;
      label << "lambda=" << lambda;
      e.label = label.str();
      entries.push_back(std::move(e));
    }
  }
  auto rows = train::sweep(entries, data.sequence, data.test.samples);
  write_text_atomic(a.out, train::sweep_csv(rows));
  std::cout << "wrote " << a.out << " (" << rows.size() << " runs)\n";
  return 0;
}

struct GenArgs {
  int classes = 10, per_class = 200, side = 8;
  std::uint64_t seed = 0;
  std::string out = "dataset.sscd";
};

int cmd_gen(const GenArgs& a) {
  Dataset ds = gen_synthetic(a.classes, a.per_class, a.side, a.seed);
  write_packed(pack(ds), a.out);
  std::cout << "wrote " << a.out << ": " << ds.size() << " samples, " << a.classes
            << " classes, " << a.side << "x" << a.side << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised continual learning with conditional generative replay"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* sg = app.add_subcommand("gen", "Generate a packed synthetic dataset");
  sg->add_option("--classes", gen.classes);
  sg->add_option("--per-class", gen.per_class);
  sg->add_option("--side", gen.side);
  sg->add_option("--seed", gen.seed);
  sg->add_option("--out", gen.out);

  SplitArgs split;
  auto* ss = app.add_subcommand("split", "Split a dataset into an incremental stream");
  ss->add_option("--dataset", split.dataset_path, "packed dataset (omit for synthetic)");
  ss->add_option("--classes", split.classes);
  ss->add_option("--per-class", split.per_class);
  ss->add_option("--side", split.side);
  ss->add_option("--batches", split.batches);
  ss->add_option("--labels", split.labels, "labels per class per batch");
  ss->add_option("--scenario", split.scenario, "new_instance | new_class");
  ss->add_option("--seed", split.seed);
  ss->add_option("--out", split.out);

  TrainArgs tr;
  auto* st = app.add_subcommand("train", "Train one run from a JSON config");
  st->add_option("--config", tr.config_path)->required();
  st->add_option("--out-dir", tr.out_dir_override, "override output.dir");
  st->add_option("--resume", tr.resume, "checkpoint to resume from");
  st->add_option("--max-batches", tr.max_batches, "stop after this many batches");

  EvalArgs ev;
  auto* se = app.add_subcommand("eval", "Evaluate a checkpoint on a test set");
  se->add_option("--config", ev.config_path)->required();
  se->add_option("--checkpoint", ev.checkpoint)->required();
  se->add_option("--test", ev.test_path, "packed test dataset override");
  se->add_option("--out", ev.out);

  ReplaySimArgs rs;
  auto* sr = app.add_subcommand("replaysim", "Replay-strategy cost simulator");
  sr->add_option("--strategy", rs.strategy, "s1 | s2 | ordisco");
  sr->add_option("--batches", rs.batches);
  sr->add_flag("--inference-each-batch", rs.inference_each_batch);
  sr->add_option("--train-cost", rs.train_cost);
  sr->add_option("--replay-cost", rs.replay_cost);
  sr->add_option("--store-cost", rs.store_cost);
  sr->add_option("--out", rs.out, "ledger CSV path (default stdout)");

  ReportArgs rp;
  auto* so = app.add_subcommand("report", "Aggregate metrics across run directories");
  so->add_option("dirs", rp.run_dirs, "run directories")->required();
  so->add_option("--out", rp.out);

  SweepArgs sw;
  auto* sv = app.add_subcommand("sweep", "Lambda/seed sweep from a base config");
  sv->add_option("--config", sw.config_path)->required();
  sv->add_option("--lambda-grid", sw.lambda_grid)->delimiter(',');
  sv->add_option("--seeds", sw.seeds)->delimiter(',');
  sv->add_option("--out", sw.out);

  auto* sx = app.add_subcommand("example-config", "Print an annotated example config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }

  try {
    if (sg->parsed()) return cmd_gen(gen);
    if (ss->parsed()) return cmd_split(split);
    if (st->parsed()) return cmd_train(tr);
    if (se->parsed()) return cmd_eval(ev);
    if (sr->parsed()) return cmd_replaysim(rs);
    if (so->parsed()) return cmd_report(rp);
    if (sv->parsed()) return cmd_sweep(sw);
    if (sx->parsed()) {
      std::cout << config::example_run_config() << "\n";
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
