#include "ordisco/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ordisco/errors.hpp"

namespace ordisco::config {

using nlohmann::json;

namespace {

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.count(key)) {
      throw ConfigError(where + ": unknown key \"" + key + "\"");
    }
  }
}

template <typename T>
void read_field(const json& obj, const std::string& where, const std::string& key,
                T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  require_keys(root, "config",
               {"seed", "method", "benchmark", "data", "train", "arch", "eval",
                "output"});

  RunConfig cfg;
  std::uint64_t seed = 0;
  read_field(root, "config", "seed", seed);
  cfg.benchmark.seed = seed;
  cfg.train.seed = seed;

  std::string method = "ordisco";
  read_field(root, "config", "method", method);
  cfg.train.method = train::method_from_string(method);

  if (root.contains("benchmark")) {
    const json& b = root["benchmark"];
    require_keys(b, "benchmark",
                 {"dataset_id", "num_batches", "labels_per_class", "scenario",
                  "classes_per_task"});
    read_field(b, "benchmark", "dataset_id", cfg.benchmark.dataset_id);
    read_field(b, "benchmark", "num_batches", cfg.benchmark.num_batches);
    read_field(b, "benchmark", "labels_per_class", cfg.benchmark.labels_per_class);
    std::string scenario = to_string(cfg.benchmark.scenario);
    read_field(b, "benchmark", "scenario", scenario);
    cfg.benchmark.scenario = scenario_from_string(scenario);
    if (b.contains("classes_per_task")) {
      std::vector<std::vector<int>> cpt;
      read_field(b, "benchmark", "classes_per_task", cpt);
      cfg.benchmark.classes_per_task.clear();
      for (const auto& task : cpt) {
        cfg.benchmark.classes_per_task.emplace_back(task.begin(), task.end());
      }
    }
  }
  check(cfg.benchmark.num_batches >= 1, "benchmark.num_batches must be >= 1");
  check(cfg.benchmark.labels_per_class >= 1,
        "benchmark.labels_per_class must be >= 1");

  if (root.contains("data")) {
    const json& d = root["data"];
    require_keys(d, "data", {"dataset", "test_dataset", "synthetic"});
    read_field(d, "data", "dataset", cfg.dataset_path);
    read_field(d, "data", "test_dataset", cfg.test_dataset_path);
    if (d.contains("synthetic")) {
      const json& s = d["synthetic"];
      require_keys(s, "data.synthetic",
                   {"classes", "per_class", "side", "test_per_class"});
      read_field(s, "data.synthetic", "classes", cfg.synthetic_classes);
      read_field(s, "data.synthetic", "per_class", cfg.synthetic_per_class);
      read_field(s, "data.synthetic", "side", cfg.synthetic_side);
      read_field(s, "data.synthetic", "test_per_class", cfg.synthetic_test_per_class);
    }
  }
  check(cfg.synthetic_classes >= 2, "data.synthetic.classes must be >= 2");
  check(cfg.synthetic_per_class >= 1, "data.synthetic.per_class must be >= 1");
  check(cfg.synthetic_side >= 2, "data.synthetic.side must be >= 2");
  check(cfg.synthetic_test_per_class >= 1,
        "data.synthetic.test_per_class must be >= 1");

  if (root.contains("train")) {
    const json& t = root["train"];
    require_keys(t, "train",
                 {"alpha", "lambda", "ema_decay", "consistency_weight", "lr_c",
                  "lr_gd", "adam_beta1_gd", "adam_beta2_gd", "steps_per_batch",
                  "labeled_batch_size", "unlabeled_batch_size",
                  "replay_start_batch", "replay_on", "reg_on",
                  "pseudo_label_sample", "generator_literal_loss",
                  "xi_subsample_cap", "smb_capacity", "umb_capacity",
                  "lambda_reg", "reg_scope"});
    read_field(t, "train", "alpha", cfg.train.alpha);
    read_field(t, "train", "lambda", cfg.train.lambda);
    read_field(t, "train", "ema_decay", cfg.train.ema_decay);
    read_field(t, "train", "consistency_weight", cfg.train.consistency_weight);
    read_field(t, "train", "lr_c", cfg.train.lr_c);
    read_field(t, "train", "lr_gd", cfg.train.lr_gd);
    read_field(t, "train", "adam_beta1_gd", cfg.train.adam_beta1_gd);
    read_field(t, "train", "adam_beta2_gd", cfg.train.adam_beta2_gd);
    read_field(t, "train", "steps_per_batch", cfg.train.steps_per_batch);
    read_field(t, "train", "labeled_batch_size", cfg.train.labeled_batch_size);
    read_field(t, "train", "unlabeled_batch_size", cfg.train.unlabeled_batch_size);
    read_field(t, "train", "replay_start_batch", cfg.train.replay_start_batch);
    read_field(t, "train", "replay_on", cfg.train.replay_on);
    read_field(t, "train", "reg_on", cfg.train.reg_on);
    read_field(t, "train", "pseudo_label_sample", cfg.train.pseudo_label_sample);
    read_field(t, "train", "generator_literal_loss", cfg.train.generator_literal_loss);
    read_field(t, "train", "xi_subsample_cap", cfg.train.xi_subsample_cap);
    read_field(t, "train", "smb_capacity", cfg.train.smb_capacity);
    read_field(t, "train", "umb_capacity", cfg.train.umb_capacity);
    read_field(t, "train", "lambda_reg", cfg.train.lambda_reg);
    read_field(t, "train", "reg_scope", cfg.train.reg_scope);
  }
  check(cfg.train.alpha >= 0.0 && cfg.train.alpha <= 1.0,
        "train.alpha must lie in [0,1]");
  check(cfg.train.lambda >= 0.0, "train.lambda must be >= 0");
  check(cfg.train.ema_decay >= 0.0 && cfg.train.ema_decay < 1.0,
        "train.ema_decay must lie in [0,1)");
  check(cfg.train.lr_c > 0.0 && cfg.train.lr_gd > 0.0,
        "learning rates must be positive");
  check(cfg.train.steps_per_batch >= 1, "train.steps_per_batch must be >= 1");
  check(cfg.train.labeled_batch_size >= 1 && cfg.train.unlabeled_batch_size >= 1,
        "batch sizes must be >= 1");
  check(cfg.train.replay_start_batch >= 1, "train.replay_start_batch must be >= 1");
  check(cfg.train.xi_subsample_cap >= 1, "train.xi_subsample_cap must be >= 1");
  check(cfg.train.smb_capacity >= 0, "train.smb_capacity must be >= 0");
  check(cfg.train.umb_capacity >= 1, "train.umb_capacity must be >= 1");
  check(cfg.train.lambda_reg >= 0.0, "train.lambda_reg must be >= 0");
  check(cfg.train.reg_scope == "sl_only" || cfg.train.reg_scope == "sl_plus_ul",
        "train.reg_scope must be sl_only or sl_plus_ul");

  if (root.contains("arch")) {
    const json& a = root["arch"];
    require_keys(a, "arch",
                 {"z_dim", "classifier", "classifier_width", "dropout", "gan",
                  "gan_width", "spectral_norm", "d_clamp_eps"});
    read_field(a, "arch", "z_dim", cfg.train.arch.z_dim);
    read_field(a, "arch", "classifier", cfg.train.arch.classifier_arch);
    read_field(a, "arch", "classifier_width", cfg.train.arch.classifier_width);
    read_field(a, "arch", "dropout", cfg.train.arch.dropout);
    read_field(a, "arch", "gan", cfg.train.arch.gan_arch);
    read_field(a, "arch", "gan_width", cfg.train.arch.gan_width);
    read_field(a, "arch", "spectral_norm", cfg.train.arch.spectral_norm);
    read_field(a, "arch", "d_clamp_eps", cfg.train.arch.d_clamp_eps);
  }
  check(cfg.train.arch.z_dim >= 1, "arch.z_dim must be >= 1");
  check(cfg.train.arch.classifier_arch == "mlp" ||
            cfg.train.arch.classifier_arch == "small" ||
            cfg.train.arch.classifier_arch == "conv9",
        "arch.classifier must be mlp, small or conv9");
  check(cfg.train.arch.gan_arch == "mlp" || cfg.train.arch.gan_arch == "conv",
        "arch.gan must be mlp or conv");
  check(cfg.train.arch.dropout >= 0.0 && cfg.train.arch.dropout < 1.0,
        "arch.dropout must lie in [0,1)");
  check(cfg.train.arch.d_clamp_eps > 0.0 && cfg.train.arch.d_clamp_eps < 0.5,
        "arch.d_clamp_eps must lie in (0,0.5)");

  if (root.contains("eval")) {
    const json& e = root["eval"];
    require_keys(e, "eval", {"max_test", "sample_sheet_every"});
    read_field(e, "eval", "max_test", cfg.train.eval_max_test);
    read_field(e, "eval", "sample_sheet_every", cfg.sample_sheet_every);
  }
  check(cfg.train.eval_max_test >= 0, "eval.max_test must be >= 0");
  check(cfg.sample_sheet_every >= 0, "eval.sample_sheet_every must be >= 0");

  if (root.contains("output")) {
    const json& o = root["output"];
    require_keys(o, "output", {"dir", "checkpoint_every"});
    read_field(o, "output", "dir", cfg.output_dir);
    read_field(o, "output", "checkpoint_every", cfg.checkpoint_every);
  }
  check(!cfg.output_dir.empty(), "output.dir must not be empty");
  check(cfg.checkpoint_every >= 0, "output.checkpoint_every must be >= 0");

  if (cfg.benchmark.dataset_id.empty()) {
    cfg.benchmark.dataset_id =
        cfg.dataset_path.empty()
            ? "synthetic" + std::to_string(cfg.synthetic_classes)
            : std::filesystem::path(cfg.dataset_path).stem().string();
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_run_config(buf.str());
}

std::string run_config_json(const RunConfig& cfg) {
  json root;
  root["seed"] = cfg.train.seed;
  root["method"] = train::to_string(cfg.train.method);
  json& b = root["benchmark"];
  b["dataset_id"] = cfg.benchmark.dataset_id;
  b["num_batches"] = cfg.benchmark.num_batches;
  b["labels_per_class"] = cfg.benchmark.labels_per_class;
  b["scenario"] = to_string(cfg.benchmark.scenario);
  b["classes_per_task"] = json::array();
  for (const auto& task : cfg.benchmark.classes_per_task) {
    b["classes_per_task"].push_back(std::vector<int>(task.begin(), task.end()));
  }
  json& d = root["data"];
  d["dataset"] = cfg.dataset_path;
  d["test_dataset"] = cfg.test_dataset_path;
  d["synthetic"] = {{"classes", cfg.synthetic_classes},
                    {"per_class", cfg.synthetic_per_class},
                    {"side", cfg.synthetic_side},
                    {"test_per_class", cfg.synthetic_test_per_class}};
  json& t = root["train"];
  t["alpha"] = cfg.train.alpha;
  t["lambda"] = cfg.train.lambda;
  t["ema_decay"] = cfg.train.ema_decay;
  t["consistency_weight"] = cfg.train.consistency_weight;
  t["lr_c"] = cfg.train.lr_c;
  t["lr_gd"] = cfg.train.lr_gd;
  t["adam_beta1_gd"] = cfg.train.adam_beta1_gd;
  t["adam_beta2_gd"] = cfg.train.adam_beta2_gd;
  t["steps_per_batch"] = cfg.train.steps_per_batch;
  t["labeled_batch_size"] = cfg.train.labeled_batch_size;
  t["unlabeled_batch_size"] = cfg.train.unlabeled_batch_size;
  t["replay_start_batch"] = cfg.train.replay_start_batch;
  t["replay_on"] = cfg.train.replay_on;
  t["reg_on"] = cfg.train.reg_on;
  t["pseudo_label_sample"] = cfg.train.pseudo_label_sample;
  t["generator_literal_loss"] = cfg.train.generator_literal_loss;
  t["xi_subsample_cap"] = cfg.train.xi_subsample_cap;
  t["smb_capacity"] = cfg.train.smb_capacity;
  t["umb_capacity"] = cfg.train.umb_capacity;
  t["lambda_reg"] = cfg.train.lambda_reg;
  t["reg_scope"] = cfg.train.reg_scope;
  json& a = root["arch"];
  a["z_dim"] = cfg.train.arch.z_dim;
  a["classifier"] = cfg.train.arch.classifier_arch;
  a["classifier_width"] = cfg.train.arch.classifier_width;
  a["dropout"] = cfg.train.arch.dropout;
  a["gan"] = cfg.train.arch.gan_arch;
  a["gan_width"] = cfg.train.arch.gan_width;
  a["spectral_norm"] = cfg.train.arch.spectral_norm;
  a["d_clamp_eps"] = cfg.train.arch.d_clamp_eps;
  root["eval"] = {{"max_test", cfg.train.eval_max_test},
                  {"sample_sheet_every", cfg.sample_sheet_every}};
  root["output"] = {{"dir", cfg.output_dir},
                    {"checkpoint_every", cfg.checkpoint_every}};
  return root.dump(2);
}

std::string config_hash(const RunConfig& cfg) {
  // Output placement does not affect training behavior, so it is not hashed:
  // the same run written to two directories must share one hash.
  json root = json::parse(run_config_json(cfg));
  root.erase("output");
  const std::string canon = root.dump(2);
  std::uint64_t h = 14695981039346656037ull;
  for (char c : canon) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string resolve_output_dir(const RunConfig& cfg) {
  if (const char* root = std::getenv("ORDISCO_OUTPUT_ROOT")) {
    return (std::filesystem::path(root) /
            std::filesystem::path(cfg.output_dir).filename())
        .string();
  }
  return cfg.output_dir;
}

std::string example_run_config() {
  return R"({
  "seed": 1,
  "method": "ordisco",
  "benchmark": {
    "dataset_id": "synthetic10",
    "num_batches": 10,
    "labels_per_class": 2,
    "scenario": "new_instance",
    "classes_per_task": []
  },
  "data": {
    "dataset": "",
    "test_dataset": "",
    "synthetic": { "classes": 10, "per_class": 200, "side": 8, "test_per_class": 25 }
  },
  "train": {
    "alpha": 0.5,
    "lambda": 0.001,
    "ema_decay": 0.99,
    "consistency_weight": 1.0,
    "lr_c": 0.001,
    "lr_gd": 0.0002,
    "adam_beta1_gd": 0.5,
    "adam_beta2_gd": 0.999,
    "steps_per_batch": 2000,
    "labeled_batch_size": 32,
    "unlabeled_batch_size": 128,
    "replay_start_batch": 2,
    "replay_on": true,
    "reg_on": true,
    "pseudo_label_sample": false,
    "generator_literal_loss": false,
    "xi_subsample_cap": 1024,
    "smb_capacity": 0,
    "umb_capacity": 10000,
    "lambda_reg": 1.0,
    "reg_scope": "sl_only"
  },
  "arch": {
    "z_dim": 16,
    "classifier": "conv9",
    "classifier_width": 8,
    "dropout": 0.1,
    "gan": "conv",
    "gan_width": 16,
    "spectral_norm": true,
    "d_clamp_eps": 1e-6
  },
  "eval": { "max_test": 0, "sample_sheet_every": 0 },
  "output": { "dir": "runs", "checkpoint_every": 0 }
})";
}

BenchmarkData load_benchmark(const RunConfig& cfg) {
  BenchmarkData data;
  if (!cfg.dataset_path.empty()) {
    data.train = unpack(read_packed(cfg.dataset_path),
                        std::filesystem::path(cfg.dataset_path).stem().string());
  } else {
    data.train = gen_synthetic(cfg.synthetic_classes, cfg.synthetic_per_class,
                               cfg.synthetic_side, cfg.benchmark.seed);
    data.train.id = cfg.benchmark.dataset_id;
  }
  if (!cfg.test_dataset_path.empty()) {
    data.test = unpack(read_packed(cfg.test_dataset_path),
                       std::filesystem::path(cfg.test_dataset_path).stem().string());
  } else {
    const std::uint64_t test_seed = Rng::substream(cfg.benchmark.seed, "testdata").next_u64();
    data.test = gen_synthetic(cfg.synthetic_classes, cfg.synthetic_test_per_class,
                              cfg.synthetic_side, test_seed);
    data.test.id = cfg.benchmark.dataset_id + "-test";
  }
  if (data.train.shape != data.test.shape ||
      data.train.num_classes != data.test.num_classes) {
    throw DataError("train/test dataset shape or class-count mismatch");
  }
  data.sequence = split(data.train, cfg.benchmark);
  return data;
}

}  // namespace ordisco::config
