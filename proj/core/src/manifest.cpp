#include "ordisco/manifest.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ordisco/errors.hpp"

namespace ordisco {

using nlohmann::json;

std::string manifest_to_string(const TaskSequence& seq, const BenchmarkSpec& spec) {
  json j;
  j["dataset_id"] = spec.dataset_id;
  j["scenario"] = to_string(seq.scenario);
  j["num_batches"] = spec.num_batches;
  j["labels_per_class"] = spec.labels_per_class;
  j["seed"] = spec.seed;
  j["classes_per_task"] = json::array();
  for (const auto& cs : seq.classes_per_task) {
    j["classes_per_task"].push_back(std::vector<int>(cs.begin(), cs.end()));
  }
  j["tasks"] = json::array();
  for (const auto& task : seq.tasks) {
    json jt = json::array();
    for (const auto& batch : task) {
      json jb;
      jb["batch_index"] = batch.batch_index;
      json labeled = json::array();
      for (const auto& s : batch.labeled) {
        labeled.push_back({{"idx", s.source_index}, {"label", s.label}});
      }
      jb["labeled"] = std::move(labeled);
      json unlabeled = json::array();
      for (const auto& s : batch.unlabeled) unlabeled.push_back(s.source_index);
      jb["unlabeled"] = std::move(unlabeled);
      jt.push_back(std::move(jb));
    }
    j["tasks"].push_back(std::move(jt));
  }
  return j.dump(2);
}

void write_manifest(const TaskSequence& seq, const BenchmarkSpec& spec,
                    const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw DataError("cannot open for writing: " + tmp);
    os << manifest_to_string(seq, spec) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

TaskSequence read_manifest(const std::string& path, const Dataset& dataset) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed manifest " + path + ": " + e.what());
  }

  TaskSequence seq;
  seq.scenario = scenario_from_string(j.at("scenario").get<std::string>());
  for (const auto& cs : j.at("classes_per_task")) {
    std::set<int> s;
    for (int c : cs) s.insert(c);
    seq.classes_per_task.push_back(std::move(s));
  }
  for (const auto& jt : j.at("tasks")) {
    std::vector<SemiSupBatch> task;
    for (const auto& jb : jt) {
      SemiSupBatch batch;
      batch.batch_index = jb.at("batch_index").get<int>();
      for (const auto& e : jb.at("labeled")) {
        const int idx = e.at("idx").get<int>();
        if (idx < 0 || idx >= static_cast<int>(dataset.size())) {
          throw DataError("manifest index " + std::to_string(idx) + " out of range");
        }
        Sample s = dataset.samples[static_cast<std::size_t>(idx)];
        s.label = e.at("label").get<int>();
        batch.labeled.push_back(std::move(s));
      }
      for (const auto& e : jb.at("unlabeled")) {
        const int idx = e.get<int>();
        if (idx < 0 || idx >= static_cast<int>(dataset.size())) {
          throw DataError("manifest index " + std::to_string(idx) + " out of range");
        }
        Sample s = dataset.samples[static_cast<std::size_t>(idx)];
        s.label = kUnlabeled;
        batch.unlabeled.push_back(std::move(s));
      }
      task.push_back(std::move(batch));
    }
    seq.tasks.push_back(std::move(task));
  }
  return seq;
}

}  // namespace ordisco
