#pragma once

#include <string>

#include "ordisco/dataset.hpp"
#include "ordisco/split.hpp"
#include "ordisco/types.hpp"

namespace ordisco {

/// JSON split manifest: per batch/task, the source indices of labeled and
/// unlabeled samples and the labels of the labeled ones.
void write_manifest(const TaskSequence& seq, const BenchmarkSpec& spec,
                    const std::string& path);

std::string manifest_to_string(const TaskSequence& seq, const BenchmarkSpec& spec);

/// Rebuild a TaskSequence from a manifest plus the dataset it indexes.
TaskSequence read_manifest(const std::string& path, const Dataset& dataset);

}  // namespace ordisco
