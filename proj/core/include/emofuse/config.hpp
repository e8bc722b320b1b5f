// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "emofuse/fusion.hpp"
#include "emofuse/lexical.hpp"
#include "emofuse/models.hpp"

namespace emofuse {

struct TaskWeights {
  double emotion = 1.0;
  double speaker = 0.3;
  double gender = 0.6;
};

struct DnnSystemConfig {
  bool enabled = true;
  bool multitask = true;
  MultiTaskDnnConfig model;
};

struct RnnSystemConfig {
  bool enabled = true;
  bool multitask = true;
  AttentionRnnConfig model;
};

struct LexicalSystemConfig {
  bool enabled = true;
  long min_df = 1;
  CsSvmSettings svm;
  bool require_transcripts = false;  // otherwise a missing transcript scores as empty text
};

/// Experiment configuration, read from a JSON object. Every key is optional;
/// unknown keys are rejected so typos surface.
struct ExperimentConfig {
  std::filesystem::path manifest;
  std::uint64_t seed = 1;
  double validation_fraction = 0.10;
  int workers = 1;
  bool check_files = true;
  TaskWeights task_weights;
  DnnSystemConfig dnn_functional{true, true, MultiTaskDnnConfig::functional_defaults()};
  DnnSystemConfig dnn_embedding{true, true, MultiTaskDnnConfig::embedding_defaults()};
  RnnSystemConfig rnn;
  LexicalSystemConfig lexical;
  FusionSettings fusion;

  /// Pushes the global seed into every model and checks value ranges.
  void resolve();
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace emofuse
