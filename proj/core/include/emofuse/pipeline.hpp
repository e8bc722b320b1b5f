// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "emofuse/config.hpp"
#include "emofuse/error.hpp"
#include "emofuse/manifest.hpp"

namespace emofuse {

/// A pipeline stage failed; what() starts with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& message)
      : Error("stage '" + stage + "' failed: " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

inline constexpr const char* kDnnFunctional = "dnn_functional";
inline constexpr const char* kDnnEmbedding = "dnn_embedding";
inline constexpr const char* kRnnAttention = "rnn_attention";
inline constexpr const char* kLexicalSvm = "lexical_svm";
inline constexpr const char* kFusion = "fusion";

/// File layout of a run directory.
struct RunLayout {
  std::filesystem::path root;

  std::filesystem::path config() const { return root / "config.json"; }
  std::filesystem::path split() const { return root / "split.json"; }
  std::filesystem::path stats() const { return root / "manifest_stats.json"; }
  std::filesystem::path provenance() const { return root / "provenance.json"; }
  std::filesystem::path incomplete_marker() const { return root / "RUN_INCOMPLETE"; }
  std::filesystem::path complete_marker() const { return root / "RUN_COMPLETE"; }
  std::filesystem::path features(const std::string& kind) const { return root / "features" / (kind + ".feat"); }
  std::filesystem::path model(const std::string& system) const { return root / "models" / (system + ".ckpt"); }
  std::filesystem::path history(const std::string& system) const { return root / "models" / (system + ".history.json"); }
  std::filesystem::path scores(const std::string& system, const std::string& partition) const {
    return root / "scores" / (system + "." + partition + ".jsonl");
  }
  std::filesystem::path report_json(const std::string& system) const { return root / "reports" / (system + ".json"); }
  std::filesystem::path report_text(const std::string& system) const { return root / "reports" / (system + ".txt"); }
  std::filesystem::path summary() const { return root / "reports" / "summary.json"; }
};

struct SplitIds {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

/// Stage-by-stage driver over one run directory. Every stage reads its
/// inputs from and writes its outputs to the run directory, so the CLI
/// subcommands and `run` produce the same artifacts.
class Experiment {
 public:
  Experiment(ExperimentConfig config, std::filesystem::path out_dir);

  const ExperimentConfig& config() const { return config_; }
  const RunLayout& layout() const { return layout_; }
  /// Enabled scoring sub-systems in a fixed order.
  std::vector<std::string> enabled_systems() const;

  void ingest(bool with_audio = false);
  /// kinds drawn from "llds", "functionals", "embedding"; empty means all needed.
  void extract(std::vector<std::string> kinds = {});
  void train_dnn(const std::string& system);
  void train_rnn();
  void train_svm();
  void score(const std::string& system);
  void fuse_train();
  void fuse_apply();
  void evaluate();

  /// Every stage in order. The run directory carries RUN_INCOMPLETE until the
  /// last stage succeeds, then RUN_COMPLETE. Returns the summary report.
  nlohmann::json run();

 private:
  std::vector<UtteranceRecord> records() const;
  SplitIds split_ids() const;
  void write_config_echo() const;
  void record_provenance(const std::string& artifact, const std::string& fit_partition,
                         const std::vector<std::string>& fit_ids) const;

  ExperimentConfig config_;
  RunLayout layout_;
};

}  // namespace emofuse
