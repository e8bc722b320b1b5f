// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace emofuse {

enum class Partition { kTrain, kTest };

std::string partition_name(Partition p);

struct UtteranceRecord {
  std::string id;
  std::filesystem::path audio_path;  // resolved against the manifest directory
  std::string emotion;
  std::string speaker;
  std::string gender;
  std::optional<std::string> transcript;
  std::optional<std::filesystem::path> embedding_path;
  Partition partition = Partition::kTrain;
  int line = 0;  // 1-based line in the manifest
};

struct ManifestOptions {
  bool check_files = true;
};

/// One JSON object per line with keys id, audio, emotion, speaker, gender,
/// partition and the optional transcript and embedding. Blank lines are
/// skipped. Errors name the line number.
std::vector<UtteranceRecord> load_manifest(const std::filesystem::path& path, const ManifestOptions& options = {});
void write_manifest(const std::filesystem::path& path, const std::vector<UtteranceRecord>& records);

struct ClassCount {
  long count = 0;
  double proportion = 0.0;
};

struct Histogram {
  double bin_width = 1.0;
  double origin = 0.0;
  std::vector<long> counts;

  void add(double value);
};

struct ManifestStats {
  std::map<std::string, std::map<std::string, ClassCount>> per_partition;  // partition -> emotion -> count
  std::map<std::string, long> totals;
  std::map<std::string, long> genders;
  double male_ratio = 0.0;
  double female_ratio = 0.0;
  long speakers = 0;
  std::optional<Histogram> duration_seconds;
  std::optional<Histogram> snr_db;

  nlohmann::json to_json() const;
};

/// Counts and proportions per partition in the frozen emotion order. With
/// `with_audio` each file is also decoded to fill the duration and SNR
/// histograms.
ManifestStats manifest_stats(const std::vector<UtteranceRecord>& records, bool with_audio = false);

struct ValidationSplit {
  std::vector<UtteranceRecord> train;
  std::vector<UtteranceRecord> validation;
};

/// Stratified by emotion: every class contributes round(fraction * n_c)
/// items, at least one when it has two or more. Both outputs keep manifest
/// order.
ValidationSplit split_validation(const std::vector<UtteranceRecord>& train, double fraction, std::uint64_t seed);

/// Whitespace-separated reals; throws FormatError unless exactly `dim` parse.
Eigen::VectorXd read_embedding(const std::filesystem::path& path, Eigen::Index dim);
void write_embedding(const std::filesystem::path& path, const Eigen::VectorXd& v);

}  // namespace emofuse
