// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace emofuse {

struct FeatureRecord {
  std::string id;
  Eigen::MatrixXd values;  // rows x dim; one row for utterance-level vectors
};

/// Feature container persisted as
///   line 1: "EMOFUSE-FEATURES <version>"
///   line 2: JSON header (kind, dim, feature names, extraction params, record index)
///   payload: little-endian float32, row-major per record, in index order.
struct FeatureFile {
  static constexpr int kFormatVersion = 1;

  std::string kind;  // "llds", "llds_deltas", "functionals" or "embedding"
  std::vector<std::string> feature_names;
  std::map<std::string, double> params;
  std::vector<FeatureRecord> records;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(feature_names.size()); }
  /// nullptr when absent.
  const FeatureRecord* find(const std::string& id) const;
};

void write_feature_file(const std::filesystem::path& path, const FeatureFile& file);
FeatureFile read_feature_file(const std::filesystem::path& path);

}  // namespace emofuse
