// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace emofuse {

/// Versioned, self-describing container shared by every trained artifact:
///   line 1: "EMOFUSE-CHECKPOINT <version>"
///   line 2: JSON header (kind, free-form metadata, tensor index)
///   payload: little-endian float64 tensors, column-major, in index order.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, Eigen::MatrixXd>> tensors;

  void add(std::string name, Eigen::MatrixXd value);
  bool has(const std::string& name) const;
  /// Throws FormatError when absent or, if rows/cols >= 0, of a different shape.
  const Eigen::MatrixXd& tensor(const std::string& name, Eigen::Index rows = -1, Eigen::Index cols = -1) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

/// Throws IoError, or FormatError for truncation, bad headers and unknown
/// (including future) format versions.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace emofuse
