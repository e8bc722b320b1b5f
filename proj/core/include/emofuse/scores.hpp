// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace emofuse {

/// N x C per-class log-posteriors from one sub-system, keyed by utterance.
struct ScoreMatrix {
  std::vector<std::string> ids;
  Eigen::MatrixXd values;
  std::string model_id;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index classes() const { return values.cols(); }

  /// Unique ids, one per row, all rows log-sum-exp to 0 within `tolerance`.
  void validate(double tolerance = 1e-6) const;
  /// Same rows reordered to follow `order`; throws on any missing id.
  ScoreMatrix reordered(const std::vector<std::string>& order) const;
};

/// Row-wise argmax; ties go to the lowest class index.
std::vector<int> argmax_rows(const Eigen::MatrixXd& values);

/// log(sum(exp(row))) per row.
Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& values);

/// Line-delimited JSON: {"id": ..., "model": ..., "scores": [C values]}.
/// Doubles are written in shortest round-trip form.
void write_score_file(const std::filesystem::path& path, const ScoreMatrix& scores);
ScoreMatrix read_score_file(const std::filesystem::path& path);

}  // namespace emofuse
