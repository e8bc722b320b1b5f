// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace emofuse {

/// Rows are true classes, columns predicted classes.
using ConfusionMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, int class_count);

/// String-label overload; throws InvalidArgument for labels outside `vocab`.
ConfusionMatrix confusion_matrix(const std::vector<std::string>& y_true, const std::vector<std::string>& y_pred,
                                 const std::vector<std::string>& vocab);

struct F1Scores {
  std::vector<double> per_class;  // in [0, 1]; 0/0 counts as 0
  double maf = 0.0;               // unweighted mean over all classes
};

/// Throws InvalidArgument for an empty (all-zero or 0x0) matrix.
F1Scores macro_f1(const ConfusionMatrix& confusion);

/// 100 * trace / N. Throws InvalidArgument for an empty matrix.
double accuracy(const ConfusionMatrix& confusion);

struct EvaluationReport {
  std::string system;
  std::vector<std::string> classes;
  ConfusionMatrix confusion;
  std::vector<double> per_class_f1;
  std::vector<long> support;
  double maf = 0.0;       // percent
  double accuracy = 0.0;  // percent

  /// Machine-readable JSON document.
  std::string to_json() const;
  /// Aligned human-readable table.
  std::string to_table() const;
};

EvaluationReport evaluate(const std::string& system, std::span<const int> y_true, std::span<const int> y_pred,
                          const std::vector<std::string>& classes);

}  // namespace emofuse
