// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emofuse/scores.hpp"

namespace emofuse {

struct CllrResult {
  double bits = 0.0;        // mean -log2 P(true class)
  double normalized = 0.0;  // bits / log2 C
};

/// Rows are re-normalized before use. Throws ShapeError when the label count
/// differs from the row count.
CllrResult multiclass_cllr(const ScoreMatrix& scores, const std::vector<int>& labels);

struct FusionModel {
  Eigen::VectorXd alpha;  // one weight per sub-system
  Eigen::VectorXd beta;   // per-class offset
  std::vector<std::string> systems;

  void validate() const;
};

struct FusionSettings {
  int max_iterations = 1000;
  double gradient_tolerance = 1e-7;  // on the infinity norm
  int history = 10;
};

struct FusionFitReport {
  double objective = 0.0;  // mean cross-entropy, nats
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Mean cross-entropy of log-softmax(sum_k alpha_k s_k + beta) and its
/// gradient packed as [alpha; beta].
double fusion_objective(const std::vector<ScoreMatrix>& systems, const std::vector<int>& labels,
                        const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta, Eigen::VectorXd* gradient = nullptr);

/// L-BFGS from alpha = 1/K, beta = 0 unless `init` is given. Every matrix must
/// list the same ids in the same order.
FusionModel fit_fusion(const std::vector<ScoreMatrix>& systems, const std::vector<int>& labels,
                       const FusionSettings& settings = {}, const std::optional<FusionModel>& init = std::nullopt,
                       FusionFitReport* report = nullptr);

/// Systems are matched to the model by model_id and rows by utterance id.
ScoreMatrix apply_fusion(const FusionModel& model, const std::vector<ScoreMatrix>& systems,
                         const std::string& model_id = "fusion");

void save_fusion_model(const std::filesystem::path& path, const FusionModel& model);
FusionModel load_fusion_model(const std::filesystem::path& path);

}  // namespace emofuse
