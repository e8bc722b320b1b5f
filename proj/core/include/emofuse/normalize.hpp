// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "emofuse/dsp.hpp"

namespace emofuse {

inline constexpr double kStdFloor = 1e-8;

/// Per-dimension mean and population standard deviation (floored at 1e-8).
struct NormalizationStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;

  Eigen::Index dim() const { return mean.size(); }
};

/// Fits on the rows of an N x D matrix; N must be positive.
NormalizationStats fit_znorm(const Eigen::MatrixXd& train_rows);
Eigen::VectorXd apply_znorm(const Eigen::VectorXd& v, const NormalizationStats& stats);
Eigen::MatrixXd apply_znorm_rows(const Eigen::MatrixXd& rows, const NormalizationStats& stats);

/// Within-utterance per-column standardisation; constant columns (and T = 1)
/// become zero.
Eigen::MatrixXd znorm_sequence(const Eigen::MatrixXd& frames);
FrameFeatureMatrix znorm_sequence(const FrameFeatureMatrix& m);

}  // namespace emofuse
