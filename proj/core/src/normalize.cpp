// SPDX-License-Identifier: Apache-2.0
#include "emofuse/normalize.hpp"

#include "emofuse/error.hpp"

namespace emofuse {

NormalizationStats fit_znorm(const Eigen::MatrixXd& train_rows) {
  if (train_rows.rows() == 0) throw InvalidArgument("cannot fit normalisation on zero vectors");
  NormalizationStats s;
  s.mean = train_rows.colwise().mean().transpose();
  const Eigen::MatrixXd centred = train_rows.rowwise() - s.mean.transpose();
  s.stddev = (centred.array().square().colwise().sum() / static_cast<double>(train_rows.rows()))
                 .sqrt()
                 .max(kStdFloor)
                 .matrix()
                 .transpose();
  return s;
}

Eigen::VectorXd apply_znorm(const Eigen::VectorXd& v, const NormalizationStats& stats) {
  if (v.size() != stats.dim()) {
    throw ShapeError("normalisation stats are " + std::to_string(stats.dim()) + "-dim, vector is " +
                     std::to_string(v.size()) + "-dim");
  }
  return ((v - stats.mean).array() / stats.stddev.array()).matrix();
}

Eigen::MatrixXd apply_znorm_rows(const Eigen::MatrixXd& rows, const NormalizationStats& stats) {
  if (rows.cols() != stats.dim()) {
    throw ShapeError("normalisation stats are " + std::to_string(stats.dim()) + "-dim, input is " +
                     std::to_string(rows.cols()) + "-dim");
  }
  Eigen::MatrixXd out = rows.rowwise() - stats.mean.transpose();
  out.array().rowwise() /= stats.stddev.transpose().array();
  return out;
}

Eigen::MatrixXd znorm_sequence(const Eigen::MatrixXd& frames) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(frames.rows(), frames.cols());
  if (frames.rows() < 2) return out;
  const double n = static_cast<double>(frames.rows());
  for (Eigen::Index c = 0; c < frames.cols(); ++c) {
    const double mean = frames.col(c).mean();
    const double sd = std::sqrt((frames.col(c).array() - mean).square().sum() / n);
    if (sd < kStdFloor) continue;
    out.col(c) = ((frames.col(c).array() - mean) / sd).matrix();
  }
  return out;
}

FrameFeatureMatrix znorm_sequence(const FrameFeatureMatrix& m) {
  FrameFeatureMatrix out = m;
  out.values = znorm_sequence(m.values);
  return out;
}

}  // namespace emofuse
