// SPDX-License-Identifier: Apache-2.0
#include "emofuse/nn/loss.hpp"

#include <cmath>

#include "emofuse/error.hpp"

namespace emofuse::nn {

Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  p.array().colwise() /= p.rowwise().sum().array();
  return p;
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix shifted = logits.colwise() - logits.rowwise().maxCoeff();
  const Eigen::VectorXd log_norm = shifted.array().exp().rowwise().sum().log().matrix();
  shifted.colwise() -= log_norm;
  return shifted;
}

SoftmaxLoss softmax_cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.rows()) {
    throw ShapeError("softmax cross-entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  }
  if (logits.rows() == 0) throw InvalidArgument("softmax cross-entropy over an empty batch");
  const Matrix log_p = log_softmax_rows(logits);
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols()) {
      throw InvalidArgument("label " + std::to_string(y) + " outside [0, " + std::to_string(logits.cols()) + ")");
    }
    total -= log_p(i, y);
  }
  SoftmaxLoss out;
  out.loss = total / static_cast<double>(logits.rows());
  out.probabilities = log_p.array().exp().matrix();
  return out;
}

Matrix SoftmaxLoss::gradient(std::span<const int> labels) const {
  Matrix g = probabilities;
  for (Eigen::Index i = 0; i < g.rows(); ++i) g(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  return g / static_cast<double>(g.rows());
}

MultiTaskLossSpec MultiTaskLossSpec::standard(int emotion_classes, int speaker_classes, int gender_classes) {
  return {{{"emotion", emotion_classes, 1.0}, {"speaker", speaker_classes, 0.3}, {"gender", gender_classes, 0.6}}};
}

MultiTaskLossSpec MultiTaskLossSpec::emotion_only(int emotion_classes) {
  return {{{"emotion", emotion_classes, 1.0}}};
}

void MultiTaskLossSpec::validate() const {
  if (index_of("emotion") < 0) throw ConfigError("multi-task spec must include the emotion task");
  bool any_positive = false;
  for (const auto& t : tasks) {
    if (!(t.weight >= 0.0) || !std::isfinite(t.weight)) {
      throw ConfigError("task '" + t.name + "' has an invalid weight");
    }
    if (t.class_count < 1) throw ConfigError("task '" + t.name + "' needs at least one class");
    any_positive = any_positive || t.weight > 0.0;
  }
  if (!any_positive) throw ConfigError("at least one task weight must be positive");
}

int MultiTaskLossSpec::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

double multitask_loss(std::span<const double> task_losses, const MultiTaskLossSpec& spec) {
  if (task_losses.size() != spec.tasks.size()) throw ShapeError("one loss per configured task expected");
  double total = 0.0;
  for (std::size_t i = 0; i < task_losses.size(); ++i) total += spec.tasks[i].weight * task_losses[i];
  return total;
}

}  // namespace emofuse::nn
