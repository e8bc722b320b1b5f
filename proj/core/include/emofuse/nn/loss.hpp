// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "emofuse/nn/tensor.hpp"

namespace emofuse::nn {

/// Row-wise max-subtracted softmax.
Matrix softmax_rows(const Matrix& logits);
/// Row-wise log-softmax.
Matrix log_softmax_rows(const Matrix& logits);

struct SoftmaxLoss {
  double loss = 0.0;     // mean negative log-probability of the true class (nats)
  Matrix probabilities;  // B x C
  /// dLoss/dlogits = (P - onehot) / B.
  Matrix gradient(std::span<const int> labels) const;
};

SoftmaxLoss softmax_cross_entropy(const Matrix& logits, std::span<const int> labels);

struct TaskSpec {
  std::string name;
  int class_count = 0;
  double weight = 0.0;
};

/// Weighted multi-task objective. Defaults: emotion 1.0, speaker 0.3, gender 0.6.
struct MultiTaskLossSpec {
  std::vector<TaskSpec> tasks;

  static MultiTaskLossSpec standard(int emotion_classes, int speaker_classes, int gender_classes);
  static MultiTaskLossSpec emotion_only(int emotion_classes);
  /// Throws ConfigError unless an emotion task is present, all weights are
  /// non-negative and at least one is positive.
  void validate() const;
  int index_of(const std::string& name) const;
};

/// sum_k w_k * loss_k, task order matching spec.tasks.
double multitask_loss(std::span<const double> task_losses, const MultiTaskLossSpec& spec);

}  // namespace emofuse::nn
