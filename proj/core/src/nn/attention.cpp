// SPDX-License-Identifier: Apache-2.0
#include "emofuse/nn/attention.hpp"

#include <cmath>
#include <limits>

#include "emofuse/error.hpp"

namespace emofuse::nn {

PooledOutput attention_pool(const SequenceBatch& h, const Vector& w) {
  const Eigen::Index batch = h.batch_size();
  const int steps = h.max_length();
  if (h.width() != w.size()) {
    throw ShapeError("attention weight has " + std::to_string(w.size()) + " entries, hidden width is " +
                     std::to_string(h.width()));
  }
  PooledOutput out;
  out.pooled = Matrix::Zero(batch, h.width());
  out.weights = Matrix::Zero(batch, steps);

  Matrix logits(batch, steps);
  for (int t = 0; t < steps; ++t) logits.col(t) = h.steps[static_cast<std::size_t>(t)] * w;

  for (Eigen::Index i = 0; i < batch; ++i) {
    const int len = h.lengths[static_cast<std::size_t>(i)];
    if (len < 1) throw InvalidArgument("attention pooling over a zero-length sequence");
    const double peak = logits.row(i).head(len).maxCoeff();
    double total = 0.0;
    for (int t = 0; t < len; ++t) {
      const double e = std::exp(logits(i, t) - peak);
      out.weights(i, t) = e;
      total += e;
    }
    out.weights.row(i).head(len) /= total;
    for (int t = 0; t < len; ++t) {
      out.pooled.row(i) += out.weights(i, t) * h.steps[static_cast<std::size_t>(t)].row(i);
    }
  }
  return out;
}

AttentionPool::AttentionPool(std::string name, Eigen::Index width) : w_(name + ".w", width, 1) {
  if (width < 1) throw ConfigError("attention pool '" + name + "' needs a positive width");
}

void AttentionPool::initialize(std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w_.value.rows() + 1));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Eigen::Index i = 0; i < w_.value.rows(); ++i) w_.value(i, 0) = dist(rng);
}

Matrix AttentionPool::forward(const SequenceBatch& h) {
  input_ = h;
  cached_ = attention_pool(h, w_.value.col(0));
  return cached_.pooled;
}

SequenceBatch AttentionPool::backward(const Matrix& d_pooled) {
  const Eigen::Index batch = input_.batch_size();
  const int steps = input_.max_length();
  SequenceBatch dh;
  dh.lengths = input_.lengths;
  dh.steps.assign(static_cast<std::size_t>(steps), Matrix::Zero(batch, input_.width()));
  const Vector w = w_.value.col(0);

  for (Eigen::Index i = 0; i < batch; ++i) {
    const int len = input_.lengths[static_cast<std::size_t>(i)];
    const RowVector grad_out = d_pooled.row(i);
    // dL/dA_t = h_t . g ; softmax backward gives dL/ds_t = A_t (dA_t - sum A dA).
    Eigen::VectorXd d_weight(len);
    for (int t = 0; t < len; ++t) d_weight[t] = input_.steps[static_cast<std::size_t>(t)].row(i).dot(grad_out);
    const double mean = cached_.weights.row(i).head(len).dot(d_weight.transpose());
    for (int t = 0; t < len; ++t) {
      const auto st = static_cast<std::size_t>(t);
      const double a = cached_.weights(i, t);
      const double d_logit = a * (d_weight[t] - mean);
      dh.steps[st].row(i) = a * grad_out + d_logit * w.transpose();
      w_.grad.col(0) += d_logit * input_.steps[st].row(i).transpose();
    }
  }
  return dh;
}

}  // namespace emofuse::nn
