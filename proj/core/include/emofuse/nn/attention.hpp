// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>
#include <vector>

#include "emofuse/nn/tensor.hpp"

namespace emofuse::nn {

struct PooledOutput {
  Matrix pooled;   // B x H
  Matrix weights;  // B x Tmax; exactly 0 on padded steps
};

/// Weighted pooling: A_t = softmax over valid steps of w . h_t, output
/// sum_t A_t h_t. Throws InvalidArgument on zero-length items.
PooledOutput attention_pool(const SequenceBatch& h, const Vector& w);

class AttentionPool {
 public:
  AttentionPool() = default;
  AttentionPool(std::string name, Eigen::Index width);

  void initialize(std::mt19937_64& rng);
  Matrix forward(const SequenceBatch& h);
  SequenceBatch backward(const Matrix& d_pooled);

  const Matrix& weights() const { return cached_.weights; }
  Parameter& w() { return w_; }
  void collect(std::vector<Parameter*>& out) { out.push_back(&w_); }

 private:
  Parameter w_;  // H x 1
  SequenceBatch input_;
  PooledOutput cached_;
};

}  // namespace emofuse::nn
