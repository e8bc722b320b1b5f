// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>
#include <vector>

#include "emofuse/nn/tensor.hpp"

namespace emofuse::nn {

enum class Direction { kForward, kBackward };

/// Single-direction LSTM layer; gate blocks ordered input, forget, cell,
/// output in the 4H-wide weight matrices.
class Lstm {
 public:
  Lstm() = default;
  Lstm(std::string name, Eigen::Index input_dim, Eigen::Index hidden_dim);

  /// Glorot-uniform weights, forget-gate bias 1, other biases 0.
  void initialize(std::mt19937_64& rng);

  /// Hidden states for every step; padded steps are zero. The backward
  /// direction runs over each item's reversed valid prefix and returns
  /// states in original time order.
  SequenceBatch forward(const SequenceBatch& x, Direction direction = Direction::kForward);
  /// Backpropagation through time for the most recent forward call.
  SequenceBatch backward(const SequenceBatch& dh);

  Eigen::Index input_dim() const { return wx_.value.rows(); }
  Eigen::Index hidden_dim() const { return wh_.value.rows(); }
  Parameter& wx() { return wx_; }
  Parameter& wh() { return wh_; }
  Parameter& bias() { return b_; }
  void collect(std::vector<Parameter*>& out) { out.push_back(&wx_); out.push_back(&wh_); out.push_back(&b_); }

 private:
  SequenceBatch run_forward(const SequenceBatch& x);
  SequenceBatch run_backward(const SequenceBatch& dh);

  Parameter wx_;  // F x 4H
  Parameter wh_;  // H x 4H
  Parameter b_;   // 1 x 4H
  Direction direction_ = Direction::kForward;

  SequenceBatch input_;
  std::vector<Matrix> gates_;  // per step B x 4H, post-activation
  std::vector<Matrix> cells_;  // c_t
  std::vector<Matrix> hidden_;  // h_t
};

/// Forward and backward LSTMs with outputs concatenated to width 2H.
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(const std::string& name, Eigen::Index input_dim, Eigen::Index hidden_dim);

  void initialize(std::mt19937_64& rng);
  SequenceBatch forward(const SequenceBatch& x);
  SequenceBatch backward(const SequenceBatch& dh);

  Eigen::Index output_dim() const { return 2 * fwd_.hidden_dim(); }
  Lstm& forward_layer() { return fwd_; }
  Lstm& backward_layer() { return bwd_; }
  void collect(std::vector<Parameter*>& out) { fwd_.collect(out); bwd_.collect(out); }

 private:
  Lstm fwd_;
  Lstm bwd_;
};

}  // namespace emofuse::nn
