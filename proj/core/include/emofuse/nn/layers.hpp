// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>
#include <vector>

#include "emofuse/nn/tensor.hpp"

namespace emofuse::nn {

enum class Activation { kLinear, kRelu };

/// y = act(x W + b) for x: B x I, W: I x O, b: 1 x O.
Matrix dense_forward(const Matrix& x, const Matrix& weights, const RowVector& bias, Activation act);

/// Uniform Glorot initialisation: U(-sqrt(6 / (fan_in + fan_out)), +...).
void glorot_uniform(Matrix& m, Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng);

class Dense {
 public:
  Dense() = default;
  Dense(std::string name, Eigen::Index in, Eigen::Index out, Activation act);

  void initialize(std::mt19937_64& rng);
  Matrix forward(const Matrix& x);
  /// Accumulates parameter gradients; returns dL/dx.
  Matrix backward(const Matrix& dy);

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }
  const Parameter& bias() const { return bias_; }
  Eigen::Index in_dim() const { return weight_.value.rows(); }
  Eigen::Index out_dim() const { return weight_.value.cols(); }
  void collect(std::vector<Parameter*>& out) { out.push_back(&weight_); out.push_back(&bias_); }

 private:
  Parameter weight_;
  Parameter bias_;
  Activation act_ = Activation::kLinear;
  Matrix input_;
  Matrix output_;
};

/// Inverted dropout. Train mode keeps each element with probability
/// 1 - rate and scales kept values by 1 / (1 - rate); infer mode is the
/// identity. Masks come from counter_uniform(seed, key, step, index).
Matrix dropout(const Matrix& x, double rate, Mode mode, std::uint64_t seed, std::uint64_t key,
               std::uint64_t step, Matrix* mask_out = nullptr);

class Dropout {
 public:
  Dropout() = default;
  Dropout(std::string name, double rate);

  Matrix forward(const Matrix& x, Mode mode, std::uint64_t seed, std::uint64_t step);
  Matrix backward(const Matrix& dy) const;
  double rate() const { return rate_; }

 private:
  double rate_ = 0.0;
  std::uint64_t key_ = 0;
  Matrix mask_;
  bool identity_ = true;
};

}  // namespace emofuse::nn
