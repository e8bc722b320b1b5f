// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "emofuse/nn/tensor.hpp"

namespace emofuse::nn {

/// Throws NumericalError naming the first parameter with a non-finite gradient.
void check_finite_gradients(std::span<Parameter* const> params);

/// Rescales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_global_norm(std::span<Parameter* const> params, double max_norm);

class Sgd {
 public:
  explicit Sgd(double lr) : lr_(lr) {}
  void step(std::span<Parameter* const> params);
  double learning_rate() const { return lr_; }

 private:
  double lr_;
};

/// Adam with bias-corrected first and second moments.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(std::span<Parameter* const> params);
  long steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace emofuse::nn
