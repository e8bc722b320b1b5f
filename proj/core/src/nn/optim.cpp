// SPDX-License-Identifier: Apache-2.0
#include "emofuse/nn/optim.hpp"

#include <cmath>

#include "emofuse/error.hpp"

namespace emofuse::nn {

void check_finite_gradients(std::span<Parameter* const> params) {
  for (const Parameter* p : params) {
    if (!p->grad.allFinite()) throw NumericalError("non-finite gradient in parameter '" + p->name + "'");
  }
}

double clip_global_norm(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (Parameter* p : params) p->grad *= scale;
  }
  return norm;
}

void Sgd::step(std::span<Parameter* const> params) {
  check_finite_gradients(params);
  for (Parameter* p : params) p->value -= lr_ * p->grad;
}

void Adam::step(std::span<Parameter* const> params) {
  check_finite_gradients(params);
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw ShapeError("Adam: parameter list changed between steps");
  ++t_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter* p = params[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p->grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * p->grad.cwiseProduct(p->grad);
    const auto m_hat = m_[i].array() / correction1;
    const auto v_hat = v_[i].array() / correction2;
    p->value.array() -= lr_ * m_hat / (v_hat.sqrt() + eps_);
  }
}

}  // namespace emofuse::nn
