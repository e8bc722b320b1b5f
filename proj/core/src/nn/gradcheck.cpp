// SPDX-License-Identifier: Apache-2.0
#include "emofuse/nn/gradcheck.hpp"

#include <algorithm>

namespace emofuse::nn {

GradCheckReport gradient_check(std::span<Parameter* const> params, const LossFunction& loss,
                               double epsilon, double tolerance) {
  // Floor on the norm denominator so all-zero gradients compare by absolute error.
  constexpr double kNormFloor = 1e-8;

  loss(true);
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const Parameter* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter* p = params[k];
    Matrix numeric(p->value.rows(), p->value.cols());
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& v = p->value.data()[i];
      const double saved = v;
      v = saved + epsilon;
      const double up = loss(false);
      v = saved - epsilon;
      const double down = loss(false);
      v = saved;
      numeric.data()[i] = (up - down) / (2.0 * epsilon);
    }
    GradCheckEntry e;
    e.name = p->name;
    const double denom = std::max({analytic[k].norm(), numeric.norm(), kNormFloor});
    e.relative_error = (analytic[k] - numeric).norm() / denom;
    e.max_abs_error = (analytic[k] - numeric).cwiseAbs().maxCoeff();
    report.max_relative_error = std::max(report.max_relative_error, e.relative_error);
    report.entries.push_back(std::move(e));
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace emofuse::nn
