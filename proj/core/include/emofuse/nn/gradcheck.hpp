// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "emofuse/nn/tensor.hpp"

namespace emofuse::nn {

struct GradCheckEntry {
  std::string name;
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_relative_error = 0.0;
  bool passed = false;
};

/// Evaluates the loss; when `with_gradients` is set it must also zero and
/// then accumulate every parameter's gradient.
using LossFunction = std::function<double(bool with_gradients)>;

/// Central differences (step `epsilon`) against analytic gradients, one
/// relative error per parameter tensor. Passes iff every error < tolerance.
GradCheckReport gradient_check(std::span<Parameter* const> params, const LossFunction& loss,
                               double epsilon = 1e-5, double tolerance = 1e-6);

}  // namespace emofuse::nn
