// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace emofuse::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// A trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
  Eigen::Index size() const { return value.size(); }
};

enum class Mode { kTrain, kInfer };

/// Padded batch of variable-length sequences, stored time-major: steps[t] is
/// B x F. Rows at t >= lengths[b] are zero.
struct SequenceBatch {
  std::vector<Matrix> steps;
  std::vector<int> lengths;

  Eigen::Index batch_size() const { return static_cast<Eigen::Index>(lengths.size()); }
  int max_length() const { return static_cast<int>(steps.size()); }
  Eigen::Index width() const { return steps.empty() ? 0 : steps.front().cols(); }
  bool valid(Eigen::Index item, int t) const { return t < lengths[static_cast<std::size_t>(item)]; }

  /// Packs T_i x F sequences, padding to the longest (or `max_length` if larger).
  static SequenceBatch pack(const std::vector<Matrix>& sequences, int max_length = 0);
  /// Valid prefix of one item as a T_i x F matrix.
  Matrix unpack(Eigen::Index item) const;
  /// Stacks all steps into a (T * B) x F matrix, step-major.
  Matrix stacked() const;
  /// Inverse of stacked() for a given layout.
  static SequenceBatch unstack(const Matrix& stacked, const std::vector<int>& lengths, int max_length);
  /// Reverses each item's valid prefix in time; padding stays in place.
  SequenceBatch reversed() const;
  /// Zeroes all padded positions.
  void apply_mask();
};

/// Deterministic counter-based stream of uniforms in [0, 1). Identical
/// (seed, key, step, index) always yields the same value.
double counter_uniform(std::uint64_t seed, std::uint64_t key, std::uint64_t step, std::uint64_t index);

/// Stable 64-bit hash of a string (FNV-1a).
std::uint64_t hash_string(const std::string& s);

}  // namespace emofuse::nn
