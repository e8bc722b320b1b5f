// SPDX-License-Identifier: Apache-2.0
#include "emofuse/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "emofuse/error.hpp"

namespace emofuse::nn {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t key, std::uint64_t step, std::uint64_t index) {
  const std::uint64_t stream = splitmix64(splitmix64(splitmix64(seed) ^ key) ^ step);
  return static_cast<double>(splitmix64(stream + index) >> 11) * 0x1.0p-53;
}

std::uint64_t hash_string(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SequenceBatch SequenceBatch::pack(const std::vector<Matrix>& sequences, int max_length) {
  if (sequences.empty()) throw InvalidArgument("cannot pack an empty list of sequences");
  const Eigen::Index width = sequences.front().cols();
  int longest = max_length;
  for (const auto& s : sequences) {
    if (s.rows() < 1) throw InvalidArgument("sequence batch items must have at least one step");
    if (s.cols() != width) throw ShapeError("sequence widths differ within a batch");
    longest = std::max(longest, static_cast<int>(s.rows()));
  }
  SequenceBatch b;
  const auto batch = static_cast<Eigen::Index>(sequences.size());
  b.steps.assign(static_cast<std::size_t>(longest), Matrix::Zero(batch, width));
  for (Eigen::Index i = 0; i < batch; ++i) {
    const Matrix& s = sequences[static_cast<std::size_t>(i)];
    b.lengths.push_back(static_cast<int>(s.rows()));
    for (Eigen::Index t = 0; t < s.rows(); ++t) b.steps[static_cast<std::size_t>(t)].row(i) = s.row(t);
  }
  return b;
}

Matrix SequenceBatch::unpack(Eigen::Index item) const {
  const int len = lengths[static_cast<std::size_t>(item)];
  Matrix out(len, width());
  for (int t = 0; t < len; ++t) out.row(t) = steps[static_cast<std::size_t>(t)].row(item);
  return out;
}

Matrix SequenceBatch::stacked() const {
  const Eigen::Index batch = batch_size();
  Matrix out(batch * max_length(), width());
  for (int t = 0; t < max_length(); ++t) out.middleRows(t * batch, batch) = steps[static_cast<std::size_t>(t)];
  return out;
}

SequenceBatch SequenceBatch::unstack(const Matrix& stacked, const std::vector<int>& lengths, int max_length) {
  SequenceBatch b;
  b.lengths = lengths;
  const auto batch = static_cast<Eigen::Index>(lengths.size());
  if (stacked.rows() != batch * max_length) throw ShapeError("stacked sequence rows disagree with layout");
  b.steps.reserve(static_cast<std::size_t>(max_length));
  for (int t = 0; t < max_length; ++t) b.steps.push_back(stacked.middleRows(t * batch, batch));
  return b;
}

SequenceBatch SequenceBatch::reversed() const {
  SequenceBatch out = *this;
  for (Eigen::Index i = 0; i < batch_size(); ++i) {
    const int len = lengths[static_cast<std::size_t>(i)];
    for (int t = 0; t < len; ++t) {
      out.steps[static_cast<std::size_t>(t)].row(i) = steps[static_cast<std::size_t>(len - 1 - t)].row(i);
    }
  }
  return out;
}

void SequenceBatch::apply_mask() {
  for (Eigen::Index i = 0; i < batch_size(); ++i) {
    for (int t = lengths[static_cast<std::size_t>(i)]; t < max_length(); ++t) {
      steps[static_cast<std::size_t>(t)].row(i).setZero();
    }
  }
}

Matrix dense_forward(const Matrix& x, const Matrix& weights, const RowVector& bias, Activation act) {
  if (x.cols() != weights.rows() || bias.size() != weights.cols()) {
    throw ShapeError("dense: input " + shape_string(x.rows(), x.cols()) + ", weights " +
                     shape_string(weights.rows(), weights.cols()) + ", bias " + std::to_string(bias.size()));
  }
  Matrix y = x * weights;
  y.rowwise() += bias;
  if (act == Activation::kRelu) y = y.cwiseMax(0.0);
  return y;
}

void glorot_uniform(Matrix& m, Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  // Column-major fill order is part of the seeded contract.
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
  }
}

Dense::Dense(std::string name, Eigen::Index in, Eigen::Index out, Activation act)
    : weight_(name + ".weight", in, out), bias_(name + ".bias", 1, out), act_(act) {
  if (in < 1 || out < 1) throw ConfigError("dense layer '" + name + "' needs positive widths");
}

void Dense::initialize(std::mt19937_64& rng) {
  glorot_uniform(weight_.value, in_dim(), out_dim(), rng);
  bias_.value.setZero();
}

Matrix Dense::forward(const Matrix& x) {
  input_ = x;
  output_ = dense_forward(x, weight_.value, bias_.value.row(0), act_);
  return output_;
}

Matrix Dense::backward(const Matrix& dy) {
  Matrix d_pre = dy;
  if (act_ == Activation::kRelu) d_pre = (output_.array() > 0.0).select(dy, 0.0);
  weight_.grad.noalias() += input_.transpose() * d_pre;
  bias_.grad += d_pre.colwise().sum();
  return d_pre * weight_.value.transpose();
}

Matrix dropout(const Matrix& x, double rate, Mode mode, std::uint64_t seed, std::uint64_t key,
               std::uint64_t step, Matrix* mask_out) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1)");
  if (mode == Mode::kInfer || rate == 0.0) {
    if (mask_out != nullptr) *mask_out = Matrix::Ones(x.rows(), x.cols());
    return x;
  }
  const double scale = 1.0 / (1.0 - rate);
  Matrix mask(x.rows(), x.cols());
  // Row-major element numbering keeps a row's mask independent of batch width.
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const auto index = static_cast<std::uint64_t>(i * x.cols() + j);
      mask(i, j) = counter_uniform(seed, key, step, index) >= rate ? scale : 0.0;
    }
  }
  Matrix y = x.cwiseProduct(mask);
  if (mask_out != nullptr) *mask_out = std::move(mask);
  return y;
}

Dropout::Dropout(std::string name, double rate) : rate_(rate), key_(hash_string(name)) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
}

Matrix Dropout::forward(const Matrix& x, Mode mode, std::uint64_t seed, std::uint64_t step) {
  identity_ = mode == Mode::kInfer || rate_ == 0.0;
  if (identity_) return x;
  return dropout(x, rate_, mode, seed, key_, step, &mask_);
}

Matrix Dropout::backward(const Matrix& dy) const {
  if (identity_) return dy;
  return dy.cwiseProduct(mask_);
}

}  // namespace emofuse::nn
