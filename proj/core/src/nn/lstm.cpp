// SPDX-License-Identifier: Apache-2.0
#include "emofuse/nn/lstm.hpp"

#include "emofuse/error.hpp"
#include "emofuse/nn/layers.hpp"

namespace emofuse::nn {
namespace {

Matrix sigmoid(const Matrix& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

}  // namespace

Lstm::Lstm(std::string name, Eigen::Index input_dim, Eigen::Index hidden_dim)
    : wx_(name + ".wx", input_dim, 4 * hidden_dim),
      wh_(name + ".wh", hidden_dim, 4 * hidden_dim),
      b_(name + ".bias", 1, 4 * hidden_dim) {
  if (input_dim < 1 || hidden_dim < 1) throw ConfigError("LSTM '" + name + "' needs positive widths");
}

void Lstm::initialize(std::mt19937_64& rng) {
  const Eigen::Index h = hidden_dim();
  glorot_uniform(wx_.value, input_dim(), 4 * h, rng);
  glorot_uniform(wh_.value, h, 4 * h, rng);
  b_.value.setZero();
  b_.value.middleCols(h, h).setOnes();
}

SequenceBatch Lstm::forward(const SequenceBatch& x, Direction direction) {
  if (x.width() != input_dim()) {
    throw ShapeError("LSTM input width " + std::to_string(x.width()) + ", expected " +
                     std::to_string(input_dim()));
  }
  direction_ = direction;
  if (direction == Direction::kForward) return run_forward(x);
  return run_forward(x.reversed()).reversed();
}

SequenceBatch Lstm::backward(const SequenceBatch& dh) {
  if (direction_ == Direction::kForward) return run_backward(dh);
  return run_backward(dh.reversed()).reversed();
}

SequenceBatch Lstm::run_forward(const SequenceBatch& x) {
  input_ = x;
  const Eigen::Index batch = x.batch_size();
  const Eigen::Index h = hidden_dim();
  const int steps = x.max_length();
  gates_.assign(static_cast<std::size_t>(steps), Matrix());
  cells_.assign(static_cast<std::size_t>(steps), Matrix());
  hidden_.assign(static_cast<std::size_t>(steps), Matrix());

  Matrix h_prev = Matrix::Zero(batch, h);
  Matrix c_prev = Matrix::Zero(batch, h);
  SequenceBatch out;
  out.lengths = x.lengths;
  out.steps.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    Matrix z = x.steps[static_cast<std::size_t>(t)] * wx_.value + h_prev * wh_.value;
    z.rowwise() += b_.value.row(0);
    Matrix gates(batch, 4 * h);
    gates.leftCols(2 * h) = sigmoid(z.leftCols(2 * h));
    gates.middleCols(2 * h, h) = z.middleCols(2 * h, h).array().tanh().matrix();
    gates.rightCols(h) = sigmoid(z.rightCols(h));

    Matrix c = gates.middleCols(h, h).cwiseProduct(c_prev) +
               gates.leftCols(h).cwiseProduct(gates.middleCols(2 * h, h));
    Matrix hidden = gates.rightCols(h).cwiseProduct(c.array().tanh().matrix());
    for (Eigen::Index i = 0; i < batch; ++i) {
      if (!x.valid(i, t)) {
        c.row(i).setZero();
        hidden.row(i).setZero();
      }
    }
    gates_[static_cast<std::size_t>(t)] = std::move(gates);
    cells_[static_cast<std::size_t>(t)] = c;
    hidden_[static_cast<std::size_t>(t)] = hidden;
    out.steps.push_back(hidden);
    h_prev = std::move(hidden);
    c_prev = std::move(c);
  }
  return out;
}

SequenceBatch Lstm::run_backward(const SequenceBatch& dh) {
  const Eigen::Index batch = input_.batch_size();
  const Eigen::Index h = hidden_dim();
  const int steps = input_.max_length();
  if (dh.max_length() != steps || dh.batch_size() != batch || dh.width() != h) {
    throw ShapeError("LSTM backward: gradient layout disagrees with the cached forward pass");
  }

  SequenceBatch dx;
  dx.lengths = input_.lengths;
  dx.steps.assign(static_cast<std::size_t>(steps), Matrix());
  Matrix dh_next = Matrix::Zero(batch, h);
  Matrix dc_next = Matrix::Zero(batch, h);
  const Matrix zeros = Matrix::Zero(batch, h);

  for (int t = steps - 1; t >= 0; --t) {
    const auto st = static_cast<std::size_t>(t);
    const Matrix& gates = gates_[st];
    const Matrix& c_prev = t > 0 ? cells_[st - 1] : zeros;
    const Matrix& h_prev = t > 0 ? hidden_[st - 1] : zeros;

    Matrix d_hidden = dh.steps[st] + dh_next;
    Matrix dc = dc_next;
    for (Eigen::Index i = 0; i < batch; ++i) {
      if (!input_.valid(i, t)) {
        d_hidden.row(i).setZero();
        dc.row(i).setZero();
      }
    }

    const auto in_gate = gates.leftCols(h).array();
    const auto forget = gates.middleCols(h, h).array();
    const auto cell = gates.middleCols(2 * h, h).array();
    const auto out_gate = gates.rightCols(h).array();
    const Eigen::ArrayXXd tanh_c = cells_[st].array().tanh();

    dc.array() += d_hidden.array() * out_gate * (1.0 - tanh_c.square());
    Matrix dz(batch, 4 * h);
    dz.leftCols(h) = (dc.array() * cell * in_gate * (1.0 - in_gate)).matrix();
    dz.middleCols(h, h) = (dc.array() * c_prev.array() * forget * (1.0 - forget)).matrix();
    dz.middleCols(2 * h, h) = (dc.array() * in_gate * (1.0 - cell.square())).matrix();
    dz.rightCols(h) = (d_hidden.array() * tanh_c * out_gate * (1.0 - out_gate)).matrix();

    wx_.grad.noalias() += input_.steps[st].transpose() * dz;
    wh_.grad.noalias() += h_prev.transpose() * dz;
    b_.grad += dz.colwise().sum();

    dx.steps[st] = dz * wx_.value.transpose();
    dh_next = dz * wh_.value.transpose();
    dc_next = (dc.array() * forget).matrix();
  }
  return dx;
}

BiLstm::BiLstm(const std::string& name, Eigen::Index input_dim, Eigen::Index hidden_dim)
    : fwd_(name + ".fwd", input_dim, hidden_dim), bwd_(name + ".bwd", input_dim, hidden_dim) {}

void BiLstm::initialize(std::mt19937_64& rng) {
  fwd_.initialize(rng);
  bwd_.initialize(rng);
}

SequenceBatch BiLstm::forward(const SequenceBatch& x) {
  const SequenceBatch hf = fwd_.forward(x, Direction::kForward);
  const SequenceBatch hb = bwd_.forward(x, Direction::kBackward);
  const Eigen::Index h = fwd_.hidden_dim();
  SequenceBatch out;
  out.lengths = x.lengths;
  out.steps.reserve(hf.steps.size());
  for (std::size_t t = 0; t < hf.steps.size(); ++t) {
    Matrix joined(x.batch_size(), 2 * h);
    joined << hf.steps[t], hb.steps[t];
    out.steps.push_back(std::move(joined));
  }
  return out;
}

SequenceBatch BiLstm::backward(const SequenceBatch& dh) {
  const Eigen::Index h = fwd_.hidden_dim();
  SequenceBatch df, db;
  df.lengths = db.lengths = dh.lengths;
  for (const auto& step : dh.steps) {
    df.steps.push_back(step.leftCols(h));
    db.steps.push_back(step.rightCols(h));
  }
  SequenceBatch dx = fwd_.backward(df);
  const SequenceBatch dxb = bwd_.backward(db);
  for (std::size_t t = 0; t < dx.steps.size(); ++t) dx.steps[t] += dxb.steps[t];
  return dx;
}

}  // namespace emofuse::nn
