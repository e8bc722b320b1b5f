// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "emofuse/models.hpp"
#include "emofuse/nn/lstm.hpp"

namespace {

namespace nn = emofuse::nn;

nn::Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  nn::Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

void BM_BiLstmForwardBackward(benchmark::State& state) {
  const auto hidden = state.range(0);
  nn::BiLstm layer("blstm", 16, hidden);
  std::mt19937_64 rng(1);
  layer.initialize(rng);
  std::vector<nn::Matrix> seqs;
  for (int i = 0; i < 32; ++i) seqs.push_back(random_matrix(100 + i, 16, static_cast<std::uint64_t>(i)));
  const auto batch = nn::SequenceBatch::pack(seqs);
  for (auto _ : state) {
    auto out = layer.forward(batch);
    for (auto& s : out.steps) s.setOnes();
    benchmark::DoNotOptimize(layer.backward(out));
  }
}
BENCHMARK(BM_BiLstmForwardBackward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_DnnTrainStep(benchmark::State& state) {
  emofuse::MultiTaskDnnConfig c;
  c.scale_factor = 1.0 / static_cast<double>(state.range(0));
  c.tasks = nn::MultiTaskLossSpec::standard(8, 40, 2);
  auto m = emofuse::build_multitask_dnn(c);
  emofuse::Dataset d;
  d.vectors = random_matrix(32, emofuse::kFunctionalDim, 3);
  for (int i = 0; i < 32; ++i) d.ids.push_back(std::to_string(i));
  std::vector<std::size_t> rows(32);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const std::vector<bool> active(3, true);
  std::uint64_t step = 0;
  for (auto _ : state) {
    auto logits = m->forward(d, rows, nn::Mode::kTrain, ++step, active);
    for (auto& l : logits) l.setConstant(1e-3);
    m->backward(logits);
  }
}
BENCHMARK(BM_DnnTrainStep)->Arg(64)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
