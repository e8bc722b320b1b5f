// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "emofuse/fusion.hpp"
#include "emofuse/nn/loss.hpp"

namespace {

void BM_FitFusion(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> u(0, 7);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (auto& v : y) v = u(rng);
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  std::vector<emofuse::ScoreMatrix> systems;
  for (int k = 0; k < 4; ++k) {
    Eigen::MatrixXd z(n, 8);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 8; ++j) z(i, j) = g(rng);
      z(i, y[static_cast<std::size_t>(i)]) += 1.5;
    }
    systems.push_back({ids, emofuse::nn::log_softmax_rows(z), "s" + std::to_string(k)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(emofuse::fit_fusion(systems, y));
}
BENCHMARK(BM_FitFusion)->Arg(700)->Arg(5000)->Unit(benchmark::kMillisecond);

}  // namespace
