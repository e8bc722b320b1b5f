// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>
#include <random>

#include "emofuse/audio.hpp"
#include "emofuse/dsp.hpp"

namespace {

emofuse::Waveform tone(double seconds) {
  emofuse::Waveform w;
  w.sample_rate = emofuse::kCanonicalSampleRate;
  w.channel_count = 1;
  const auto n = static_cast<std::size_t>(seconds * w.sample_rate);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.01);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / w.sample_rate;
    w.samples[i] = 0.4 * std::sin(2.0 * std::numbers::pi * 180.0 * t) + 0.1 * std::sin(2.0 * std::numbers::pi * 360.0 * t) + noise(rng);
  }
  return w;
}

void BM_Mfcc(benchmark::State& state) {
  emofuse::FrameAnalyzer a;
  const auto w = tone(0.1);
  const std::vector<double> frame(w.samples.begin(), w.samples.begin() + emofuse::kFrameLength);
  for (auto _ : state) benchmark::DoNotOptimize(a.mfcc(frame));
}
BENCHMARK(BM_Mfcc);

void BM_LldsPerSecondOfAudio(benchmark::State& state) {
  const auto w = tone(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(emofuse::assemble_llds(w));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LldsPerSecondOfAudio)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_Functionals(benchmark::State& state) {
  const auto deltas = emofuse::compute_deltas(emofuse::assemble_llds(tone(3.0)));
  for (auto _ : state) benchmark::DoNotOptimize(emofuse::utterance_functionals(deltas));
}
BENCHMARK(BM_Functionals)->Unit(benchmark::kMicrosecond);

void BM_Resample44k(benchmark::State& state) {
  std::vector<double> x(44100);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.01 * static_cast<double>(i));
  for (auto _ : state) benchmark::DoNotOptimize(emofuse::resample(x, 44100, 16000));
}
BENCHMARK(BM_Resample44k)->Unit(benchmark::kMillisecond);

}  // namespace
