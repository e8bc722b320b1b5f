// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "emofuse/error.hpp"
#include "emofuse/eval.hpp"
#include "emofuse/models.hpp"
#include "test_support.hpp"

namespace {

using emofuse::Dataset;
using emofuse::MultiTaskDnnConfig;
using emofuse::AttentionRnnConfig;

// Three well-separated Gaussian blobs mapped to emotion ids 0, 3 and 5.
Dataset blobs(int n, Eigen::Index dim, std::uint64_t seed, int speakers = 4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  const int classes[3] = {0, 3, 5};
  Dataset d;
  d.vectors.resize(n, dim);
  for (int i = 0; i < n; ++i) {
    const int c = i % 3;
    d.ids.push_back("u" + std::to_string(i));
    for (Eigen::Index k = 0; k < dim; ++k) d.vectors(i, k) = noise(rng) + (k % 3 == c ? 2.0 : 0.0);
    d.labels["emotion"].push_back(classes[c]);
    d.labels["speaker"].push_back(i % speakers);
    d.labels["gender"].push_back(i % 2);
  }
  return d;
}

Dataset sequences(int n, Eigen::Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset d;
  for (int i = 0; i < n; ++i) {
    const int len = 1 + i % 5;
    Eigen::MatrixXd s(len, dim);
    for (Eigen::Index k = 0; k < s.size(); ++k) s.data()[k] = noise(rng) + (i % 2 ? 1.0 : -1.0) * (k % dim == 0);
    d.ids.push_back("s" + std::to_string(i));
    d.sequences.push_back(s);
    d.labels["emotion"].push_back(i % 2 ? 1 : 6);
    d.labels["speaker"].push_back(i % 3);
    d.labels["gender"].push_back(i % 2);
  }
  return d;
}

MultiTaskDnnConfig small_dnn(Eigen::Index dim) {
  MultiTaskDnnConfig c;
  c.input_dim = dim;
  c.trunk = {32, 32};
  c.branch_width = 16;
  c.dropout = 0.0;
  c.train.learning_rate = 0.05;
  c.train.epochs = 40;
  c.train.patience = 40;
  c.train.batch_size = 16;
  return c;
}

TEST(MultiTaskDnn, ParameterCountMatchesLayerArithmetic) {
  MultiTaskDnnConfig c;
  c.tasks = emofuse::nn::MultiTaskLossSpec::standard(8, 10, 2);
  c.scale_factor = 1.0 / 64.0;
  auto m = emofuse::build_multitask_dnn(c);
  EXPECT_EQ(c.scaled_trunk(), (std::vector<int>{64, 64}));
  EXPECT_EQ(c.scaled_branch(), 32);
  const std::size_t d = 1512, a = 64, b = 64, w = 32;
  std::size_t expected = d * a + a + a * b + b;
  for (std::size_t k : {8u, 10u, 2u}) expected += b * w + w + w * k + k;
  EXPECT_EQ(m->parameter_count(), expected);
}

TEST(MultiTaskDnn, FullSizeParameterCount) {
  auto m = emofuse::build_multitask_dnn(MultiTaskDnnConfig::functional_defaults());
  const std::size_t expected = 1512 * 4096 + 4096 + 4096 * 4096 + 4096 + 4096 * 2048 + 2048 + 2048 * 8 + 8;
  EXPECT_EQ(m->parameter_count(), expected);
}

TEST(MultiTaskDnn, InvalidConfigRejected) {
  MultiTaskDnnConfig c;
  c.trunk = {8};
  EXPECT_THROW(emofuse::build_multitask_dnn(c), emofuse::ConfigError);
  c = MultiTaskDnnConfig{};
  c.train.optimizer = "rmsprop";
  EXPECT_THROW(emofuse::build_multitask_dnn(c), emofuse::ConfigError);
}

TEST(MultiTaskDnn, FitsSeparableBlobs) {
  const Dataset train = blobs(96, 6, 1);
  const Dataset val = blobs(30, 6, 2);
  auto m = emofuse::build_multitask_dnn(small_dnn(6));
  const auto history = emofuse::train_model(*m, train, val);
  const auto post = emofuse::emotion_log_posteriors(*m, train);
  const auto pred = emofuse::argmax_rows(post);
  int correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == train.labels.at("emotion")[i];
  EXPECT_GE(correct, 0.95 * 96);
  EXPECT_GT(history.best_validation_maf, 0.0);
}

TEST(MultiTaskDnn, OneEpochTakesCeilNOverBatchSteps) {
  const Dataset train = blobs(64, 4, 3);
  auto c = small_dnn(4);
  c.train.epochs = 1;
  c.train.batch_size = 32;
  auto m = emofuse::build_multitask_dnn(c);
  const auto h = emofuse::train_model(*m, train, blobs(9, 4, 4));
  EXPECT_EQ(h.optimizer_steps, 2);
  ASSERT_EQ(h.epochs.size(), 1u);
  EXPECT_EQ(h.epochs[0].optimizer_steps, 2);
}

TEST(MultiTaskDnn, ZeroAuxiliaryWeightsMatchSingleTaskBitForBit) {
  const Dataset train = blobs(60, 5, 5);
  const Dataset val = blobs(15, 5, 6);
  auto single_cfg = small_dnn(5);
  single_cfg.dropout = 0.3;
  single_cfg.train.epochs = 10;
  auto multi_cfg = single_cfg;
  multi_cfg.tasks = emofuse::nn::MultiTaskLossSpec::standard(8, 4, 2);
  multi_cfg.tasks.tasks[1].weight = 0.0;
  multi_cfg.tasks.tasks[2].weight = 0.0;

  auto single = emofuse::build_multitask_dnn(single_cfg);
  auto multi = emofuse::build_multitask_dnn(multi_cfg);
  emofuse::train_model(*single, train, val);
  emofuse::train_model(*multi, train, val);
  const auto ps = single->shared_and_emotion_parameters();
  const auto pm = multi->shared_and_emotion_parameters();
  ASSERT_EQ(ps.size(), pm.size());
  for (std::size_t i = 0; i < ps.size(); ++i) EXPECT_EQ(ps[i]->value, pm[i]->value) << ps[i]->name;
  EXPECT_EQ(emofuse::emotion_log_posteriors(*single, val), emofuse::emotion_log_posteriors(*multi, val));
}

TEST(MultiTaskDnn, AuxiliaryTasksChangeTheTrunk) {
  const Dataset train = blobs(60, 5, 5);
  const Dataset val = blobs(15, 5, 6);
  auto single_cfg = small_dnn(5);
  single_cfg.train.epochs = 3;
  auto multi_cfg = single_cfg;
  multi_cfg.tasks = emofuse::nn::MultiTaskLossSpec::standard(8, 4, 2);
  auto single = emofuse::build_multitask_dnn(single_cfg);
  auto multi = emofuse::build_multitask_dnn(multi_cfg);
  emofuse::train_model(*single, train, val);
  emofuse::train_model(*multi, train, val);
  EXPECT_NE(single->parameters()[0]->value, multi->parameters()[0]->value);
}

TEST(MultiTaskDnn, ScoresAreLogPosteriors) {
  auto m = emofuse::build_multitask_dnn(small_dnn(4));
  const Dataset d = blobs(12, 4, 7);
  const auto s = emofuse::predict_scores(*m, d);
  EXPECT_EQ(s.rows(), 12);
  EXPECT_EQ(s.classes(), 8);
  EXPECT_LT(emofuse::log_sum_exp_rows(s.values).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NO_THROW(s.validate());
}

TEST(MultiTaskDnn, BestEpochIsReproducedOnReevaluation) {
  const Dataset train = blobs(48, 5, 8);
  const Dataset val = blobs(24, 5, 9);
  auto c = small_dnn(5);
  c.train.epochs = 8;
  c.train.learning_rate = 0.01;
  auto m = emofuse::build_multitask_dnn(c);
  const auto h = emofuse::train_model(*m, train, val);
  const auto pred = emofuse::argmax_rows(emofuse::emotion_log_posteriors(*m, val));
  const auto report = emofuse::evaluate("x", val.labels.at("emotion"), pred, emofuse::emotion_vocabulary());
  EXPECT_NEAR(report.maf / 100.0, h.best_validation_maf, 1e-12);
  EXPECT_EQ(h.epochs[static_cast<std::size_t>(h.best_epoch - 1)].validation_maf, h.best_validation_maf);
}

TEST(MultiTaskDnn, TrainingIsDeterministic) {
  const Dataset train = blobs(40, 4, 10);
  const Dataset val = blobs(12, 4, 11);
  auto c = small_dnn(4);
  c.dropout = 0.5;
  c.train.epochs = 4;
  auto a = emofuse::build_multitask_dnn(c);
  auto b = emofuse::build_multitask_dnn(c);
  emofuse::train_model(*a, train, val);
  emofuse::train_model(*b, train, val);
  EXPECT_EQ(emofuse::emotion_log_posteriors(*a, val), emofuse::emotion_log_posteriors(*b, val));
}

TEST(MultiTaskDnn, CheckpointRoundTripIsBitExact) {
  emofuse::testing::TempDir dir("models");
  auto c = small_dnn(4);
  c.train.epochs = 2;
  auto m = emofuse::build_multitask_dnn(c);
  const Dataset train = blobs(30, 4, 12);
  m->normalization = emofuse::fit_znorm(train.vectors);
  m->model_id = "dnn_functional";
  emofuse::train_model(*m, m->prepare(train), m->prepare(train));
  const auto path = dir.path() / "m.ckpt";
  emofuse::save_model(*m, path);
  auto loaded = emofuse::load_model(path);
  EXPECT_EQ(loaded->kind(), "multitask_dnn");
  EXPECT_EQ(loaded->model_id, "dnn_functional");
  const auto a = emofuse::predict_scores(*m, train);
  const auto b = emofuse::predict_scores(*loaded, train);
  EXPECT_EQ(a.values, b.values);
  const auto pa = m->parameters();
  const auto pb = loaded->parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value, pb[i]->value);
}

TEST(MultiTaskDnn, TruncatedCheckpointFails) {
  emofuse::testing::TempDir dir("models");
  auto m = emofuse::build_multitask_dnn(small_dnn(4));
  const auto path = dir.path() / "m.ckpt";
  emofuse::save_model(*m, path);
  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size / 2);
  EXPECT_THROW(emofuse::load_model(path), emofuse::Error);
  EXPECT_THROW(emofuse::load_model(dir.path() / "missing.ckpt"), emofuse::Error);
}

TEST(MultiTaskDnn, WrongInputDimensionNamesBoth) {
  MultiTaskDnnConfig c;
  c.scale_factor = 1.0 / 256.0;
  auto m = emofuse::build_multitask_dnn(c);
  Dataset d;
  d.ids = {"a"};
  d.vectors = Eigen::MatrixXd::Zero(1, 200);
  try {
    emofuse::predict_scores(*m, d);
    FAIL() << "expected ShapeError";
  } catch (const emofuse::ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("1512"), std::string::npos) << msg;
    EXPECT_NE(msg.find("200"), std::string::npos) << msg;
  }
}

// ------------------------------------------------------------------ RNN

TEST(AttentionRnn, WidthsAndParameterCount) {
  AttentionRnnConfig c;
  auto m = emofuse::build_attention_rnn(c);
  EXPECT_EQ(m->pooled_width(), 256);
  const std::size_t f = 36, d = 256, h = 128, w = 256;
  const std::size_t lstm = 4 * h * (d + h) + 4 * h;
  const std::size_t expected = f * d + d + 2 * lstm + 2 * h + 2 * h * w + w + w * 8 + 8;
  EXPECT_EQ(m->parameter_count(), expected);
}

TEST(AttentionRnn, SingleFrameUtteranceFlows) {
  AttentionRnnConfig c;
  c.scale_factor = 1.0 / 16.0;
  auto m = emofuse::build_attention_rnn(c);
  Dataset d;
  d.ids = {"one"};
  d.sequences = {Eigen::MatrixXd::Ones(1, 36)};
  const auto s = emofuse::predict_scores(*m, d);
  EXPECT_TRUE(s.values.allFinite());
  EXPECT_EQ(m->last_attention()(0, 0), 1.0);
}

TEST(AttentionRnn, LearnsToSeparateSequences) {
  AttentionRnnConfig c;
  c.input_dim = 3;
  c.dense_width = 8;
  c.lstm_width = 6;
  c.branch_width = 8;
  c.dropout = 0.0;
  c.train.epochs = 30;
  c.train.patience = 30;
  c.train.learning_rate = 0.01;
  c.train.batch_size = 8;
  c.tasks = emofuse::nn::MultiTaskLossSpec::standard(8, 3, 2);
  auto m = emofuse::build_attention_rnn(c);
  const Dataset train = sequences(40, 3, 1);
  const auto h = emofuse::train_model(*m, train, sequences(20, 3, 2));
  EXPECT_GT(h.best_validation_maf, 0.2);
  EXPECT_LT(h.epochs.back().train_loss, h.epochs.front().train_loss);
}

TEST(AttentionRnn, CheckpointRoundTripIsBitExact) {
  emofuse::testing::TempDir dir("models");
  AttentionRnnConfig c;
  c.input_dim = 3;
  c.dense_width = 4;
  c.lstm_width = 3;
  c.branch_width = 4;
  auto m = emofuse::build_attention_rnn(c);
  const Dataset d = sequences(6, 3, 3);
  emofuse::save_model(*m, dir.path() / "r.ckpt");
  auto loaded = emofuse::load_model(dir.path() / "r.ckpt");
  EXPECT_EQ(loaded->kind(), "attention_rnn");
  EXPECT_TRUE(loaded->sequential());
  EXPECT_EQ(emofuse::predict_scores(*m, d).values, emofuse::predict_scores(*loaded, d).values);
}

}  // namespace
