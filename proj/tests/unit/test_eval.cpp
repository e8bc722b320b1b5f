// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "emofuse/error.hpp"
#include "emofuse/eval.hpp"
#include "emofuse/labels.hpp"

namespace {

TEST(Metrics, FourItemFixture) {
  const std::vector<int> t = {0, 0, 1, 2};
  const std::vector<int> p = {0, 1, 1, 1};
  const auto cm = emofuse::confusion_matrix(t, p, 3);
  const auto f1 = emofuse::macro_f1(cm);
  EXPECT_NEAR(f1.per_class[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(f1.per_class[1], 0.5, 1e-12);
  EXPECT_EQ(f1.per_class[2], 0.0);
  EXPECT_NEAR(f1.maf, (2.0 / 3.0 + 0.5) / 3.0, 1e-12);
  EXPECT_NEAR(100.0 * f1.maf, 38.89, 5e-3);
  EXPECT_NEAR(emofuse::accuracy(cm), 50.0, 1e-12);
}

TEST(Metrics, StringLabels) {
  const std::vector<std::string> vocab = {"a", "b", "c"};
  const auto cm = emofuse::confusion_matrix({"a", "a", "b", "c"}, {"a", "b", "b", "a"}, vocab);
  EXPECT_EQ(cm(0, 0), 1);
  EXPECT_EQ(cm(0, 1), 1);
  EXPECT_EQ(cm(2, 0), 1);
  EXPECT_EQ(cm.sum(), 4);
  EXPECT_THROW(emofuse::confusion_matrix({"a"}, {"zzz"}, vocab), emofuse::InvalidArgument);
}

TEST(Metrics, PerfectPredictions) {
  std::vector<int> t;
  for (int i = 0; i < 40; ++i) t.push_back(i % 8);
  const auto cm = emofuse::confusion_matrix(t, t, 8);
  EXPECT_EQ(emofuse::macro_f1(cm).maf, 1.0);
  EXPECT_EQ(emofuse::accuracy(cm), 100.0);
}

TEST(Metrics, AbsentClassesCountAsZero) {
  const std::vector<int> t = {0, 1};
  const auto f1 = emofuse::macro_f1(emofuse::confusion_matrix(t, t, 8));
  EXPECT_NEAR(f1.maf, 2.0 / 8.0, 1e-15);
}

TEST(Metrics, EmptyInputThrows) {
  const std::vector<int> none;
  EXPECT_THROW(emofuse::macro_f1(emofuse::confusion_matrix(none, none, 8)), emofuse::InvalidArgument);
  EXPECT_THROW(emofuse::accuracy(emofuse::confusion_matrix(none, none, 8)), emofuse::InvalidArgument);
  EXPECT_THROW(emofuse::confusion_matrix(std::vector<int>{1}, std::vector<int>{}, 8), emofuse::Error);
  EXPECT_THROW(emofuse::confusion_matrix(std::vector<int>{9}, std::vector<int>{0}, 8), emofuse::Error);
}

TEST(Metrics, PermutationInvariance) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> u(0, 7);
  std::vector<int> t(500), p(500);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = u(rng);
    p[i] = u(rng) < 4 ? t[i] : u(rng);
  }
  const auto ref = emofuse::evaluate("s", t, p, emofuse::emotion_vocabulary());
  std::vector<std::size_t> order(t.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> t2, p2;
  for (std::size_t i : order) {
    t2.push_back(t[i]);
    p2.push_back(p[i]);
  }
  const auto shuffled = emofuse::evaluate("s", t2, p2, emofuse::emotion_vocabulary());
  EXPECT_EQ(ref.maf, shuffled.maf);
  EXPECT_EQ(ref.accuracy, shuffled.accuracy);
  EXPECT_EQ(ref.to_json(), shuffled.to_json());
}

TEST(Metrics, UniformRandomGuessing) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> u(0, 7);
  std::vector<int> t(20000), p(20000);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = u(rng);
    p[i] = u(rng);
  }
  const auto cm = emofuse::confusion_matrix(t, p, 8);
  EXPECT_NEAR(emofuse::accuracy(cm), 12.5, 1.5);
  EXPECT_NEAR(100.0 * emofuse::macro_f1(cm).maf, 12.5, 1.5);
}

TEST(Report, JsonAndTable) {
  const std::vector<int> t = {0, 0, 1, 2};
  const std::vector<int> p = {0, 1, 1, 1};
  const auto r = emofuse::evaluate("demo", t, p, {"a", "b", "c"});
  EXPECT_NEAR(r.maf, 100.0 * 7.0 / 18.0, 1e-9);
  EXPECT_EQ(r.support, (std::vector<long>{2, 1, 1}));
  const std::string js = r.to_json();
  EXPECT_NE(js.find("\"demo\""), std::string::npos);
  const std::string table = r.to_table();
  EXPECT_NE(table.find("demo"), std::string::npos);
  EXPECT_NE(table.find("38.9"), std::string::npos) << table;
}

}  // namespace
