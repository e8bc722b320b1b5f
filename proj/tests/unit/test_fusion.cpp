// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "emofuse/error.hpp"
#include "emofuse/fusion.hpp"
#include "test_support.hpp"

namespace {

using emofuse::ScoreMatrix;

Eigen::MatrixXd log_softmax(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd out = z;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double m = z.row(i).maxCoeff();
    const double lse = m + std::log((z.row(i).array() - m).exp().sum());
    out.row(i).array() -= lse;
  }
  return out;
}

std::vector<int> random_labels(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, 7);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (auto& v : y) v = u(rng);
  return y;
}

std::vector<std::string> make_ids(int n) {
  std::vector<std::string> ids;
  for (int i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i));
  return ids;
}

// Informative (signal 2.5) only for labels in [lo, hi); other rows get pure noise.
ScoreMatrix system_scores(const std::vector<int>& y, int lo, int hi, std::uint64_t seed, const std::string& name,
                          double signal = 2.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd z(n, 8);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < 8; ++j) z(i, j) = noise(rng);
    const int label = y[static_cast<std::size_t>(i)];
    if (label >= lo && label < hi) z(i, label) += signal;
  }
  return {make_ids(static_cast<int>(n)), log_softmax(z), name};
}

double fused_maf_proxy_accuracy(const ScoreMatrix& s, const std::vector<int>& y) {
  const auto pred = emofuse::argmax_rows(s.values);
  int correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) correct += pred[i] == y[i];
  return static_cast<double>(correct) / static_cast<double>(y.size());
}

TEST(Cllr, ReferenceValues) {
  const std::vector<int> y = {0, 3, 7, 2};
  ScoreMatrix uniform{make_ids(4), Eigen::MatrixXd::Constant(4, 8, std::log(1.0 / 8.0)), "u"};
  const auto u = emofuse::multiclass_cllr(uniform, y);
  EXPECT_NEAR(u.bits, 3.0, 1e-12);
  EXPECT_NEAR(u.normalized, 1.0, 1e-12);

  ScoreMatrix perfect{make_ids(4), Eigen::MatrixXd::Constant(4, 8, -800.0), "p"};
  for (int i = 0; i < 4; ++i) perfect.values(i, y[static_cast<std::size_t>(i)]) = 0.0;
  EXPECT_NEAR(emofuse::multiclass_cllr(perfect, y).bits, 0.0, 1e-12);

  ScoreMatrix half = uniform;
  half.values.topRows(2) = perfect.values.topRows(2);
  EXPECT_NEAR(emofuse::multiclass_cllr(half, y).bits, 1.5, 1e-12);
}

TEST(Cllr, RenormalisesRowsAndChecksShape) {
  const std::vector<int> y = {1, 2};
  ScoreMatrix s{make_ids(2), Eigen::MatrixXd::Constant(2, 8, 5.0), "c"};
  EXPECT_NEAR(emofuse::multiclass_cllr(s, y).bits, 3.0, 1e-12);
  EXPECT_THROW(emofuse::multiclass_cllr(s, {1}), emofuse::ShapeError);
}

TEST(FusionObjective, MatchesDirectFormula) {
  const auto y = random_labels(50, 1);
  const std::vector<ScoreMatrix> sys = {system_scores(y, 0, 8, 2, "a"), system_scores(y, 0, 4, 3, "b")};
  Eigen::VectorXd alpha(2), beta(8);
  alpha << 0.7, -0.3;
  beta << 0.1, -0.2, 0.3, 0.0, 0.5, -0.4, 0.2, -0.1;
  Eigen::VectorXd grad;
  const double obj = emofuse::fusion_objective(sys, y, alpha, beta, &grad);
  double direct = 0.0;
  for (int i = 0; i < 50; ++i) {
    double z[8], m = -1e300;
    for (int j = 0; j < 8; ++j) {
      z[j] = alpha(0) * sys[0].values(i, j) + alpha(1) * sys[1].values(i, j) + beta(j);
      m = std::max(m, z[j]);
    }
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    direct += -(z[y[static_cast<std::size_t>(i)]] - m - std::log(s));
  }
  EXPECT_NEAR(obj, direct / 50.0, 1e-12);

  ASSERT_EQ(grad.size(), 10);
  const double h = 1e-6;
  for (Eigen::Index k = 0; k < 10; ++k) {
    Eigen::VectorXd a = alpha, b = beta, a2 = alpha, b2 = beta;
    if (k < 2) {
      a(k) += h;
      a2(k) -= h;
    } else {
      b(k - 2) += h;
      b2(k - 2) -= h;
    }
    const double fd = (emofuse::fusion_objective(sys, y, a, b) - emofuse::fusion_objective(sys, y, a2, b2)) / (2 * h);
    EXPECT_NEAR(grad(k), fd, 1e-7);
  }
}

TEST(FitFusion, SingleSystemIsFeasible) {
  const auto y = random_labels(200, 4);
  const std::vector<ScoreMatrix> sys = {system_scores(y, 0, 8, 5, "a")};
  emofuse::FusionFitReport report;
  const auto m = emofuse::fit_fusion(sys, y, {}, std::nullopt, &report);
  EXPECT_TRUE(report.converged);
  EXPECT_GT(m.alpha(0), 0.0);
  const double before = emofuse::multiclass_cllr(sys[0], y).bits;
  const double after = emofuse::multiclass_cllr(emofuse::apply_fusion(m, sys), y).bits;
  EXPECT_LE(after, before + 1e-9);
}

TEST(FitFusion, ComplementarySystemsBeatEither) {
  const auto y = random_labels(600, 6);
  const std::vector<ScoreMatrix> sys = {system_scores(y, 0, 4, 7, "low"), system_scores(y, 4, 8, 8, "high")};
  const auto m = emofuse::fit_fusion(sys, y);
  const auto fused = emofuse::apply_fusion(m, sys);
  const double fused_acc = fused_maf_proxy_accuracy(fused, y);
  EXPECT_GT(fused_acc, fused_maf_proxy_accuracy(sys[0], y) + 0.1);
  EXPECT_GT(fused_acc, fused_maf_proxy_accuracy(sys[1], y) + 0.1);
  const double cllr = emofuse::multiclass_cllr(fused, y).bits;
  EXPECT_LT(cllr, emofuse::multiclass_cllr(sys[0], y).bits);
  EXPECT_LT(cllr, emofuse::multiclass_cllr(sys[1], y).bits);
}

TEST(FitFusion, NoiseSystemGetsNegligibleWeight) {
  const auto y = random_labels(4000, 9);
  const std::vector<ScoreMatrix> sys = {system_scores(y, 0, 8, 10, "good"), system_scores(y, 0, 0, 11, "noise")};
  const auto m = emofuse::fit_fusion(sys, y);
  EXPECT_GT(m.alpha(0), 0.5);
  EXPECT_LT(std::abs(m.alpha(1)), 0.05);
}

TEST(FitFusion, RestartsAgree) {
  const auto y = random_labels(300, 12);
  const std::vector<ScoreMatrix> sys = {system_scores(y, 0, 5, 13, "a"), system_scores(y, 3, 8, 14, "b"),
                                        system_scores(y, 0, 8, 15, "c", 1.0)};
  const double base = emofuse::fusion_objective(sys, y, emofuse::fit_fusion(sys, y).alpha, emofuse::fit_fusion(sys, y).beta);
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int r = 0; r < 5; ++r) {
    emofuse::FusionModel init;
    init.systems = {"a", "b", "c"};
    init.alpha = Eigen::VectorXd::NullaryExpr(3, [&] { return g(rng); });
    init.beta = Eigen::VectorXd::NullaryExpr(8, [&] { return g(rng); });
    const auto m = emofuse::fit_fusion(sys, y, {}, init);
    EXPECT_NEAR(emofuse::fusion_objective(sys, y, m.alpha, m.beta), base, 1e-6);
  }
}

TEST(FitFusion, Errors) {
  const auto y = random_labels(40, 16);
  auto a = system_scores(y, 0, 8, 17, "a");
  auto b = system_scores(y, 0, 8, 18, "b");
  std::swap(b.ids[0], b.ids[1]);
  EXPECT_THROW(emofuse::fit_fusion({a, b}, y), emofuse::InvalidArgument);
  EXPECT_THROW(emofuse::fit_fusion({a}, std::vector<int>(40, 2)), emofuse::InvalidArgument);
  EXPECT_THROW(emofuse::fit_fusion({}, y), emofuse::InvalidArgument);
}

TEST(ApplyFusion, IdentityModelReproducesScores) {
  const auto y = random_labels(20, 19);
  const auto a = system_scores(y, 0, 8, 20, "a");
  emofuse::FusionModel m{Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(8), {"a"}};
  const auto out = emofuse::apply_fusion(m, {a});
  EXPECT_LT((out.values - a.values).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(out.model_id, "fusion");
}

TEST(ApplyFusion, LargeOffsetDominates) {
  const auto y = random_labels(20, 21);
  const auto a = system_scores(y, 0, 8, 22, "a");
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(8);
  beta(6) = 1e3;
  emofuse::FusionModel m{Eigen::VectorXd::Ones(1), beta, {"a"}};
  for (int p : emofuse::argmax_rows(emofuse::apply_fusion(m, {a}).values)) EXPECT_EQ(p, 6);
}

TEST(ApplyFusion, RowShiftInvarianceAndReordering) {
  const auto y = random_labels(30, 23);
  const auto a = system_scores(y, 0, 8, 24, "a");
  const auto b = system_scores(y, 0, 8, 25, "b");
  emofuse::FusionModel m{Eigen::Vector2d(0.8, 0.4), Eigen::VectorXd::LinSpaced(8, -0.5, 0.5), {"a", "b"}};
  const auto ref = emofuse::apply_fusion(m, {a, b});
  ScoreMatrix shifted = b;
  for (Eigen::Index i = 0; i < shifted.rows(); ++i) shifted.values.row(i).array() += 3.0 * static_cast<double>(i);
  EXPECT_LT((emofuse::apply_fusion(m, {a, shifted}).values - ref.values).cwiseAbs().maxCoeff(), 1e-9);

  std::vector<std::string> reversed(b.ids.rbegin(), b.ids.rend());
  const auto permuted = emofuse::apply_fusion(m, {b.reordered(reversed), a});
  EXPECT_LT((permuted.reordered(ref.ids).values - ref.values).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(emofuse::apply_fusion(m, {a}), emofuse::InvalidArgument);
}

TEST(FusionModel, RoundTrip) {
  emofuse::testing::TempDir dir("fusion");
  emofuse::FusionModel m{Eigen::Vector2d(0.123456789012345678, -2.5), Eigen::VectorXd::LinSpaced(8, -1, 1), {"x", "y"}};
  emofuse::save_fusion_model(dir / "f.ckpt", m);
  const auto back = emofuse::load_fusion_model(dir / "f.ckpt");
  EXPECT_EQ(back.alpha, m.alpha);
  EXPECT_EQ(back.beta, m.beta);
  EXPECT_EQ(back.systems, m.systems);
}

}  // namespace
