// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "emofuse/error.hpp"
#include "emofuse/lexical.hpp"
#include "test_support.hpp"

namespace {

using Tokens = std::vector<std::string>;

TEST(Tokenize, AsciiWordsLowercasedAndPunctuationSplit) {
  EXPECT_EQ(emofuse::tokenize("I'm HAPPY, really happy!!"), (Tokens{"i'm", "happy", "really", "happy"}));
  EXPECT_EQ(emofuse::tokenize("   "), Tokens{});
  EXPECT_EQ(emofuse::tokenize(""), Tokens{});
  EXPECT_EQ(emofuse::tokenize("snake_case 42x"), (Tokens{"snake_case", "42x"}));
}

TEST(Tokenize, CjkRunsGiveUnigramsThenBigrams) {
  EXPECT_EQ(emofuse::tokenize("我很生气"), (Tokens{"我", "很", "生", "气", "我很", "很生", "生气"}));
  EXPECT_EQ(emofuse::tokenize("好"), Tokens{"好"});
}

TEST(Tokenize, CjkPunctuationSeparatesRuns) {
  EXPECT_EQ(emofuse::tokenize("开心，难过。"), (Tokens{"开", "心", "开心", "难", "过", "难过"}));
}

TEST(Tokenize, FullwidthFoldsToAscii) {
  EXPECT_EQ(emofuse::tokenize("ＨＥＬＬＯ　Ｗｏｒｌｄ"), (Tokens{"hello", "world"}));
}

TEST(Tokenize, MixedScripts) {
  EXPECT_EQ(emofuse::tokenize("OK真的"), (Tokens{"ok", "真", "的", "真的"}));
}

TEST(Tfidf, IdfValues) {
  const auto v = emofuse::fit_tfidf({{"a", "b"}, {"a"}});
  ASSERT_EQ(v.size(), 2);
  EXPECT_EQ(v.terms, (Tokens{"a", "b"}));
  EXPECT_EQ(v.document_count, 2);
  EXPECT_EQ(v.idf(v.index.at("a")), 0.0);
  EXPECT_NEAR(v.idf(v.index.at("b")), std::log(2.0), 1e-15);
}

TEST(Tfidf, UnitNormAndDroppedTerms) {
  const auto v = emofuse::fit_tfidf({{"a", "b"}, {"a"}, {"c"}, {"b", "c"}});
  const auto x = emofuse::transform_tfidf({"b", "b", "c", "unseen"}, v);
  EXPECT_NEAR(x.squared_norm(), 1.0, 1e-12);
  EXPECT_EQ(x.dim, 3);
  EXPECT_TRUE(std::is_sorted(x.indices.begin(), x.indices.end()));
  // b: 2 * ln 2, c: 1 * ln 2, so the ratio is 2.
  ASSERT_EQ(x.values.size(), 2u);
  EXPECT_NEAR(x.values[0] / x.values[1], 2.0, 1e-12);
  EXPECT_TRUE(emofuse::transform_tfidf({"zzz"}, v).indices.empty());
}

TEST(Tfidf, MinDfAndEmptyCorpus) {
  const auto v = emofuse::fit_tfidf({{"a", "b"}, {"a"}}, 2);
  EXPECT_EQ(v.terms, Tokens{"a"});
  EXPECT_THROW(emofuse::fit_tfidf({}), emofuse::InvalidArgument);
}

struct Corpus {
  std::vector<emofuse::SparseVector> x;
  std::vector<int> y;
  emofuse::TfidfVocabulary vocab;
};

// Eight classes with disjoint keyword sets.
Corpus disjoint_corpus() {
  std::vector<Tokens> docs;
  Corpus c;
  for (int i = 0; i < 80; ++i) {
    const int k = i % 8;
    docs.push_back({"kw" + std::to_string(k) + "a", "kw" + std::to_string(k) + (i % 3 ? "b" : "c")});
    c.y.push_back(k);
  }
  c.vocab = emofuse::fit_tfidf(docs);
  for (const auto& d : docs) c.x.push_back(emofuse::transform_tfidf(d, c.vocab));
  return c;
}

TEST(CsSvm, DisjointVocabulariesAreSeparated) {
  const Corpus c = disjoint_corpus();
  const auto m = emofuse::train_cs_svm(c.x, c.y, 8, {});
  int correct = 0;
  for (std::size_t i = 0; i < c.x.size(); ++i) correct += m.predict(c.x[i]) == c.y[i];
  EXPECT_EQ(correct, 80);
}

TEST(CsSvm, HugeLambdaDrivesWeightsToZero) {
  const Corpus c = disjoint_corpus();
  emofuse::CsSvmSettings s;
  s.lambda = 1e6;
  const auto m = emofuse::train_cs_svm(c.x, c.y, 8, s);
  EXPECT_LE(m.weights.norm(), 1e-3 + 1e-12);
}

TEST(CsSvm, AveragedObjectiveIsNonIncreasing) {
  const Corpus c = disjoint_corpus();
  emofuse::CsSvmSettings s;
  s.lambda = 1e-2;
  s.epochs = 30;
  const auto m = emofuse::train_cs_svm(c.x, c.y, 8, s);
  ASSERT_EQ(m.objective_history.size(), 30u);
  for (std::size_t e = 1; e < m.objective_history.size(); ++e) {
    EXPECT_LE(m.objective_history[e], m.objective_history[e - 1] + 1e-9) << "epoch " << e;
  }
  EXPECT_NEAR(m.objective_history.back(), emofuse::cs_svm_objective(m.weights, c.x, c.y, s.lambda), 1e-12);
}

TEST(CsSvm, HingeLossHandCase) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 2);
  w(0, 0) = 2.0;
  w(1, 0) = 0.5;
  emofuse::SparseVector x{{0}, {1.0}, 2};
  EXPECT_EQ(emofuse::cs_hinge_loss(w, x, 0), 0.0);
  EXPECT_NEAR(emofuse::cs_hinge_loss(w, x, 1), 2.5, 1e-15);
  EXPECT_NEAR(emofuse::cs_hinge_loss(w, x, 2), 3.0, 1e-15);
  EXPECT_NEAR(emofuse::cs_svm_objective(w, {x}, {1}, 0.5), 0.25 * 4.25 + 2.5, 1e-15);
}

TEST(CsSvm, ZeroWeightsGiveUniformScores) {
  emofuse::CsSvmModel m;
  m.weights = Eigen::MatrixXd::Zero(8, 4);
  const emofuse::SparseVector x{{1, 3}, {0.6, 0.8}, 4};
  const auto s = emofuse::svm_scores(m, {x, emofuse::SparseVector{{}, {}, 4}}, {"a", "b"}, "lexical_svm");
  for (Eigen::Index j = 0; j < 8; ++j) {
    EXPECT_NEAR(s.values(0, j), std::log(1.0 / 8.0), 1e-15);
    EXPECT_NEAR(s.values(1, j), std::log(1.0 / 8.0), 1e-15);
  }
}

TEST(CsSvm, ScoresPreserveMarginArgmax) {
  const Corpus c = disjoint_corpus();
  const auto m = emofuse::train_cs_svm(c.x, c.y, 8, {});
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < c.x.size(); ++i) ids.push_back(std::to_string(i));
  const auto s = emofuse::svm_scores(m, c.x, ids, "lexical_svm");
  EXPECT_LT(emofuse::log_sum_exp_rows(s.values).cwiseAbs().maxCoeff(), 1e-12);
  const auto arg = emofuse::argmax_rows(s.values);
  for (std::size_t i = 0; i < c.x.size(); ++i) EXPECT_EQ(arg[i], m.predict(c.x[i]));
}

TEST(CsSvm, InvalidInputsThrow) {
  const Corpus c = disjoint_corpus();
  std::vector<int> bad = c.y;
  bad[0] = 8;
  EXPECT_THROW(emofuse::train_cs_svm(c.x, bad, 8, {}), emofuse::Error);
  EXPECT_THROW(emofuse::train_cs_svm({}, {}, 8, {}), emofuse::Error);
  emofuse::CsSvmSettings s;
  s.lambda = 0.0;
  EXPECT_THROW(emofuse::train_cs_svm(c.x, c.y, 8, s), emofuse::Error);
}

TEST(CsSvm, TrainingIsDeterministic) {
  const Corpus c = disjoint_corpus();
  EXPECT_EQ(emofuse::train_cs_svm(c.x, c.y, 8, {}).weights, emofuse::train_cs_svm(c.x, c.y, 8, {}).weights);
}

TEST(LexicalModel, ScoreAndRoundTrip) {
  emofuse::testing::TempDir dir("lexical");
  const Corpus c = disjoint_corpus();
  emofuse::LexicalModel m;
  m.vocabulary = c.vocab;
  m.svm = emofuse::train_cs_svm(c.x, c.y, 8, {});
  const auto s = m.score({"x", "y"}, {"kw3a kw3b", ""});
  EXPECT_EQ(emofuse::argmax_rows(s.values)[0], 3);
  EXPECT_NEAR(s.values(1, 0), std::log(1.0 / 8.0), 1e-15);
  EXPECT_EQ(s.model_id, "lexical_svm");
  emofuse::save_lexical_model(dir / "lex.ckpt", m);
  const auto loaded = emofuse::load_lexical_model(dir / "lex.ckpt");
  EXPECT_EQ(loaded.svm.weights, m.svm.weights);
  EXPECT_EQ(loaded.vocabulary.terms, m.vocabulary.terms);
  EXPECT_EQ(loaded.score({"x"}, {"kw3a kw5b"}).values, m.score({"x"}, {"kw3a kw5b"}).values);
}

}  // namespace
