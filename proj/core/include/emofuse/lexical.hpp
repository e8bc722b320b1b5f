// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "emofuse/scores.hpp"

namespace emofuse {

/// Splits a transcript into tokens. Fullwidth forms fold to ASCII and ASCII
/// letters are lowercased; runs of CJK ideographs or kana yield every
/// character plus every overlapping character bigram; other runs split on
/// whitespace and punctuation.
std::vector<std::string> tokenize(const std::string& transcript);

/// Sparse vector in sorted-index form.
struct SparseVector {
  std::vector<int> indices;
  std::vector<double> values;
  int dim = 0;

  double dot_row(const Eigen::MatrixXd& w, Eigen::Index row) const;
  double squared_norm() const;
};

struct TfidfVocabulary {
  std::map<std::string, int> index;   // term -> column
  std::vector<std::string> terms;     // column -> term, sorted
  std::vector<long> df;
  Eigen::VectorXd idf;                // ln(N / df)
  long document_count = 0;

  int size() const { return static_cast<int>(terms.size()); }
};

/// Throws InvalidArgument on an empty corpus.
TfidfVocabulary fit_tfidf(const std::vector<std::vector<std::string>>& corpus, long min_df = 1);
/// Raw counts times idf, L2-normalized. Unseen terms are dropped.
SparseVector transform_tfidf(const std::vector<std::string>& doc, const TfidfVocabulary& vocab);

struct CsSvmSettings {
  double lambda = 1e-3;
  int epochs = 50;
  std::uint64_t seed = 1;
  bool project = true;  // keep iterates inside the ball of radius 1/sqrt(lambda)
};

struct CsSvmModel {
  Eigen::MatrixXd weights;  // C x d
  CsSvmSettings settings;
  std::vector<double> objective_history;  // averaged iterate, one value per epoch

  Eigen::Index class_count() const { return weights.rows(); }
  Eigen::Index dim() const { return weights.cols(); }
  Eigen::VectorXd margins(const SparseVector& x) const;
  int predict(const SparseVector& x) const;
};

/// Joint multiclass hinge objective (lambda/2)|W|^2 + mean hinge.
double cs_svm_objective(const Eigen::MatrixXd& w, const std::vector<SparseVector>& x, const std::vector<int>& y,
                        double lambda);
/// Loss of one example: max(0, 1 + max_{c != y} w_c.x - w_y.x).
double cs_hinge_loss(const Eigen::MatrixXd& w, const SparseVector& x, int y);

CsSvmModel train_cs_svm(const std::vector<SparseVector>& x, const std::vector<int>& y, int class_count,
                        const CsSvmSettings& settings);

/// N x C stabilized log-softmax of the margins.
ScoreMatrix svm_scores(const CsSvmModel& model, const std::vector<SparseVector>& docs,
                       const std::vector<std::string>& ids, const std::string& model_id);

struct LexicalModel {
  std::string model_id = "lexical_svm";
  TfidfVocabulary vocabulary;
  CsSvmModel svm;

  ScoreMatrix score(const std::vector<std::string>& ids, const std::vector<std::string>& transcripts) const;
};

void save_lexical_model(const std::filesystem::path& path, const LexicalModel& model);
LexicalModel load_lexical_model(const std::filesystem::path& path);

}  // namespace emofuse
