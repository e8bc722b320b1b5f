// SPDX-License-Identifier: Apache-2.0
#include "emofuse/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "emofuse/checkpoint.hpp"
#include "emofuse/error.hpp"
#include "emofuse/nn/loss.hpp"

namespace emofuse {
namespace {

enum class CharClass { kSeparator, kCjk, kWord };

// Decodes one code point; malformed bytes come back as U+FFFD.
char32_t next_code_point(const std::string& s, std::size_t& i) {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  const unsigned char c = byte(i);
  int extra = 0;
  char32_t cp = 0;
  if (c < 0x80) {
    ++i;
    return c;
  } else if ((c & 0xE0) == 0xC0) {
    extra = 1;
    cp = c & 0x1F;
  } else if ((c & 0xF0) == 0xE0) {
    extra = 2;
    cp = c & 0x0F;
  } else if ((c & 0xF8) == 0xF0) {
    extra = 3;
    cp = c & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + static_cast<std::size_t>(extra) >= s.size()) {
    i = s.size();
    return 0xFFFD;
  }
  for (int k = 1; k <= extra; ++k) {
    const unsigned char cc = byte(i + static_cast<std::size_t>(k));
    if ((cc & 0xC0) != 0x80) {
      i += static_cast<std::size_t>(k);
      return 0xFFFD;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  i += static_cast<std::size_t>(extra) + 1;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

char32_t fold(char32_t cp) {
  if (cp >= 0xFF01 && cp <= 0xFF5E) cp -= 0xFEE0;
  if (cp == 0x3000) cp = U' ';
  if (cp >= U'A' && cp <= U'Z') cp += 32;
  return cp;
}

CharClass classify(char32_t cp) {
  if (cp < 0x80) {
    const bool alnum = (cp >= U'a' && cp <= U'z') || (cp >= U'0' && cp <= U'9') || cp == U'\'' || cp == U'_';
    return alnum ? CharClass::kWord : CharClass::kSeparator;
  }
  const bool cjk = (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
                   (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x3040 && cp <= 0x30FF) ||
                   (cp >= 0x20000 && cp <= 0x2FFFF);
  if (cjk) return CharClass::kCjk;
  const bool punct = (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0xFF00 && cp <= 0xFFEF) ||
                     cp == 0x00A0 || cp == 0xFFFD;
  return punct ? CharClass::kSeparator : CharClass::kWord;
}

void flush_cjk(std::vector<std::string>& cjk, std::vector<std::string>& out) {
  for (const auto& c : cjk) out.push_back(c);
  for (std::size_t i = 0; i + 1 < cjk.size(); ++i) out.push_back(cjk[i] + cjk[i + 1]);
  cjk.clear();
}

}  // namespace

std::vector<std::string> tokenize(const std::string& transcript) {
  std::vector<std::string> out;
  std::vector<std::string> cjk;
  std::string word;
  std::size_t i = 0;
  while (i < transcript.size()) {
    const char32_t cp = fold(next_code_point(transcript, i));
    const CharClass cls = classify(cp);
    if (cls != CharClass::kCjk) flush_cjk(cjk, out);
    if (cls != CharClass::kWord && !word.empty()) {
      out.push_back(word);
      word.clear();
    }
    if (cls == CharClass::kCjk) {
      std::string ch;
      append_utf8(ch, cp);
      cjk.push_back(std::move(ch));
    } else if (cls == CharClass::kWord) {
      append_utf8(word, cp);
    }
  }
  flush_cjk(cjk, out);
  if (!word.empty()) out.push_back(word);
  return out;
}

double SparseVector::dot_row(const Eigen::MatrixXd& w, Eigen::Index row) const {
  double s = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) s += w(row, indices[k]) * values[k];
  return s;
}

double SparseVector::squared_norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return s;
}

TfidfVocabulary fit_tfidf(const std::vector<std::vector<std::string>>& corpus, long min_df) {
  if (corpus.empty()) throw InvalidArgument("cannot fit a TF-IDF vocabulary on an empty corpus");
  if (min_df < 1) throw InvalidArgument("min_df must be at least 1");
  std::map<std::string, long> df;
  for (const auto& doc : corpus) {
    std::vector<std::string> unique(doc.begin(), doc.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (const auto& t : unique) ++df[t];
  }
  TfidfVocabulary vocab;
  vocab.document_count = static_cast<long>(corpus.size());
  for (const auto& [term, count] : df) {
    if (count < min_df) continue;
    vocab.index[term] = static_cast<int>(vocab.terms.size());
    vocab.terms.push_back(term);
    vocab.df.push_back(count);
  }
  vocab.idf.resize(vocab.size());
  for (int k = 0; k < vocab.size(); ++k) {
    vocab.idf(k) = std::log(static_cast<double>(vocab.document_count) / static_cast<double>(vocab.df[static_cast<std::size_t>(k)]));
  }
  return vocab;
}

SparseVector transform_tfidf(const std::vector<std::string>& doc, const TfidfVocabulary& vocab) {
  std::map<int, double> counts;
  for (const auto& t : doc) {
    const auto it = vocab.index.find(t);
    if (it != vocab.index.end()) counts[it->second] += 1.0;
  }
  SparseVector v;
  v.dim = vocab.size();
  double norm = 0.0;
  for (const auto& [col, tf] : counts) {
    const double w = tf * vocab.idf(col);
    if (w == 0.0) continue;
    v.indices.push_back(col);
    v.values.push_back(w);
    norm += w * w;
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v.values) x /= norm;
  }
  return v;
}

Eigen::VectorXd CsSvmModel::margins(const SparseVector& x) const {
  if (x.dim != weights.cols()) {
    throw ShapeError("document dimension " + std::to_string(x.dim) + " does not match SVM dimension " +
                     std::to_string(weights.cols()));
  }
  Eigen::VectorXd m(weights.rows());
  for (Eigen::Index c = 0; c < weights.rows(); ++c) m(c) = x.dot_row(weights, c);
  return m;
}

int CsSvmModel::predict(const SparseVector& x) const {
  const Eigen::VectorXd m = margins(x);
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < m.size(); ++c) {
    if (m(c) > m(best)) best = c;
  }
  return static_cast<int>(best);
}

namespace {

// Returns the hinge value and the most violating competitor class.
std::pair<double, int> hinge_and_rival(const Eigen::MatrixXd& w, const SparseVector& x, int y) {
  const double own = x.dot_row(w, y);
  double rival_score = -std::numeric_limits<double>::infinity();
  int rival = -1;
  for (Eigen::Index c = 0; c < w.rows(); ++c) {
    if (c == y) continue;
    const double s = x.dot_row(w, c);
    if (s > rival_score) {
      rival_score = s;
      rival = static_cast<int>(c);
    }
  }
  return {std::max(0.0, 1.0 + rival_score - own), rival};
}

}  // namespace

double cs_hinge_loss(const Eigen::MatrixXd& w, const SparseVector& x, int y) { return hinge_and_rival(w, x, y).first; }

double cs_svm_objective(const Eigen::MatrixXd& w, const std::vector<SparseVector>& x, const std::vector<int>& y,
                        double lambda) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) hinge += cs_hinge_loss(w, x[i], y[i]);
  return 0.5 * lambda * w.squaredNorm() + hinge / static_cast<double>(x.size());
}

CsSvmModel train_cs_svm(const std::vector<SparseVector>& x, const std::vector<int>& y, int class_count,
                        const CsSvmSettings& settings) {
  if (x.empty()) throw InvalidArgument("SVM training set is empty");
  if (x.size() != y.size()) throw ShapeError("SVM has " + std::to_string(x.size()) + " documents but " +
                                             std::to_string(y.size()) + " labels");
  if (class_count < 2) throw InvalidArgument("SVM needs at least two classes");
  if (!(settings.lambda > 0.0)) throw InvalidArgument("SVM lambda must be positive");
  if (settings.epochs < 1) throw InvalidArgument("SVM epochs must be positive");
  const int dim = x.front().dim;
  std::vector<int> seen;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].dim != dim) throw ShapeError("SVM documents have inconsistent dimensions");
    if (y[i] < 0 || y[i] >= class_count) throw InvalidArgument("SVM label " + std::to_string(y[i]) + " out of range");
    seen.push_back(y[i]);
  }
  std::sort(seen.begin(), seen.end());
  if (std::unique(seen.begin(), seen.end()) - seen.begin() < 2) {
    throw InvalidArgument("SVM training set contains a single class");
  }

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(class_count, dim);
  Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(class_count, dim);
  const double radius = 1.0 / std::sqrt(settings.lambda);
  std::mt19937_64 rng(settings.seed);
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  CsSvmModel model;
  model.settings = settings;
  long t = 0;
  for (int epoch = 0; epoch < settings.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (settings.lambda * static_cast<double>(t));
      const auto [loss, rival] = hinge_and_rival(w, x[i], y[i]);
      w *= 1.0 - eta * settings.lambda;
      if (loss > 0.0) {
        for (std::size_t k = 0; k < x[i].indices.size(); ++k) {
          w(y[i], x[i].indices[k]) += eta * x[i].values[k];
          w(rival, x[i].indices[k]) -= eta * x[i].values[k];
        }
      }
      if (settings.project) {
        const double norm = w.norm();
        if (norm > radius) w *= radius / norm;
      }
      avg += (w - avg) / static_cast<double>(t);
    }
    model.objective_history.push_back(cs_svm_objective(avg, x, y, settings.lambda));
  }
  model.weights = avg;
  if (!model.weights.allFinite()) throw NumericalError("SVM weights became non-finite");
  return model;
}

ScoreMatrix svm_scores(const CsSvmModel& model, const std::vector<SparseVector>& docs,
                       const std::vector<std::string>& ids, const std::string& model_id) {
  if (docs.size() != ids.size()) throw ShapeError("one id per document expected");
  Eigen::MatrixXd margins(static_cast<Eigen::Index>(docs.size()), model.class_count());
  for (std::size_t i = 0; i < docs.size(); ++i) margins.row(static_cast<Eigen::Index>(i)) = model.margins(docs[i]).transpose();
  ScoreMatrix s;
  s.ids = ids;
  s.model_id = model_id;
  s.values = nn::log_softmax_rows(margins);
  return s;
}

ScoreMatrix LexicalModel::score(const std::vector<std::string>& ids, const std::vector<std::string>& transcripts) const {
  std::vector<SparseVector> docs;
  docs.reserve(transcripts.size());
  for (const auto& t : transcripts) docs.push_back(transform_tfidf(tokenize(t), vocabulary));
  return svm_scores(svm, docs, ids, model_id);
}

void save_lexical_model(const std::filesystem::path& path, const LexicalModel& model) {
  Checkpoint ck;
  ck.kind = "cs_svm";
  ck.meta["model_id"] = model.model_id;
  ck.meta["terms"] = model.vocabulary.terms;
  ck.meta["df"] = model.vocabulary.df;
  ck.meta["document_count"] = model.vocabulary.document_count;
  ck.meta["lambda"] = model.svm.settings.lambda;
  ck.meta["epochs"] = model.svm.settings.epochs;
  ck.meta["seed"] = model.svm.settings.seed;
  ck.meta["project"] = model.svm.settings.project;
  ck.meta["objective_history"] = model.svm.objective_history;
  ck.add("weights", model.svm.weights);
  ck.add("idf", model.vocabulary.idf);
  save_checkpoint(path, ck);
}

LexicalModel load_lexical_model(const std::filesystem::path& path) {
  const Checkpoint ck = load_checkpoint(path);
  if (ck.kind != "cs_svm") {
    throw FormatError("checkpoint '" + path.string() + "' holds a '" + ck.kind + "', not a lexical model");
  }
  LexicalModel m;
  try {
    m.model_id = ck.meta.at("model_id").get<std::string>();
    m.vocabulary.terms = ck.meta.at("terms").get<std::vector<std::string>>();
    m.vocabulary.df = ck.meta.at("df").get<std::vector<long>>();
    m.vocabulary.document_count = ck.meta.at("document_count").get<long>();
    m.svm.settings.lambda = ck.meta.at("lambda").get<double>();
    m.svm.settings.epochs = ck.meta.at("epochs").get<int>();
    m.svm.settings.seed = ck.meta.at("seed").get<std::uint64_t>();
    m.svm.settings.project = ck.meta.at("project").get<bool>();
    m.svm.objective_history = ck.meta.at("objective_history").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad lexical model descriptor in '" + path.string() + "': " + e.what());
  }
  const auto d = static_cast<Eigen::Index>(m.vocabulary.terms.size());
  if (m.vocabulary.df.size() != m.vocabulary.terms.size()) throw FormatError("df/terms length mismatch in " + path.string());
  for (Eigen::Index k = 0; k < d; ++k) m.vocabulary.index[m.vocabulary.terms[static_cast<std::size_t>(k)]] = static_cast<int>(k);
  m.vocabulary.idf = ck.tensor("idf", d, 1);
  m.svm.weights = ck.tensor("weights", -1, d);
  return m;
}

}  // namespace emofuse
