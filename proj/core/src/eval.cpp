// SPDX-License-Identifier: Apache-2.0
#include "emofuse/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "emofuse/error.hpp"
#include "emofuse/labels.hpp"

namespace emofuse {
namespace {

void require_nonempty(const ConfusionMatrix& c) {
  if (c.rows() == 0 || c.rows() != c.cols()) throw InvalidArgument("confusion matrix must be square and non-empty");
  if (c.sum() == 0) throw InvalidArgument("confusion matrix holds no samples");
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, int class_count) {
  if (y_true.size() != y_pred.size()) throw ShapeError("y_true and y_pred differ in length");
  if (class_count < 1) throw InvalidArgument("confusion matrix needs at least one class");
  ConfusionMatrix c = ConfusionMatrix::Zero(class_count, class_count);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || t >= class_count || p < 0 || p >= class_count) {
      throw InvalidArgument("class index out of range at position " + std::to_string(i));
    }
    ++c(t, p);
  }
  return c;
}

ConfusionMatrix confusion_matrix(const std::vector<std::string>& y_true, const std::vector<std::string>& y_pred,
                                 const std::vector<std::string>& vocab) {
  auto to_index = [&](const std::string& label) {
    const int i = vocabulary_index(vocab, label);
    if (i < 0) throw InvalidArgument("label '" + label + "' is outside the class vocabulary");
    return i;
  };
  std::vector<int> t, p;
  std::transform(y_true.begin(), y_true.end(), std::back_inserter(t), to_index);
  std::transform(y_pred.begin(), y_pred.end(), std::back_inserter(p), to_index);
  return confusion_matrix(t, p, static_cast<int>(vocab.size()));
}

F1Scores macro_f1(const ConfusionMatrix& confusion) {
  require_nonempty(confusion);
  F1Scores out;
  const Eigen::Index classes = confusion.rows();
  for (Eigen::Index k = 0; k < classes; ++k) {
    const double tp = static_cast<double>(confusion(k, k));
    const double predicted = static_cast<double>(confusion.col(k).sum());
    const double actual = static_cast<double>(confusion.row(k).sum());
    const double precision = predicted > 0 ? tp / predicted : 0.0;
    const double recall = actual > 0 ? tp / actual : 0.0;
    const double f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    out.per_class.push_back(f1);
  }
  double total = 0.0;
  for (double f : out.per_class) total += f;
  out.maf = total / static_cast<double>(classes);
  return out;
}

double accuracy(const ConfusionMatrix& confusion) {
  require_nonempty(confusion);
  return 100.0 * static_cast<double>(confusion.trace()) / static_cast<double>(confusion.sum());
}

EvaluationReport evaluate(const std::string& system, std::span<const int> y_true, std::span<const int> y_pred,
                          const std::vector<std::string>& classes) {
  EvaluationReport r;
  r.system = system;
  r.classes = classes;
  r.confusion = confusion_matrix(y_true, y_pred, static_cast<int>(classes.size()));
  const F1Scores f1 = macro_f1(r.confusion);
  r.per_class_f1 = f1.per_class;
  r.maf = 100.0 * f1.maf;
  r.accuracy = accuracy(r.confusion);
  for (Eigen::Index k = 0; k < r.confusion.rows(); ++k) r.support.push_back(r.confusion.row(k).sum());
  return r;
}

std::string EvaluationReport::to_json() const {
  nlohmann::json j;
  j["system"] = system;
  j["classes"] = classes;
  j["maf"] = maf;
  j["accuracy"] = accuracy;
  j["per_class_f1"] = per_class_f1;
  j["support"] = support;
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
    std::vector<long> row(confusion.row(i).begin(), confusion.row(i).end());
    rows.push_back(row);
  }
  j["confusion"] = rows;
  return j.dump(2) + "\n";
}

std::string EvaluationReport::to_table() const {
  std::size_t width = 5;
  for (const auto& c : classes) width = std::max(width, c.size());
  std::ostringstream os;
  os << "system: " << system << "\n";
  os << "MAF " << fixed(maf, 1) << "  accuracy " << fixed(accuracy, 1) << "%\n";
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
  os << pad("class", width) << "  " << "   f1  support\n";
  for (std::size_t k = 0; k < classes.size(); ++k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%5.3f  %7ld", per_class_f1[k], support[k]);
    os << pad(classes[k], width) << "  " << buf << "\n";
  }
  os << "confusion (rows true, columns predicted):\n";
  for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
    os << pad(classes[static_cast<std::size_t>(i)], width);
    for (Eigen::Index j = 0; j < confusion.cols(); ++j) {
      char buf[16];
      std::snprintf(buf, sizeof buf, " %5ld", confusion(i, j));
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace emofuse
