// SPDX-License-Identifier: Apache-2.0
#include "emofuse/scores.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "emofuse/error.hpp"

namespace emofuse {

Eigen::VectorXd log_sum_exp_rows(const Eigen::MatrixXd& values) {
  Eigen::VectorXd out(values.rows());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const double peak = values.row(i).maxCoeff();
    out[i] = peak + std::log((values.row(i).array() - peak).exp().sum());
  }
  return out;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& values) {
  std::vector<int> out(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < values.cols(); ++j) {
      if (values(i, j) > values(i, best)) best = static_cast<int>(j);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

void ScoreMatrix::validate(double tolerance) const {
  if (static_cast<Eigen::Index>(ids.size()) != values.rows()) {
    throw ShapeError("score matrix '" + model_id + "' has " + std::to_string(ids.size()) + " ids for " +
                     std::to_string(values.rows()) + " rows");
  }
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw InvalidArgument("duplicate utterance id '" + id + "' in scores '" + model_id + "'");
  }
  if (!values.allFinite()) throw NumericalError("non-finite entries in scores '" + model_id + "'");
  const Eigen::VectorXd lse = log_sum_exp_rows(values);
  for (Eigen::Index i = 0; i < lse.size(); ++i) {
    if (std::abs(lse[i]) > tolerance) {
      throw InvalidArgument("scores '" + model_id + "' row '" + ids[static_cast<std::size_t>(i)] +
                            "' is not a log-posterior (log-sum-exp " + std::to_string(lse[i]) + ")");
    }
  }
}

ScoreMatrix ScoreMatrix::reordered(const std::vector<std::string>& order) const {
  std::unordered_map<std::string, Eigen::Index> where;
  for (std::size_t i = 0; i < ids.size(); ++i) where.emplace(ids[i], static_cast<Eigen::Index>(i));
  ScoreMatrix out;
  out.model_id = model_id;
  out.ids = order;
  out.values.resize(static_cast<Eigen::Index>(order.size()), values.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto it = where.find(order[i]);
    if (it == where.end()) throw InvalidArgument("scores '" + model_id + "' lack utterance '" + order[i] + "'");
    out.values.row(static_cast<Eigen::Index>(i)) = values.row(it->second);
  }
  return out;
}

void write_score_file(const std::filesystem::path& path, const ScoreMatrix& scores) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write score file '" + path.string() + "'");
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    nlohmann::json row;
    row["id"] = scores.ids[static_cast<std::size_t>(i)];
    row["model"] = scores.model_id;
    std::vector<double> v(scores.values.row(i).begin(), scores.values.row(i).end());
    row["scores"] = v;
    out << row.dump() << '\n';
  }
  if (!out) throw IoError("short write on score file '" + path.string() + "'");
}

ScoreMatrix read_score_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open score file '" + path.string() + "'");
  ScoreMatrix s;
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto model = j.at("model").get<std::string>();
      if (rows.empty()) {
        s.model_id = model;
      } else if (model != s.model_id) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": mixed model ids '" + s.model_id +
                          "' and '" + model + "'");
      }
      s.ids.push_back(j.at("id").get<std::string>());
      rows.push_back(j.at("scores").get<std::vector<double>>());
      if (rows.back().size() != rows.front().size()) {
        throw FormatError(path.string() + ":" + std::to_string(line_no) + ": inconsistent class count");
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (rows.empty()) throw FormatError("score file '" + path.string() + "' has no records");
  s.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return s;
}

}  // namespace emofuse
