// SPDX-License-Identifier: Apache-2.0
#include "emofuse/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "emofuse/checkpoint.hpp"
#include "emofuse/error.hpp"
#include "emofuse/nn/loss.hpp"

namespace emofuse {
namespace {

void check_labels(const std::vector<int>& labels, Eigen::Index rows, Eigen::Index classes) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw ShapeError(std::to_string(labels.size()) + " labels for " + std::to_string(rows) + " score rows");
  }
  for (int y : labels) {
    if (y < 0 || y >= classes) throw InvalidArgument("label " + std::to_string(y) + " out of range");
  }
}

void check_aligned(const std::vector<ScoreMatrix>& systems) {
  if (systems.empty()) throw InvalidArgument("fusion needs at least one sub-system");
  for (const auto& s : systems) {
    if (s.ids != systems.front().ids) {
      throw InvalidArgument("sub-system '" + s.model_id + "' does not cover the same utterance ids as '" +
                            systems.front().model_id + "'");
    }
    if (s.classes() != systems.front().classes()) throw ShapeError("sub-systems disagree on class count");
  }
}

Eigen::MatrixXd combine(const std::vector<const Eigen::MatrixXd*>& s, const Eigen::VectorXd& alpha,
                        const Eigen::VectorXd& beta) {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(s.front()->rows(), s.front()->cols());
  for (std::size_t k = 0; k < s.size(); ++k) z += alpha(static_cast<Eigen::Index>(k)) * *s[k];
  z.rowwise() += beta.transpose();
  return z;
}

double objective_impl(const std::vector<const Eigen::MatrixXd*>& s, const std::vector<int>& labels,
                      const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta, Eigen::VectorXd* gradient) {
  const Eigen::MatrixXd log_p = nn::log_softmax_rows(combine(s, alpha, beta));
  const auto n = static_cast<double>(labels.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) loss -= log_p(static_cast<Eigen::Index>(i), labels[i]);
  loss /= n;
  if (gradient) {
    Eigen::MatrixXd d = log_p.array().exp();
    for (std::size_t i = 0; i < labels.size(); ++i) d(static_cast<Eigen::Index>(i), labels[i]) -= 1.0;
    d /= n;
    const auto k_count = static_cast<Eigen::Index>(s.size());
    gradient->resize(k_count + beta.size());
    for (Eigen::Index k = 0; k < k_count; ++k) (*gradient)(k) = (d.array() * s[static_cast<std::size_t>(k)]->array()).sum();
    gradient->tail(beta.size()) = d.colwise().sum().transpose();
  }
  return loss;
}

}  // namespace

CllrResult multiclass_cllr(const ScoreMatrix& scores, const std::vector<int>& labels) {
  check_labels(labels, scores.rows(), scores.classes());
  if (labels.empty()) throw InvalidArgument("Cllr of an empty score set");
  const Eigen::MatrixXd log_p = nn::log_softmax_rows(scores.values);
  double nats = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) nats -= log_p(static_cast<Eigen::Index>(i), labels[i]);
  CllrResult r;
  r.bits = nats / static_cast<double>(labels.size()) / std::log(2.0);
  r.normalized = r.bits / std::log2(static_cast<double>(scores.classes()));
  return r;
}

void FusionModel::validate() const {
  if (alpha.size() < 1) throw InvalidArgument("fusion model has no sub-systems");
  if (static_cast<std::size_t>(alpha.size()) != systems.size()) throw ShapeError("fusion alpha/system count mismatch");
  if (!alpha.allFinite() || !beta.allFinite()) throw NumericalError("fusion parameters are not finite");
}

double fusion_objective(const std::vector<ScoreMatrix>& systems, const std::vector<int>& labels,
                        const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta, Eigen::VectorXd* gradient) {
  check_aligned(systems);
  check_labels(labels, systems.front().rows(), systems.front().classes());
  if (alpha.size() != static_cast<Eigen::Index>(systems.size()) || beta.size() != systems.front().classes()) {
    throw ShapeError("fusion parameter sizes do not match the sub-systems");
  }
  std::vector<const Eigen::MatrixXd*> s;
  for (const auto& m : systems) s.push_back(&m.values);
  return objective_impl(s, labels, alpha, beta, gradient);
}

FusionModel fit_fusion(const std::vector<ScoreMatrix>& systems, const std::vector<int>& labels,
                       const FusionSettings& settings, const std::optional<FusionModel>& init,
                       FusionFitReport* report) {
  check_aligned(systems);
  const Eigen::Index classes = systems.front().classes();
  check_labels(labels, systems.front().rows(), classes);
  if (labels.empty()) throw InvalidArgument("fusion training set is empty");
  if (std::all_of(labels.begin(), labels.end(), [&](int y) { return y == labels.front(); })) {
    throw InvalidArgument("fusion training labels contain a single class");
  }
  std::vector<const Eigen::MatrixXd*> s;
  for (const auto& m : systems) s.push_back(&m.values);
  const auto k_count = static_cast<Eigen::Index>(systems.size());

  Eigen::VectorXd theta(k_count + classes);
  if (init) {
    if (init->alpha.size() != k_count || init->beta.size() != classes) throw ShapeError("fusion init has wrong shape");
    theta << init->alpha, init->beta;
  } else {
    theta.head(k_count).setConstant(1.0 / static_cast<double>(k_count));
    theta.tail(classes).setZero();
  }
  const auto eval = [&](const Eigen::VectorXd& th, Eigen::VectorXd& g) {
    return objective_impl(s, labels, th.head(k_count), th.tail(classes), &g);
  };

  Eigen::VectorXd grad;
  double f = eval(theta, grad);
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory;  // (s, y) pairs
  int iter = 0;
  bool converged = grad.lpNorm<Eigen::Infinity>() < settings.gradient_tolerance;
  while (!converged && iter < settings.max_iterations) {
    // Two-loop recursion for the quasi-Newton direction.
    Eigen::VectorXd q = grad;
    std::vector<double> a(memory.size());
    for (std::size_t m = memory.size(); m-- > 0;) {
      const auto& [sv, yv] = memory[m];
      a[m] = sv.dot(q) / yv.dot(sv);
      q -= a[m] * yv;
    }
    if (!memory.empty()) {
      const auto& [sv, yv] = memory.back();
      q *= sv.dot(yv) / yv.squaredNorm();
    }
    for (std::size_t m = 0; m < memory.size(); ++m) {
      const auto& [sv, yv] = memory[m];
      const double b = yv.dot(q) / yv.dot(sv);
      q += (a[m] - b) * sv;
    }
    Eigen::VectorXd dir = -q;
    double slope = grad.dot(dir);
    if (!(slope < 0.0)) {
      memory.clear();
      dir = -grad;
      slope = grad.dot(dir);
    }

    double step = 1.0;
    Eigen::VectorXd next;
    Eigen::VectorXd next_grad;
    double next_f = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      next = theta + step * dir;
      next_f = eval(next, next_grad);
      if (std::isfinite(next_f) && next_f <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    ++iter;
    if (!accepted) break;  // no representable decrease left
    Eigen::VectorXd sv = next - theta;
    Eigen::VectorXd yv = next_grad - grad;
    if (sv.dot(yv) > 1e-12) {
      memory.emplace_back(std::move(sv), std::move(yv));
      if (static_cast<int>(memory.size()) > settings.history) memory.pop_front();
    }
    theta = next;
    grad = next_grad;
    f = next_f;
    converged = grad.lpNorm<Eigen::Infinity>() < settings.gradient_tolerance;
  }

  FusionModel model;
  model.alpha = theta.head(k_count);
  model.beta = theta.tail(classes);
  for (const auto& m : systems) model.systems.push_back(m.model_id);
  model.validate();
  if (report) {
    report->objective = f;
    report->gradient_norm = grad.lpNorm<Eigen::Infinity>();
    report->iterations = iter;
    report->converged = converged;
  }
  return model;
}

ScoreMatrix apply_fusion(const FusionModel& model, const std::vector<ScoreMatrix>& systems,
                         const std::string& model_id) {
  model.validate();
  if (systems.size() != model.systems.size()) {
    throw InvalidArgument("fusion model expects " + std::to_string(model.systems.size()) + " sub-systems, got " +
                          std::to_string(systems.size()));
  }
  std::vector<ScoreMatrix> ordered;
  for (const auto& name : model.systems) {
    const auto it = std::find_if(systems.begin(), systems.end(), [&](const ScoreMatrix& m) { return m.model_id == name; });
    if (it == systems.end()) throw InvalidArgument("sub-system '" + name + "' missing from fusion input");
    ordered.push_back(ordered.empty() ? *it : it->reordered(ordered.front().ids));
  }
  if (ordered.front().classes() != model.beta.size()) throw ShapeError("fusion offset does not match class count");
  std::vector<const Eigen::MatrixXd*> s;
  for (const auto& m : ordered) s.push_back(&m.values);
  ScoreMatrix out;
  out.ids = ordered.front().ids;
  out.model_id = model_id;
  out.values = nn::log_softmax_rows(combine(s, model.alpha, model.beta));
  return out;
}

void save_fusion_model(const std::filesystem::path& path, const FusionModel& model) {
  model.validate();
  Checkpoint ck;
  ck.kind = "fusion";
  ck.meta["systems"] = model.systems;
  ck.add("alpha", model.alpha);
  ck.add("beta", model.beta);
  save_checkpoint(path, ck);
}

FusionModel load_fusion_model(const std::filesystem::path& path) {
  const Checkpoint ck = load_checkpoint(path);
  if (ck.kind != "fusion") throw FormatError("checkpoint '" + path.string() + "' holds a '" + ck.kind + "', not a fusion model");
  FusionModel m;
  try {
    m.systems = ck.meta.at("systems").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad fusion descriptor in '" + path.string() + "': " + e.what());
  }
  m.alpha = ck.tensor("alpha", static_cast<Eigen::Index>(m.systems.size()), 1);
  m.beta = ck.tensor("beta", -1, 1);
  return m;
}

}  // namespace emofuse
