// SPDX-License-Identifier: Apache-2.0
#include "emofuse/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "emofuse/checkpoint.hpp"
#include "emofuse/error.hpp"
#include "emofuse/eval.hpp"
#include "emofuse/nn/optim.hpp"

namespace emofuse {
namespace {

int scaled(int width, double factor) {
  return std::max(1, static_cast<int>(std::lround(width * factor)));
}

void check_train_settings(const TrainSettings& s) {
  if (s.optimizer != "sgd" && s.optimizer != "adam") {
    throw ConfigError("unknown optimizer '" + s.optimizer + "' (expected sgd or adam)");
  }
  if (!(s.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (s.epochs < 1 || s.batch_size < 1 || s.patience < 1) {
    throw ConfigError("epochs, batch size and patience must be positive");
  }
  if (s.clip_norm < 0.0) throw ConfigError("clip_norm must be non-negative");
}

// Emotion branch first so its initialisation never depends on auxiliary tasks.
std::vector<std::size_t> init_order(const nn::MultiTaskLossSpec& tasks) {
  std::vector<std::size_t> order;
  const int emotion = tasks.index_of("emotion");
  order.push_back(static_cast<std::size_t>(emotion));
  for (std::size_t i = 0; i < tasks.tasks.size(); ++i) {
    if (static_cast<int>(i) != emotion) order.push_back(i);
  }
  return order;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  for (std::size_t r : rows) {
    if (r >= size()) throw InvalidArgument("dataset row " + std::to_string(r) + " out of range");
    out.ids.push_back(ids[r]);
  }
  if (vectors.size() > 0) {
    out.vectors.resize(static_cast<Eigen::Index>(rows.size()), vectors.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.vectors.row(static_cast<Eigen::Index>(i)) = vectors.row(static_cast<Eigen::Index>(rows[i]));
    }
  }
  if (!sequences.empty()) {
    for (std::size_t r : rows) out.sequences.push_back(sequences[r]);
  }
  for (const auto& [task, lbl] : labels) {
    auto& dst = out.labels[task];
    for (std::size_t r : rows) dst.push_back(lbl[r]);
  }
  return out;
}

const std::vector<int>& Dataset::task_labels(const std::string& task) const {
  const auto it = labels.find(task);
  if (it == labels.end()) throw InvalidArgument("dataset has no labels for task '" + task + "'");
  return it->second;
}

// ---------------------------------------------------------------- configs

MultiTaskDnnConfig MultiTaskDnnConfig::functional_defaults() { return {}; }

MultiTaskDnnConfig MultiTaskDnnConfig::embedding_defaults() {
  MultiTaskDnnConfig c;
  c.input_kind = "embedding";
  c.input_dim = kEmbeddingDim;
  c.trunk = {1024, 1024};
  c.branch_width = 1024;
  return c;
}

std::vector<int> MultiTaskDnnConfig::scaled_trunk() const {
  std::vector<int> out;
  for (int w : trunk) out.push_back(scaled(w, scale_factor));
  return out;
}

int MultiTaskDnnConfig::scaled_branch() const { return scaled(branch_width, scale_factor); }

void MultiTaskDnnConfig::validate() const {
  if (input_kind != "functionals" && input_kind != "embedding") {
    throw ConfigError("unknown DNN input kind '" + input_kind + "'");
  }
  if (input_dim < 1) throw ConfigError("DNN input_dim must be positive");
  if (trunk.size() != 2) throw ConfigError("multi-task DNN trunk must have exactly two layers");
  if (std::any_of(trunk.begin(), trunk.end(), [](int w) { return w < 1; }) || branch_width < 1) {
    throw ConfigError("DNN layer widths must be positive");
  }
  if (!(scale_factor > 0.0)) throw ConfigError("scale_factor must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  tasks.validate();
  if (tasks.tasks[static_cast<std::size_t>(tasks.index_of("emotion"))].class_count != kEmotionCount) {
    throw ConfigError("emotion head must have 8 classes");
  }
  check_train_settings(train);
}

int AttentionRnnConfig::scaled_dense() const { return scaled(dense_width, scale_factor); }
int AttentionRnnConfig::scaled_lstm() const { return scaled(lstm_width, scale_factor); }
int AttentionRnnConfig::scaled_branch() const { return scaled(branch_width, scale_factor); }

void AttentionRnnConfig::validate() const {
  if (input_dim < 1) throw ConfigError("RNN input_dim must be positive");
  if (dense_width < 1 || lstm_width < 1 || branch_width < 1) throw ConfigError("RNN layer widths must be positive");
  if (!(scale_factor > 0.0)) throw ConfigError("scale_factor must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  tasks.validate();
  if (tasks.tasks[static_cast<std::size_t>(tasks.index_of("emotion"))].class_count != kEmotionCount) {
    throw ConfigError("emotion head must have 8 classes");
  }
  check_train_settings(train);
}

void to_json(nlohmann::json& j, const TrainSettings& s) {
  j = {{"optimizer", s.optimizer}, {"learning_rate", s.learning_rate}, {"epochs", s.epochs},
       {"patience", s.patience},   {"batch_size", s.batch_size},       {"seed", s.seed},
       {"clip_norm", s.clip_norm}};
}

void from_json(const nlohmann::json& j, TrainSettings& s) {
  s.optimizer = j.value("optimizer", s.optimizer);
  s.learning_rate = j.value("learning_rate", s.learning_rate);
  s.epochs = j.value("epochs", s.epochs);
  s.patience = j.value("patience", s.patience);
  s.batch_size = j.value("batch_size", s.batch_size);
  s.seed = j.value("seed", s.seed);
  s.clip_norm = j.value("clip_norm", s.clip_norm);
}

void nn::to_json(nlohmann::json& j, const nn::MultiTaskLossSpec& s) {
  j = nlohmann::json::array();
  for (const auto& t : s.tasks) j.push_back({{"name", t.name}, {"classes", t.class_count}, {"weight", t.weight}});
}

void nn::from_json(const nlohmann::json& j, nn::MultiTaskLossSpec& s) {
  s.tasks.clear();
  for (const auto& t : j) {
    s.tasks.push_back({t.at("name").get<std::string>(), t.value("classes", 0), t.at("weight").get<double>()});
  }
}

void to_json(nlohmann::json& j, const MultiTaskDnnConfig& c) {
  j = {{"input_kind", c.input_kind}, {"input_dim", c.input_dim}, {"trunk", c.trunk},
       {"branch_width", c.branch_width}, {"tasks", c.tasks}, {"dropout", c.dropout},
       {"scale_factor", c.scale_factor}, {"train", c.train}};
}

void from_json(const nlohmann::json& j, MultiTaskDnnConfig& c) {
  c.input_kind = j.value("input_kind", c.input_kind);
  c.input_dim = j.value("input_dim", c.input_dim);
  if (j.contains("trunk")) c.trunk = j.at("trunk").get<std::vector<int>>();
  c.branch_width = j.value("branch_width", c.branch_width);
  if (j.contains("tasks")) c.tasks = j.at("tasks").get<nn::MultiTaskLossSpec>();
  c.dropout = j.value("dropout", c.dropout);
  c.scale_factor = j.value("scale_factor", c.scale_factor);
  if (j.contains("train")) from_json(j.at("train"), c.train);
}

void to_json(nlohmann::json& j, const AttentionRnnConfig& c) {
  j = {{"input_dim", c.input_dim},   {"dense_width", c.dense_width},   {"lstm_width", c.lstm_width},
       {"branch_width", c.branch_width}, {"tasks", c.tasks},           {"dropout", c.dropout},
       {"scale_factor", c.scale_factor}, {"train", c.train}};
}

void from_json(const nlohmann::json& j, AttentionRnnConfig& c) {
  c.input_dim = j.value("input_dim", c.input_dim);
  c.dense_width = j.value("dense_width", c.dense_width);
  c.lstm_width = j.value("lstm_width", c.lstm_width);
  c.branch_width = j.value("branch_width", c.branch_width);
  if (j.contains("tasks")) c.tasks = j.at("tasks").get<nn::MultiTaskLossSpec>();
  c.dropout = j.value("dropout", c.dropout);
  c.scale_factor = j.value("scale_factor", c.scale_factor);
  if (j.contains("train")) from_json(j.at("train"), c.train);
}

// ---------------------------------------------------------------- base

Dataset NeuralModel::prepare(const Dataset& raw) const {
  Dataset out = raw;
  if (sequential()) {
    for (auto& s : out.sequences) s = znorm_sequence(s);
  } else if (normalization) {
    out.vectors = apply_znorm_rows(raw.vectors, *normalization);
  }
  return out;
}

std::size_t NeuralModel::parameter_count() {
  std::size_t n = 0;
  for (const nn::Parameter* p : parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

// ---------------------------------------------------------------- DNN

MultiTaskDnn::MultiTaskDnn(MultiTaskDnnConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto widths = config_.scaled_trunk();
  Eigen::Index in = config_.input_dim;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string name = "trunk." + std::to_string(i);
    trunk_.emplace_back(name, in, widths[i], nn::Activation::kRelu);
    trunk_drop_.emplace_back(name + ".dropout", config_.dropout);
    in = widths[i];
  }
  const int branch = config_.scaled_branch();
  for (const auto& task : config_.tasks.tasks) {
    const std::string name = "branch." + task.name;
    branches_.push_back({nn::Dense(name + ".hidden", in, branch, nn::Activation::kRelu),
                         nn::Dropout(name + ".dropout", config_.dropout),
                         nn::Dense(name + ".output", branch, task.class_count, nn::Activation::kLinear)});
  }
  initialize();
}

void MultiTaskDnn::initialize() {
  std::mt19937_64 rng(config_.train.seed);
  for (auto& layer : trunk_) layer.initialize(rng);
  for (std::size_t k : init_order(config_.tasks)) {
    branches_[k].hidden.initialize(rng);
    branches_[k].output.initialize(rng);
  }
}

nlohmann::json MultiTaskDnn::config_json() const { return config_; }

std::vector<nn::Parameter*> MultiTaskDnn::parameters() {
  std::vector<nn::Parameter*> out;
  for (auto& layer : trunk_) layer.collect(out);
  for (auto& b : branches_) {
    b.hidden.collect(out);
    b.output.collect(out);
  }
  return out;
}

std::vector<nn::Parameter*> MultiTaskDnn::shared_and_emotion_parameters() {
  std::vector<nn::Parameter*> out;
  for (auto& layer : trunk_) layer.collect(out);
  auto& emotion = branches_[static_cast<std::size_t>(config_.tasks.index_of("emotion"))];
  emotion.hidden.collect(out);
  emotion.output.collect(out);
  return out;
}

std::vector<nn::Matrix> MultiTaskDnn::forward(const Dataset& data, std::span<const std::size_t> rows, nn::Mode mode,
                                              std::uint64_t step, const std::vector<bool>& active) {
  if (data.vectors.cols() != config_.input_dim) {
    throw ShapeError("model expects " + std::to_string(config_.input_dim) + "-dim input, got " +
                     std::to_string(data.vectors.cols()) + "-dim");
  }
  nn::Matrix x(static_cast<Eigen::Index>(rows.size()), config_.input_dim);
  for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = data.vectors.row(static_cast<Eigen::Index>(rows[i]));

  const std::uint64_t seed = config_.train.seed;
  for (std::size_t i = 0; i < trunk_.size(); ++i) {
    x = trunk_drop_[i].forward(trunk_[i].forward(x), mode, seed, step);
  }
  active_ = active;
  std::vector<nn::Matrix> logits(branches_.size());
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    if (!active[k]) continue;
    auto& b = branches_[k];
    logits[k] = b.output.forward(b.drop.forward(b.hidden.forward(x), mode, seed, step));
  }
  return logits;
}

void MultiTaskDnn::backward(const std::vector<nn::Matrix>& d_logits) {
  nn::Matrix d_trunk;
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    if (!active_[k] || d_logits[k].size() == 0) continue;
    auto& b = branches_[k];
    nn::Matrix d = b.hidden.backward(b.drop.backward(b.output.backward(d_logits[k])));
    if (d_trunk.size() == 0) {
      d_trunk = std::move(d);
    } else {
      d_trunk += d;
    }
  }
  if (d_trunk.size() == 0) return;
  for (std::size_t i = trunk_.size(); i-- > 0;) d_trunk = trunk_[i].backward(trunk_drop_[i].backward(d_trunk));
}

std::unique_ptr<MultiTaskDnn> build_multitask_dnn(const MultiTaskDnnConfig& config) {
  return std::make_unique<MultiTaskDnn>(config);
}

// ---------------------------------------------------------------- RNN

AttentionRnn::AttentionRnn(AttentionRnnConfig config)
    : config_(std::move(config)),
      frame_dense_((config_.validate(), "frame_dense"), config_.input_dim, config_.scaled_dense(), nn::Activation::kRelu),
      frame_drop_("frame_dense.dropout", config_.dropout),
      blstm_("blstm", config_.scaled_dense(), config_.scaled_lstm()),
      pool_("attention", 2 * config_.scaled_lstm()) {
  const int branch = config_.scaled_branch();
  for (const auto& task : config_.tasks.tasks) {
    const std::string name = "branch." + task.name;
    branches_.push_back({nn::Dense(name + ".hidden", blstm_.output_dim(), branch, nn::Activation::kRelu),
                         nn::Dropout(name + ".dropout", config_.dropout),
                         nn::Dense(name + ".output", branch, task.class_count, nn::Activation::kLinear)});
  }
  initialize();
}

void AttentionRnn::initialize() {
  std::mt19937_64 rng(config_.train.seed);
  frame_dense_.initialize(rng);
  blstm_.initialize(rng);
  pool_.initialize(rng);
  for (std::size_t k : init_order(config_.tasks)) {
    branches_[k].hidden.initialize(rng);
    branches_[k].output.initialize(rng);
  }
}

nlohmann::json AttentionRnn::config_json() const { return config_; }

std::vector<nn::Parameter*> AttentionRnn::parameters() {
  std::vector<nn::Parameter*> out;
  frame_dense_.collect(out);
  blstm_.collect(out);
  pool_.collect(out);
  for (auto& b : branches_) {
    b.hidden.collect(out);
    b.output.collect(out);
  }
  return out;
}

std::vector<nn::Matrix> AttentionRnn::forward(const Dataset& data, std::span<const std::size_t> rows, nn::Mode mode,
                                              std::uint64_t step, const std::vector<bool>& active) {
  std::vector<nn::Matrix> seqs;
  seqs.reserve(rows.size());
  for (std::size_t r : rows) {
    const auto& s = data.sequences.at(r);
    if (s.cols() != config_.input_dim) {
      throw ShapeError("model expects " + std::to_string(config_.input_dim) + "-dim frames, got " +
                       std::to_string(s.cols()) + "-dim");
    }
    seqs.push_back(s);
  }
  const nn::SequenceBatch batch = nn::SequenceBatch::pack(seqs);
  lengths_ = batch.lengths;
  max_length_ = batch.max_length();

  const std::uint64_t seed = config_.train.seed;
  const nn::Matrix frames = frame_drop_.forward(frame_dense_.forward(batch.stacked()), mode, seed, step);
  nn::SequenceBatch projected = nn::SequenceBatch::unstack(frames, lengths_, max_length_);
  projected.apply_mask();
  hidden_ = blstm_.forward(projected);
  pooled_ = pool_.forward(hidden_);

  active_ = active;
  std::vector<nn::Matrix> logits(branches_.size());
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    if (!active[k]) continue;
    auto& b = branches_[k];
    logits[k] = b.output.forward(b.drop.forward(b.hidden.forward(pooled_), mode, seed, step));
  }
  return logits;
}

void AttentionRnn::backward(const std::vector<nn::Matrix>& d_logits) {
  nn::Matrix d_pooled;
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    if (!active_[k] || d_logits[k].size() == 0) continue;
    auto& b = branches_[k];
    nn::Matrix d = b.hidden.backward(b.drop.backward(b.output.backward(d_logits[k])));
    if (d_pooled.size() == 0) {
      d_pooled = std::move(d);
    } else {
      d_pooled += d;
    }
  }
  if (d_pooled.size() == 0) return;
  nn::SequenceBatch d_projected = blstm_.backward(pool_.backward(d_pooled));
  d_projected.apply_mask();
  frame_dense_.backward(frame_drop_.backward(d_projected.stacked()));
}

std::unique_ptr<AttentionRnn> build_attention_rnn(const AttentionRnnConfig& config) {
  return std::make_unique<AttentionRnn>(config);
}

// ---------------------------------------------------------------- training

nlohmann::json TrainHistory::to_json() const {
  nlohmann::json j;
  j["best_epoch"] = best_epoch;
  j["best_validation_maf"] = best_validation_maf;
  j["optimizer_steps"] = optimizer_steps;
  j["early_stopped"] = early_stopped;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : epochs) {
    rows.push_back({{"epoch", e.epoch},
                    {"train_loss", e.train_loss},
                    {"validation_loss", e.validation_loss},
                    {"validation_maf", e.validation_maf},
                    {"optimizer_steps", e.optimizer_steps}});
  }
  j["epochs"] = rows;
  return j;
}

Eigen::MatrixXd emotion_log_posteriors(NeuralModel& model, const Dataset& prepared) {
  const auto& tasks = model.tasks().tasks;
  const auto emotion = static_cast<std::size_t>(model.tasks().index_of("emotion"));
  std::vector<bool> active(tasks.size(), false);
  active[emotion] = true;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(prepared.size()), kEmotionCount);
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    const std::size_t row[] = {i};
    const auto logits = model.forward(prepared, row, nn::Mode::kInfer, 0, active);
    out.row(static_cast<Eigen::Index>(i)) = nn::log_softmax_rows(logits[emotion]).row(0);
  }
  return out;
}

TrainHistory train_model(NeuralModel& model, const Dataset& train, const Dataset& validation) {
  if (train.size() == 0) throw InvalidArgument("training split is empty");
  if (validation.size() == 0) throw InvalidArgument("validation split is empty");
  const TrainSettings& settings = model.train_settings();
  const auto& tasks = model.tasks().tasks;

  std::vector<bool> active(tasks.size());
  std::vector<const std::vector<int>*> labels(tasks.size(), nullptr);
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    active[k] = tasks[k].weight > 0.0;
    if (!active[k]) continue;
    labels[k] = &train.task_labels(tasks[k].name);
    if (labels[k]->size() != train.size()) throw ShapeError("task '" + tasks[k].name + "' label count mismatch");
    for (int y : *labels[k]) {
      if (y < 0 || y >= tasks[k].class_count) {
        throw InvalidArgument("label " + std::to_string(y) + " outside the '" + tasks[k].name + "' vocabulary");
      }
    }
  }
  const std::vector<int>& val_emotion = validation.task_labels("emotion");
  for (int y : val_emotion) {
    if (y < 0 || y >= kEmotionCount) throw InvalidArgument("validation emotion label outside vocabulary");
  }

  const auto params = model.parameters();
  nn::Sgd sgd(settings.learning_rate);
  nn::Adam adam(settings.learning_rate);
  const bool use_adam = settings.optimizer == "adam";

  std::mt19937_64 shuffle_rng(settings.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainHistory history;
  std::vector<nn::Matrix> best;
  for (const nn::Parameter* p : params) best.push_back(p->value);
  int stale = 0;
  std::uint64_t step = 0;

  for (int epoch = 1; epoch <= settings.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(shuffle_rng() % i);
      std::swap(order[i - 1], order[j]);
    }
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(settings.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(settings.batch_size));
      const std::span<const std::size_t> rows(order.data() + start, end - start);

      for (nn::Parameter* p : params) p->zero_grad();
      const auto logits = model.forward(train, rows, nn::Mode::kTrain, step, active);
      std::vector<nn::Matrix> d_logits(tasks.size());
      double total = 0.0;
      for (std::size_t k = 0; k < tasks.size(); ++k) {
        if (!active[k]) continue;
        std::vector<int> y;
        y.reserve(rows.size());
        for (std::size_t r : rows) y.push_back((*labels[k])[r]);
        const auto loss = nn::softmax_cross_entropy(logits[k], y);
        total += tasks[k].weight * loss.loss;
        d_logits[k] = tasks[k].weight * loss.gradient(y);
      }
      if (!std::isfinite(total)) {
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      model.backward(d_logits);
      if (settings.clip_norm > 0.0) nn::clip_global_norm(params, settings.clip_norm);
      if (use_adam) {
        adam.step(params);
      } else {
        sgd.step(params);
      }
      ++step;
      epoch_loss += total * static_cast<double>(rows.size());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(train.size());
    rec.optimizer_steps = static_cast<long>(step);
    const Eigen::MatrixXd log_p = emotion_log_posteriors(model, validation);
    double val_loss = 0.0;
    for (std::size_t i = 0; i < validation.size(); ++i) val_loss -= log_p(static_cast<Eigen::Index>(i), val_emotion[i]);
    rec.validation_loss = val_loss / static_cast<double>(validation.size());
    const auto predicted = argmax_rows(log_p);
    rec.validation_maf = macro_f1(confusion_matrix(val_emotion, predicted, kEmotionCount)).maf;
    history.epochs.push_back(rec);

    if (rec.validation_maf > history.best_validation_maf) {
      history.best_validation_maf = rec.validation_maf;
      history.best_epoch = epoch;
      for (std::size_t i = 0; i < params.size(); ++i) best[i] = params[i]->value;
      stale = 0;
    } else if (++stale >= settings.patience) {
      history.early_stopped = true;
      break;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best[i];
  history.optimizer_steps = static_cast<long>(step);
  return history;
}

ScoreMatrix predict_scores(NeuralModel& model, const Dataset& raw) {
  if (model.sequential()) {
    for (const auto& s : raw.sequences) {
      if (s.cols() != model.input_dim()) {
        throw ShapeError("model '" + model.model_id + "' expects " + std::to_string(model.input_dim()) +
                         "-dim frames, got " + std::to_string(s.cols()) + "-dim");
      }
    }
    if (raw.sequences.size() != raw.size()) throw ShapeError("one sequence per utterance id expected");
  } else if (raw.vectors.cols() != model.input_dim() || raw.vectors.rows() != static_cast<Eigen::Index>(raw.size())) {
    throw ShapeError("model '" + model.model_id + "' expects " + std::to_string(model.input_dim()) +
                     "-dim input, got " + std::to_string(raw.vectors.cols()) + "-dim");
  }
  ScoreMatrix s;
  s.ids = raw.ids;
  s.model_id = model.model_id;
  s.values = emotion_log_posteriors(model, model.prepare(raw));
  return s;
}

// ---------------------------------------------------------------- checkpoints

void save_model(NeuralModel& model, const std::filesystem::path& path) {
  Checkpoint ck;
  ck.kind = model.kind();
  ck.meta["model_id"] = model.model_id;
  ck.meta["config"] = model.config_json();
  ck.meta["input_dim"] = model.input_dim();
  ck.meta["vocabularies"] = {{"emotion", model.vocabularies.emotion},
                             {"speaker", model.vocabularies.speaker},
                             {"gender", model.vocabularies.gender}};
  ck.meta["input_transform"] = model.sequential() ? "znorm_within_utterance"
                                                  : (model.normalization ? "znorm_train_stats" : "none");
  for (const nn::Parameter* p : model.parameters()) ck.add(p->name, p->value);
  if (model.normalization) {
    ck.add("normalization.mean", model.normalization->mean);
    ck.add("normalization.stddev", model.normalization->stddev);
  }
  save_checkpoint(path, ck);
}

std::unique_ptr<NeuralModel> load_model(const std::filesystem::path& path) {
  const Checkpoint ck = load_checkpoint(path);
  std::unique_ptr<NeuralModel> model;
  try {
    if (ck.kind == "multitask_dnn") {
      model = build_multitask_dnn(ck.meta.at("config").get<MultiTaskDnnConfig>());
    } else if (ck.kind == "attention_rnn") {
      model = build_attention_rnn(ck.meta.at("config").get<AttentionRnnConfig>());
    } else {
      throw FormatError("checkpoint '" + path.string() + "' holds a '" + ck.kind + "', not a neural model");
    }
    if (ck.meta.at("input_dim").get<Eigen::Index>() != model->input_dim()) {
      throw FormatError("checkpoint '" + path.string() + "' input_dim disagrees with its architecture");
    }
    model->model_id = ck.meta.at("model_id").get<std::string>();
    const auto& vocab = ck.meta.at("vocabularies");
    model->vocabularies.emotion = vocab.at("emotion").get<std::vector<std::string>>();
    model->vocabularies.speaker = vocab.at("speaker").get<std::vector<std::string>>();
    model->vocabularies.gender = vocab.at("gender").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad model descriptor in '" + path.string() + "': " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError("invalid architecture in '" + path.string() + "': " + e.what());
  }
  for (nn::Parameter* p : model->parameters()) {
    p->value = ck.tensor(p->name, p->value.rows(), p->value.cols());
    p->zero_grad();
  }
  if (ck.has("normalization.mean")) {
    NormalizationStats stats;
    stats.mean = ck.tensor("normalization.mean", model->input_dim(), 1);
    stats.stddev = ck.tensor("normalization.stddev", model->input_dim(), 1);
    model->normalization = std::move(stats);
  }
  return model;
}

}  // namespace emofuse
