// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "emofuse/dsp.hpp"
#include "emofuse/labels.hpp"
#include "emofuse/nn/attention.hpp"
#include "emofuse/nn/layers.hpp"
#include "emofuse/nn/loss.hpp"
#include "emofuse/nn/lstm.hpp"
#include "emofuse/normalize.hpp"
#include "emofuse/scores.hpp"

namespace emofuse {
namespace nn {
void to_json(nlohmann::json& j, const MultiTaskLossSpec& s);
void from_json(const nlohmann::json& j, MultiTaskLossSpec& s);
}  // namespace nn

/// Model inputs plus per-task integer labels (keyed by task name).
struct Dataset {
  std::vector<std::string> ids;
  Eigen::MatrixXd vectors;                  // N x D, utterance-level models
  std::vector<Eigen::MatrixXd> sequences;   // T_i x F, sequence models
  std::map<std::string, std::vector<int>> labels;

  std::size_t size() const { return ids.size(); }
  Dataset subset(std::span<const std::size_t> rows) const;
  /// Throws InvalidArgument when the task has no labels.
  const std::vector<int>& task_labels(const std::string& task) const;
};

struct LabelVocabularies {
  std::vector<std::string> emotion = emotion_vocabulary();
  std::vector<std::string> speaker;
  std::vector<std::string> gender = gender_vocabulary();
};

struct TrainSettings {
  std::string optimizer = "sgd";  // "sgd" | "adam"
  double learning_rate = 0.01;
  int epochs = 100;
  int patience = 20;  // epochs without validation-MAF improvement before stopping
  int batch_size = 32;
  std::uint64_t seed = 1;
  double clip_norm = 0.0;  // global gradient-norm clip; 0 disables
};

struct MultiTaskDnnConfig {
  std::string input_kind = "functionals";  // "functionals" | "embedding"
  Eigen::Index input_dim = kFunctionalDim;
  std::vector<int> trunk{4096, 4096};
  int branch_width = 2048;
  nn::MultiTaskLossSpec tasks = nn::MultiTaskLossSpec::emotion_only(kEmotionCount);
  double dropout = 0.5;
  double scale_factor = 1.0;
  TrainSettings train;

  static MultiTaskDnnConfig functional_defaults();
  static MultiTaskDnnConfig embedding_defaults();
  std::vector<int> scaled_trunk() const;
  int scaled_branch() const;
  void validate() const;
};

struct AttentionRnnConfig {
  Eigen::Index input_dim = kLldCount;
  int dense_width = 256;
  int lstm_width = 128;  // per direction
  int branch_width = 256;
  nn::MultiTaskLossSpec tasks = nn::MultiTaskLossSpec::emotion_only(kEmotionCount);
  double dropout = 0.5;
  double scale_factor = 1.0;
  TrainSettings train{"adam", 0.001, 100, 20, 32, 1, 5.0};

  int scaled_dense() const;
  int scaled_lstm() const;
  int scaled_branch() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainSettings& s);
void from_json(const nlohmann::json& j, TrainSettings& s);
void to_json(nlohmann::json& j, const MultiTaskDnnConfig& c);
void from_json(const nlohmann::json& j, MultiTaskDnnConfig& c);
void to_json(nlohmann::json& j, const AttentionRnnConfig& c);
void from_json(const nlohmann::json& j, AttentionRnnConfig& c);

/// Common surface of the trainable neural sub-systems.
class NeuralModel {
 public:
  virtual ~NeuralModel() = default;

  virtual std::string kind() const = 0;
  virtual bool sequential() const = 0;
  virtual Eigen::Index input_dim() const = 0;
  virtual const nn::MultiTaskLossSpec& tasks() const = 0;
  virtual const TrainSettings& train_settings() const = 0;
  virtual nlohmann::json config_json() const = 0;

  /// Parameters in a stable order (trunk first, then task branches).
  virtual std::vector<nn::Parameter*> parameters() = 0;

  /// Per-task logits for `rows` of prepared `data`. Tasks whose `active`
  /// flag is false are skipped and yield empty matrices.
  virtual std::vector<nn::Matrix> forward(const Dataset& data, std::span<const std::size_t> rows, nn::Mode mode,
                                          std::uint64_t step, const std::vector<bool>& active) = 0;
  /// Gradients of the loss w.r.t. the logits of the last forward call;
  /// empty entries mark inactive tasks.
  virtual void backward(const std::vector<nn::Matrix>& d_logits) = 0;

  /// Inference-time input transform: train-statistics z-norm for vector
  /// models (when stats are attached), within-utterance z-norm for sequences.
  Dataset prepare(const Dataset& raw) const;
  std::size_t parameter_count();

  std::string model_id;
  LabelVocabularies vocabularies;
  std::optional<NormalizationStats> normalization;
};

class MultiTaskDnn final : public NeuralModel {
 public:
  explicit MultiTaskDnn(MultiTaskDnnConfig config);

  std::string kind() const override { return "multitask_dnn"; }
  bool sequential() const override { return false; }
  Eigen::Index input_dim() const override { return config_.input_dim; }
  const nn::MultiTaskLossSpec& tasks() const override { return config_.tasks; }
  const TrainSettings& train_settings() const override { return config_.train; }
  nlohmann::json config_json() const override;
  std::vector<nn::Parameter*> parameters() override;
  std::vector<nn::Matrix> forward(const Dataset& data, std::span<const std::size_t> rows, nn::Mode mode,
                                  std::uint64_t step, const std::vector<bool>& active) override;
  void backward(const std::vector<nn::Matrix>& d_logits) override;

  const MultiTaskDnnConfig& config() const { return config_; }
  /// Parameters of the trunk and the emotion branch only.
  std::vector<nn::Parameter*> shared_and_emotion_parameters();

 private:
  struct Branch {
    nn::Dense hidden;
    nn::Dropout drop;
    nn::Dense output;
  };
  void initialize();

  MultiTaskDnnConfig config_;
  std::vector<nn::Dense> trunk_;
  std::vector<nn::Dropout> trunk_drop_;
  std::vector<Branch> branches_;
  std::vector<bool> active_;
};

class AttentionRnn final : public NeuralModel {
 public:
  explicit AttentionRnn(AttentionRnnConfig config);

  std::string kind() const override { return "attention_rnn"; }
  bool sequential() const override { return true; }
  Eigen::Index input_dim() const override { return config_.input_dim; }
  const nn::MultiTaskLossSpec& tasks() const override { return config_.tasks; }
  const TrainSettings& train_settings() const override { return config_.train; }
  nlohmann::json config_json() const override;
  std::vector<nn::Parameter*> parameters() override;
  std::vector<nn::Matrix> forward(const Dataset& data, std::span<const std::size_t> rows, nn::Mode mode,
                                  std::uint64_t step, const std::vector<bool>& active) override;
  void backward(const std::vector<nn::Matrix>& d_logits) override;

  const AttentionRnnConfig& config() const { return config_; }
  Eigen::Index pooled_width() const { return blstm_.output_dim(); }
  /// Pooled representation and attention weights of the last forward call.
  const nn::Matrix& last_pooled() const { return pooled_; }
  const nn::Matrix& last_attention() const { return pool_.weights(); }
  const nn::Matrix& last_blstm_step(int t) const { return hidden_.steps[static_cast<std::size_t>(t)]; }

 private:
  struct Branch {
    nn::Dense hidden;
    nn::Dropout drop;
    nn::Dense output;
  };
  void initialize();

  AttentionRnnConfig config_;
  nn::Dense frame_dense_;
  nn::Dropout frame_drop_;
  nn::BiLstm blstm_;
  nn::AttentionPool pool_;
  std::vector<Branch> branches_;
  std::vector<bool> active_;
  std::vector<int> lengths_;
  int max_length_ = 0;
  nn::SequenceBatch hidden_;
  nn::Matrix pooled_;
};

std::unique_ptr<MultiTaskDnn> build_multitask_dnn(const MultiTaskDnnConfig& config);
std::unique_ptr<AttentionRnn> build_attention_rnn(const AttentionRnnConfig& config);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;       // weighted multi-task objective, nats
  double validation_loss = 0.0;  // emotion cross-entropy, nats
  double validation_maf = 0.0;   // fraction in [0, 1]
  long optimizer_steps = 0;      // cumulative
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_validation_maf = -1.0;
  long optimizer_steps = 0;
  bool early_stopped = false;

  nlohmann::json to_json() const;
};

/// Minibatch training on prepared data; keeps the parameters of the epoch
/// with the best validation emotion MAF.
TrainHistory train_model(NeuralModel& model, const Dataset& train, const Dataset& validation);

/// N x 8 emotion log-posteriors on prepared data, inference mode, one item
/// per forward pass.
Eigen::MatrixXd emotion_log_posteriors(NeuralModel& model, const Dataset& prepared);

/// Applies model.prepare() then scores the emotion head. Throws ShapeError
/// when the input dimension differs from the trained one.
ScoreMatrix predict_scores(NeuralModel& model, const Dataset& raw);

void save_model(NeuralModel& model, const std::filesystem::path& path);
std::unique_ptr<NeuralModel> load_model(const std::filesystem::path& path);

}  // namespace emofuse
