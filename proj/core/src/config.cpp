// SPDX-License-Identifier: Apache-2.0
#include "emofuse/config.hpp"

#include <fstream>
#include <set>

#include "emofuse/error.hpp"

namespace emofuse {
namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

nlohmann::json dnn_json(const DnnSystemConfig& c) {
  nlohmann::json model = c.model;
  model.erase("tasks");
  return {{"enabled", c.enabled}, {"multitask", c.multitask}, {"model", model}};
}

void read_dnn(const nlohmann::json& j, DnnSystemConfig& c, const std::string& where) {
  reject_unknown(j, {"enabled", "multitask", "model"}, where);
  c.enabled = j.value("enabled", c.enabled);
  c.multitask = j.value("multitask", c.multitask);
  if (j.contains("model")) {
    reject_unknown(j.at("model"), {"input_kind", "input_dim", "trunk", "branch_width", "dropout", "scale_factor", "train"},
                   where + ".model");
    from_json(j.at("model"), c.model);
  }
}

}  // namespace

void ExperimentConfig::resolve() {
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation_fraction must lie in (0, 1)");
  }
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (task_weights.emotion <= 0.0 || task_weights.speaker < 0.0 || task_weights.gender < 0.0) {
    throw ConfigError("task weights must be non-negative with a positive emotion weight");
  }
  dnn_functional.model.train.seed = seed;
  dnn_embedding.model.train.seed = seed;
  rnn.model.train.seed = seed;
  lexical.svm.seed = seed;
  if (dnn_functional.model.input_kind != "functionals") throw ConfigError("dnn_functional must use functionals input");
  if (dnn_embedding.model.input_kind != "embedding") throw ConfigError("dnn_embedding must use embedding input");
  if (!dnn_functional.enabled && !dnn_embedding.enabled && !rnn.enabled && !lexical.enabled) {
    throw ConfigError("at least one sub-system must be enabled");
  }
  if (lexical.min_df < 1) throw ConfigError("lexical.min_df must be at least 1");
  if (!(lexical.svm.lambda > 0.0) || lexical.svm.epochs < 1) throw ConfigError("lexical svm lambda/epochs invalid");
  if (fusion.max_iterations < 1 || !(fusion.gradient_tolerance > 0.0) || fusion.history < 1) {
    throw ConfigError("fusion settings invalid");
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json rnn_model = rnn.model;
  rnn_model.erase("tasks");
  return {
      {"manifest", manifest.generic_string()},
      {"seed", seed},
      {"validation_fraction", validation_fraction},
      {"workers", workers},
      {"check_files", check_files},
      {"task_weights", {{"emotion", task_weights.emotion}, {"speaker", task_weights.speaker}, {"gender", task_weights.gender}}},
      {"dnn_functional", dnn_json(dnn_functional)},
      {"dnn_embedding", dnn_json(dnn_embedding)},
      {"rnn", {{"enabled", rnn.enabled}, {"multitask", rnn.multitask}, {"model", rnn_model}}},
      {"lexical",
       {{"enabled", lexical.enabled},
        {"min_df", lexical.min_df},
        {"lambda", lexical.svm.lambda},
        {"epochs", lexical.svm.epochs},
        {"project", lexical.svm.project},
        {"require_transcripts", lexical.require_transcripts}}},
      {"fusion",
       {{"max_iterations", fusion.max_iterations},
        {"gradient_tolerance", fusion.gradient_tolerance},
        {"history", fusion.history}}},
  };
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    reject_unknown(j, {"manifest", "seed", "validation_fraction", "workers", "check_files", "task_weights",
                       "dnn_functional", "dnn_embedding", "rnn", "lexical", "fusion"},
                   "config");
    if (j.contains("manifest")) c.manifest = j.at("manifest").get<std::string>();
    c.seed = j.value("seed", c.seed);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.workers = j.value("workers", c.workers);
    c.check_files = j.value("check_files", c.check_files);
    if (j.contains("task_weights")) {
      const auto& w = j.at("task_weights");
      reject_unknown(w, {"emotion", "speaker", "gender"}, "task_weights");
      c.task_weights.emotion = w.value("emotion", c.task_weights.emotion);
      c.task_weights.speaker = w.value("speaker", c.task_weights.speaker);
      c.task_weights.gender = w.value("gender", c.task_weights.gender);
    }
    if (j.contains("dnn_functional")) read_dnn(j.at("dnn_functional"), c.dnn_functional, "dnn_functional");
    if (j.contains("dnn_embedding")) read_dnn(j.at("dnn_embedding"), c.dnn_embedding, "dnn_embedding");
    if (j.contains("rnn")) {
      const auto& r = j.at("rnn");
      reject_unknown(r, {"enabled", "multitask", "model"}, "rnn");
      c.rnn.enabled = r.value("enabled", c.rnn.enabled);
      c.rnn.multitask = r.value("multitask", c.rnn.multitask);
      if (r.contains("model")) {
        reject_unknown(r.at("model"),
                       {"input_dim", "dense_width", "lstm_width", "branch_width", "dropout", "scale_factor", "train"},
                       "rnn.model");
        emofuse::from_json(r.at("model"), c.rnn.model);
      }
    }
    if (j.contains("lexical")) {
      const auto& l = j.at("lexical");
      reject_unknown(l, {"enabled", "min_df", "lambda", "epochs", "project", "require_transcripts"}, "lexical");
      c.lexical.enabled = l.value("enabled", c.lexical.enabled);
      c.lexical.min_df = l.value("min_df", c.lexical.min_df);
      c.lexical.svm.lambda = l.value("lambda", c.lexical.svm.lambda);
      c.lexical.svm.epochs = l.value("epochs", c.lexical.svm.epochs);
      c.lexical.svm.project = l.value("project", c.lexical.svm.project);
      c.lexical.require_transcripts = l.value("require_transcripts", c.lexical.require_transcripts);
    }
    if (j.contains("fusion")) {
      const auto& f = j.at("fusion");
      reject_unknown(f, {"max_iterations", "gradient_tolerance", "history"}, "fusion");
      c.fusion.max_iterations = f.value("max_iterations", c.fusion.max_iterations);
      c.fusion.gradient_tolerance = f.value("gradient_tolerance", c.fusion.gradient_tolerance);
      c.fusion.history = f.value("history", c.fusion.history);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  ExperimentConfig c = ExperimentConfig::from_json(j);
  if (!c.manifest.empty() && c.manifest.is_relative()) c.manifest = path.parent_path() / c.manifest;
  return c;
}

}  // namespace emofuse
