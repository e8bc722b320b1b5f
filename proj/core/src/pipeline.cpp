// SPDX-License-Identifier: Apache-2.0
#include "emofuse/pipeline.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "emofuse/audio.hpp"
#include "emofuse/dsp.hpp"
#include "emofuse/eval.hpp"
#include "emofuse/feature_io.hpp"
#include "emofuse/fusion.hpp"
#include "emofuse/labels.hpp"
#include "emofuse/lexical.hpp"
#include "emofuse/models.hpp"
#include "emofuse/nn/tensor.hpp"
#include "emofuse/normalize.hpp"
#include "emofuse/scores.hpp"

namespace emofuse {
namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' (has the producing stage run?)");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

// Runs `stage` and rethrows library errors tagged with the stage name.
template <typename F>
void guarded(const std::string& stage, F&& body) {
  try {
    body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

std::string id_digest(const std::vector<std::string>& ids) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& id : ids) h = (h ^ nn::hash_string(id)) * 1099511628211ULL;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void assert_no_test_items(const std::vector<std::string>& fit_ids, const std::vector<std::string>& test_ids,
                          const std::string& artifact) {
  const std::set<std::string> test(test_ids.begin(), test_ids.end());
  for (const auto& id : fit_ids) {
    if (test.contains(id)) throw Error("test item '" + id + "' would influence " + artifact);
  }
}

// Parallel map over items; results land at their own index so the output
// order never depends on scheduling.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::unordered_map<std::string, const FeatureRecord*> index_records(const FeatureFile& f) {
  std::unordered_map<std::string, const FeatureRecord*> m;
  for (const auto& r : f.records) m.emplace(r.id, &r);
  return m;
}


std::vector<const UtteranceRecord*> select(const std::vector<UtteranceRecord>& all, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const UtteranceRecord*> by_id;
  for (const auto& r : all) by_id.emplace(r.id, &r);
  std::vector<const UtteranceRecord*> out;
  for (const auto& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw InvalidArgument("split lists unknown utterance '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

std::vector<std::string> speaker_vocabulary(const std::vector<const UtteranceRecord*>& train) {
  std::set<std::string> s;
  for (const auto* r : train) s.insert(r->speaker);
  return {s.begin(), s.end()};
}

Dataset build_dataset(const std::vector<const UtteranceRecord*>& items, const FeatureFile& features, bool sequential,
                      const std::vector<std::string>& speakers) {
  const auto index = index_records(features);
  Dataset d;
  if (!sequential) d.vectors.resize(static_cast<Eigen::Index>(items.size()), features.dim());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto* r = items[i];
    const auto it = index.find(r->id);
    if (it == index.end()) throw InvalidArgument("features '" + features.kind + "' lack utterance '" + r->id + "'");
    d.ids.push_back(r->id);
    if (sequential) {
      d.sequences.push_back(it->second->values);
    } else {
      if (it->second->values.rows() != 1) throw ShapeError("utterance feature '" + r->id + "' is not a single row");
      d.vectors.row(static_cast<Eigen::Index>(i)) = it->second->values.row(0);
    }
    d.labels["emotion"].push_back(emotion_index(r->emotion));
    d.labels["gender"].push_back(gender_index(r->gender));
    d.labels["speaker"].push_back(vocabulary_index(speakers, r->speaker));
  }
  return d;
}

nn::MultiTaskLossSpec task_spec(bool multitask, const TaskWeights& w, int speakers) {
  if (!multitask) return nn::MultiTaskLossSpec::emotion_only(kEmotionCount);
  nn::MultiTaskLossSpec spec = nn::MultiTaskLossSpec::standard(kEmotionCount, speakers, static_cast<int>(kGenderLabels.size()));
  spec.tasks[static_cast<std::size_t>(spec.index_of("emotion"))].weight = w.emotion;
  spec.tasks[static_cast<std::size_t>(spec.index_of("speaker"))].weight = w.speaker;
  spec.tasks[static_cast<std::size_t>(spec.index_of("gender"))].weight = w.gender;
  return spec;
}

std::vector<int> emotion_labels(const std::vector<const UtteranceRecord*>& items) {
  std::vector<int> y;
  for (const auto* r : items) y.push_back(emotion_index(r->emotion));
  return y;
}

std::string feature_kind_for(const std::string& system) {
  if (system == kDnnFunctional) return "functionals";
  if (system == kDnnEmbedding) return "embedding";
  if (system == kRnnAttention) return "llds";
  throw InvalidArgument("system '" + system + "' has no acoustic feature input");
}

}  // namespace

Experiment::Experiment(ExperimentConfig config, fs::path out_dir) : config_(std::move(config)), layout_{std::move(out_dir)} {
  config_.resolve();
  if (config_.manifest.empty()) throw ConfigError("config names no manifest");
}

std::vector<std::string> Experiment::enabled_systems() const {
  std::vector<std::string> out;
  if (config_.dnn_functional.enabled) out.emplace_back(kDnnFunctional);
  if (config_.dnn_embedding.enabled) out.emplace_back(kDnnEmbedding);
  if (config_.rnn.enabled) out.emplace_back(kRnnAttention);
  if (config_.lexical.enabled) out.emplace_back(kLexicalSvm);
  return out;
}

std::vector<UtteranceRecord> Experiment::records() const {
  return load_manifest(config_.manifest, ManifestOptions{config_.check_files});
}

SplitIds Experiment::split_ids() const {
  const nlohmann::json j = read_json(layout_.split());
  SplitIds s;
  s.train = j.at("train").get<std::vector<std::string>>();
  s.validation = j.at("validation").get<std::vector<std::string>>();
  s.test = j.at("test").get<std::vector<std::string>>();
  return s;
}

void Experiment::write_config_echo() const { write_json(layout_.config(), config_.to_json()); }

void Experiment::record_provenance(const std::string& artifact, const std::string& fit_partition,
                                   const std::vector<std::string>& fit_ids) const {
  nlohmann::json j = fs::exists(layout_.provenance()) ? read_json(layout_.provenance()) : nlohmann::json::object();
  const SplitIds split = split_ids();
  assert_no_test_items(fit_ids, split.test, artifact);
  j[artifact] = {{"fit_partition", fit_partition}, {"items", fit_ids.size()}, {"ids_digest", id_digest(fit_ids)},
                 {"test_items", 0}};
  write_json(layout_.provenance(), j);
}

void Experiment::ingest(bool with_audio) {
  guarded("ingest", [&] {
    fs::create_directories(layout_.root);
    write_config_echo();
    const auto all = records();
    write_json(layout_.stats(), manifest_stats(all, with_audio).to_json());
    std::vector<UtteranceRecord> train;
    std::vector<std::string> test;
    for (const auto& r : all) {
      if (r.partition == Partition::kTrain) {
        train.push_back(r);
      } else {
        test.push_back(r.id);
      }
    }
    if (train.empty()) throw InvalidArgument("manifest has no training items");
    const ValidationSplit split = split_validation(train, config_.validation_fraction, config_.seed);
    if (split.validation.empty()) throw InvalidArgument("validation split is empty");
    nlohmann::json j;
    j["seed"] = config_.seed;
    j["validation_fraction"] = config_.validation_fraction;
    j["stratified_by"] = "emotion";
    for (const auto& r : split.train) j["train"].push_back(r.id);
    for (const auto& r : split.validation) j["validation"].push_back(r.id);
    j["test"] = test;
    write_json(layout_.split(), j);
  });
}

void Experiment::extract(std::vector<std::string> kinds) {
  guarded("extract", [&] {
    if (kinds.empty()) {
      if (config_.rnn.enabled) kinds.emplace_back("llds");
      if (config_.dnn_functional.enabled) kinds.emplace_back("functionals");
      if (config_.dnn_embedding.enabled) kinds.emplace_back("embedding");
    }
    for (const auto& k : kinds) {
      if (k != "llds" && k != "functionals" && k != "embedding") {
        throw InvalidArgument("unknown feature kind '" + k + "' (expected llds, functionals or embedding)");
      }
    }
    const auto all = records();
    const bool want_llds = std::find(kinds.begin(), kinds.end(), "llds") != kinds.end();
    const bool want_functionals = std::find(kinds.begin(), kinds.end(), "functionals") != kinds.end();
    const bool want_embedding = std::find(kinds.begin(), kinds.end(), "embedding") != kinds.end();

    std::vector<FeatureRecord> llds(all.size());
    std::vector<FeatureRecord> functionals(all.size());
    if (want_llds || want_functionals) {
      parallel_for(all.size(), config_.workers, [&](std::size_t i) {
        const auto& r = all[i];
        try {
          const FrameFeatureMatrix m = assemble_llds(canonicalize(decode_wav(r.audio_path)));
          if (want_llds) llds[i] = {r.id, m.values};
          if (want_functionals) functionals[i] = {r.id, utterance_functionals(compute_deltas(m)).values.transpose()};
        } catch (const Error& e) {
          throw Error("utterance '" + r.id + "': " + e.what());
        }
      });
    }
    fs::create_directories(layout_.features("llds").parent_path());
    const std::map<std::string, double> params = {{"sample_rate", 16000.0}, {"frame_ms", 25.0}, {"hop_ms", 10.0}};
    if (want_llds) {
      FeatureFile f{"llds", lld_names(), params, std::move(llds)};
      write_feature_file(layout_.features("llds"), f);
    }
    if (want_functionals) {
      FeatureFile f{"functionals", functional_feature_names(), params, std::move(functionals)};
      write_feature_file(layout_.features("functionals"), f);
    }
    if (want_embedding) {
      FeatureFile f;
      f.kind = "embedding";
      for (Eigen::Index d = 0; d < kEmbeddingDim; ++d) f.feature_names.push_back("e" + std::to_string(d));
      for (const auto& r : all) {
        if (!r.embedding_path) throw InvalidArgument("utterance '" + r.id + "' has no embedding file");
        f.records.push_back({r.id, read_embedding(*r.embedding_path, kEmbeddingDim).transpose()});
      }
      write_feature_file(layout_.features("embedding"), f);
    }
  });
}

void Experiment::train_dnn(const std::string& system) {
  guarded("train-dnn", [&] {
    if (system != kDnnFunctional && system != kDnnEmbedding) {
      throw InvalidArgument("unknown DNN system '" + system + "'");
    }
    const DnnSystemConfig& sys = system == kDnnFunctional ? config_.dnn_functional : config_.dnn_embedding;
    const auto all = records();
    const SplitIds split = split_ids();
    const auto train_items = select(all, split.train);
    const auto val_items = select(all, split.validation);
    const auto speakers = speaker_vocabulary(train_items);
    const FeatureFile features = read_feature_file(layout_.features(feature_kind_for(system)));

    MultiTaskDnnConfig cfg = sys.model;
    cfg.input_dim = features.dim();
    cfg.tasks = task_spec(sys.multitask, config_.task_weights, static_cast<int>(speakers.size()));
    auto model = build_multitask_dnn(cfg);
    model->model_id = system;
    model->vocabularies.speaker = speakers;

    const Dataset train = build_dataset(train_items, features, false, speakers);
    const Dataset val = build_dataset(val_items, features, false, speakers);
    assert_no_test_items(train.ids, split.test, system + " normalization");
    model->normalization = fit_znorm(train.vectors);
    const TrainHistory history = train_model(*model, model->prepare(train), model->prepare(val));
    fs::create_directories(layout_.model(system).parent_path());
    save_model(*model, layout_.model(system));
    write_json(layout_.history(system), history.to_json());
    record_provenance(system + ".normalization", "train_prime", train.ids);
    record_provenance(system + ".weights", "train_prime", train.ids);
    record_provenance(system + ".model_selection", "validation", val.ids);
  });
}

void Experiment::train_rnn() {
  guarded("train-rnn", [&] {
    const std::string system = kRnnAttention;
    const auto all = records();
    const SplitIds split = split_ids();
    const auto train_items = select(all, split.train);
    const auto val_items = select(all, split.validation);
    const auto speakers = speaker_vocabulary(train_items);
    const FeatureFile features = read_feature_file(layout_.features("llds"));

    AttentionRnnConfig cfg = config_.rnn.model;
    cfg.input_dim = features.dim();
    cfg.tasks = task_spec(config_.rnn.multitask, config_.task_weights, static_cast<int>(speakers.size()));
    auto model = build_attention_rnn(cfg);
    model->model_id = system;
    model->vocabularies.speaker = speakers;

    const Dataset train = build_dataset(train_items, features, true, speakers);
    const Dataset val = build_dataset(val_items, features, true, speakers);
    assert_no_test_items(train.ids, split.test, system);
    const TrainHistory history = train_model(*model, model->prepare(train), model->prepare(val));
    fs::create_directories(layout_.model(system).parent_path());
    save_model(*model, layout_.model(system));
    write_json(layout_.history(system), history.to_json());
    record_provenance(system + ".weights", "train_prime", train.ids);
    record_provenance(system + ".model_selection", "validation", val.ids);
  });
}

void Experiment::train_svm() {
  guarded("train-svm", [&] {
    const auto all = records();
    const SplitIds split = split_ids();
    const auto train_items = select(all, split.train);
    std::vector<std::vector<std::string>> docs;
    std::vector<std::string> ids;
    for (const auto* r : train_items) {
      if (!r->transcript && config_.lexical.require_transcripts) {
        throw InvalidArgument("utterance '" + r->id + "' has no transcript");
      }
      docs.push_back(tokenize(r->transcript.value_or("")));
      ids.push_back(r->id);
    }
    assert_no_test_items(ids, split.test, kLexicalSvm);
    LexicalModel model;
    model.model_id = kLexicalSvm;
    model.vocabulary = fit_tfidf(docs, config_.lexical.min_df);
    std::vector<SparseVector> x;
    for (const auto& d : docs) x.push_back(transform_tfidf(d, model.vocabulary));
    model.svm = train_cs_svm(x, emotion_labels(train_items), kEmotionCount, config_.lexical.svm);
    fs::create_directories(layout_.model(kLexicalSvm).parent_path());
    save_lexical_model(layout_.model(kLexicalSvm), model);
    nlohmann::json history;
    history["objective"] = model.svm.objective_history;
    history["vocabulary_size"] = model.vocabulary.size();
    write_json(layout_.history(kLexicalSvm), history);
    record_provenance(std::string(kLexicalSvm) + ".vocabulary", "train_prime", ids);
    record_provenance(std::string(kLexicalSvm) + ".weights", "train_prime", ids);
  });
}

void Experiment::score(const std::string& system) {
  guarded("score", [&] {
    const auto all = records();
    const SplitIds split = split_ids();
    fs::create_directories(layout_.scores(system, "test").parent_path());
    const std::vector<std::pair<std::string, std::vector<std::string>>> parts = {{"validation", split.validation},
                                                                                  {"test", split.test}};
    if (system == kLexicalSvm) {
      const LexicalModel model = load_lexical_model(layout_.model(system));
      for (const auto& [name, ids] : parts) {
        std::vector<std::string> texts;
        for (const auto* r : select(all, ids)) {
          if (!r->transcript && config_.lexical.require_transcripts) {
            throw InvalidArgument("utterance '" + r->id + "' has no transcript");
          }
          texts.push_back(r->transcript.value_or(""));
        }
        const ScoreMatrix s = model.score(ids, texts);
        s.validate();
        write_score_file(layout_.scores(system, name), s);
      }
      return;
    }
    const auto model = load_model(layout_.model(system));
    const FeatureFile features = read_feature_file(layout_.features(feature_kind_for(system)));
    for (const auto& [name, ids] : parts) {
      const Dataset d = build_dataset(select(all, ids), features, model->sequential(), model->vocabularies.speaker);
      const ScoreMatrix s = predict_scores(*model, d);
      s.validate();
      write_score_file(layout_.scores(system, name), s);
    }
  });
}

void Experiment::fuse_train() {
  guarded("fuse-train", [&] {
    const auto all = records();
    const SplitIds split = split_ids();
    std::vector<ScoreMatrix> systems;
    for (const auto& sys : enabled_systems()) {
      systems.push_back(read_score_file(layout_.scores(sys, "validation")).reordered(split.validation));
    }
    assert_no_test_items(split.validation, split.test, "fusion");
    FusionFitReport report;
    const FusionModel model = fit_fusion(systems, emotion_labels(select(all, split.validation)), config_.fusion,
                                         std::nullopt, &report);
    fs::create_directories(layout_.model(kFusion).parent_path());
    save_fusion_model(layout_.model(kFusion), model);
    nlohmann::json j;
    j["objective_nats"] = report.objective;
    j["gradient_inf_norm"] = report.gradient_norm;
    j["iterations"] = report.iterations;
    j["converged"] = report.converged;
    j["systems"] = model.systems;
    j["alpha"] = std::vector<double>(model.alpha.data(), model.alpha.data() + model.alpha.size());
    j["beta"] = std::vector<double>(model.beta.data(), model.beta.data() + model.beta.size());
    write_json(layout_.history(kFusion), j);
    record_provenance(std::string(kFusion) + ".weights", "validation", split.validation);
  });
}

void Experiment::fuse_apply() {
  guarded("fuse-apply", [&] {
    const FusionModel model = load_fusion_model(layout_.model(kFusion));
    for (const std::string part : {"validation", "test"}) {
      std::vector<ScoreMatrix> systems;
      for (const auto& sys : model.systems) systems.push_back(read_score_file(layout_.scores(sys, part)));
      const ScoreMatrix fused = apply_fusion(model, systems, kFusion);
      fs::create_directories(layout_.scores(kFusion, part).parent_path());
      fused.validate();
      write_score_file(layout_.scores(kFusion, part), fused);
    }
  });
}

void Experiment::evaluate() {
  guarded("evaluate", [&] {
    const auto all = records();
    const SplitIds split = split_ids();
    const auto classes = emotion_vocabulary();
    std::vector<std::string> systems = enabled_systems();
    if (fs::exists(layout_.scores(kFusion, "test"))) systems.emplace_back(kFusion);
    nlohmann::ordered_json summary;
    summary["classes"] = classes;
    summary["test_items"] = split.test.size();
    summary["validation_items"] = split.validation.size();
    for (const auto& sys : systems) {
      nlohmann::ordered_json entry;
      for (const std::string part : {"validation", "test"}) {
        const std::vector<std::string>& ids = part == "test" ? split.test : split.validation;
        const ScoreMatrix s = read_score_file(layout_.scores(sys, part)).reordered(ids);
        const std::vector<int> y = emotion_labels(select(all, ids));
        const EvaluationReport r = emofuse::evaluate(sys, y, argmax_rows(s.values), classes);
        const CllrResult c = multiclass_cllr(s, y);
        entry[part] = {{"maf", r.maf}, {"accuracy", r.accuracy}, {"cllr_bits", c.bits}, {"cllr_normalized", c.normalized}};
        if (part == "test") {
          write_text(layout_.report_json(sys), r.to_json());
          write_text(layout_.report_text(sys), r.to_table());
        }
      }
      summary["systems"][sys] = entry;
    }
    // Majority-class reference on test.
    std::vector<long> counts(kEmotionCount, 0);
    for (const auto* r : select(all, split.train)) ++counts[static_cast<std::size_t>(emotion_index(r->emotion))];
    const int majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    const std::vector<int> y_test = emotion_labels(select(all, split.test));
    const std::vector<int> always(y_test.size(), majority);
    summary["majority_baseline"] = {{"class", classes[static_cast<std::size_t>(majority)]},
                                    {"test_maf", emofuse::evaluate("majority", y_test, always, classes).maf}};
    write_text(layout_.summary(), summary.dump(2) + "\n");
  });
}

nlohmann::json Experiment::run() {
  fs::create_directories(layout_.root);
  fs::remove(layout_.complete_marker());
  write_text(layout_.incomplete_marker(), "run started; a stage has not finished\n");
  fs::remove(layout_.provenance());
  ingest();
  extract();
  for (const auto& sys : enabled_systems()) {
    if (sys == kDnnFunctional || sys == kDnnEmbedding) {
      train_dnn(sys);
    } else if (sys == kRnnAttention) {
      train_rnn();
    } else {
      train_svm();
    }
    score(sys);
  }
  fuse_train();
  fuse_apply();
  evaluate();
  fs::remove(layout_.incomplete_marker());
  write_text(layout_.complete_marker(), "complete\n");
  return read_json(layout_.summary());
}

}  // namespace emofuse
