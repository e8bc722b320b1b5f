// SPDX-License-Identifier: Apache-2.0
// Command-line front end for the emotion-recognition ensemble.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "emofuse/config.hpp"
#include "emofuse/error.hpp"
#include "emofuse/manifest.hpp"
#include "emofuse/pipeline.hpp"
#include "emofuse/synth.hpp"

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* app, CommonOptions& o, bool config_required = true) {
  auto* c = app->add_option("--config", o.config, "experiment config (JSON)");
  if (config_required) c->required()->check(CLI::ExistingFile);
  app->add_option("--seed", o.seed, "overrides the config seed");
  app->add_option("--out-dir", o.out_dir, "run directory")->required();
}

emofuse::Experiment open(const CommonOptions& o) {
  emofuse::ExperimentConfig cfg = emofuse::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  return emofuse::Experiment(std::move(cfg), o.out_dir);
}

void print_summary(const nlohmann::json& summary) {
  std::printf("%-16s %9s %9s %11s\n", "system", "test MAF", "test acc", "val Cllr");
  for (const auto& [name, s] : summary.at("systems").items()) {
    std::printf("%-16s %9.2f %9.2f %11.4f\n", name.c_str(), s.at("test").at("maf").get<double>(),
                s.at("test").at("accuracy").get<double>(), s.at("validation").at("cllr_bits").get<double>());
  }
  std::printf("%-16s %9.2f\n", "majority", summary.at("majority_baseline").at("test_maf").get<double>());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emofuse: multi-system speech emotion recognition with calibrated score fusion"};
  app.require_subcommand(1);

  CommonOptions synth_opts;
  emofuse::SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "write a synthetic labelled corpus and its manifest");
  add_common(synth_cmd, synth_opts, false);
  synth_cmd->add_option("--utterances", synth.utterances, "corpus size")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--speakers", synth.speakers, "speaker count")->check(CLI::Range(2, 100000));

  CommonOptions ingest_opts;
  bool with_audio = false;
  auto* ingest_cmd = app.add_subcommand("ingest", "validate the manifest, write corpus statistics and the split");
  add_common(ingest_cmd, ingest_opts);
  ingest_cmd->add_flag("--with-audio", with_audio, "decode audio for duration and SNR histograms");

  CommonOptions extract_opts;
  std::vector<std::string> kinds;
  auto* extract_cmd = app.add_subcommand("extract", "compute feature files");
  add_common(extract_cmd, extract_opts);
  extract_cmd->add_option("--kind", kinds, "llds, functionals, embedding (default: all needed)")
      ->check(CLI::IsMember({"llds", "functionals", "embedding"}));

  CommonOptions dnn_opts;
  std::string dnn_input = "functionals";
  auto* dnn_cmd = app.add_subcommand("train-dnn", "train a multi-task DNN");
  add_common(dnn_cmd, dnn_opts);
  dnn_cmd->add_option("--input", dnn_input, "functionals or embedding")->check(CLI::IsMember({"functionals", "embedding"}));

  CommonOptions rnn_opts;
  auto* rnn_cmd = app.add_subcommand("train-rnn", "train the attention-pooling BLSTM");
  add_common(rnn_cmd, rnn_opts);

  CommonOptions svm_opts;
  auto* svm_cmd = app.add_subcommand("train-svm", "train the lexical TF-IDF SVM");
  add_common(svm_cmd, svm_opts);

  CommonOptions score_opts;
  std::vector<std::string> score_systems;
  auto* score_cmd = app.add_subcommand("score", "score validation and test items");
  add_common(score_cmd, score_opts);
  score_cmd->add_option("--system", score_systems, "systems to score (default: all enabled)");

  CommonOptions fuse_train_opts;
  auto* fuse_train_cmd = app.add_subcommand("fuse-train", "fit the fusion on validation scores");
  add_common(fuse_train_cmd, fuse_train_opts);

  CommonOptions fuse_apply_opts;
  auto* fuse_apply_cmd = app.add_subcommand("fuse-apply", "apply the fitted fusion");
  add_common(fuse_apply_cmd, fuse_apply_opts);

  CommonOptions eval_opts;
  auto* eval_cmd = app.add_subcommand("evaluate", "write reports from stored scores");
  add_common(eval_cmd, eval_opts);

  CommonOptions run_opts;
  auto* run_cmd = app.add_subcommand("run", "run every stage");
  add_common(run_cmd, run_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      if (synth_opts.seed) synth.seed = *synth_opts.seed;
      const auto manifest = emofuse::synthesize_corpus(synth_opts.out_dir, synth);
      std::cout << "wrote " << manifest.string() << "\n";
    } else if (*ingest_cmd) {
      auto exp = open(ingest_opts);
      exp.ingest(with_audio);
      std::cout << "wrote " << exp.layout().stats().string() << " and " << exp.layout().split().string() << "\n";
    } else if (*extract_cmd) {
      open(extract_opts).extract(kinds);
    } else if (*dnn_cmd) {
      open(dnn_opts).train_dnn(dnn_input == "functionals" ? emofuse::kDnnFunctional : emofuse::kDnnEmbedding);
    } else if (*rnn_cmd) {
      open(rnn_opts).train_rnn();
    } else if (*svm_cmd) {
      open(svm_opts).train_svm();
    } else if (*score_cmd) {
      auto exp = open(score_opts);
      if (score_systems.empty()) score_systems = exp.enabled_systems();
      for (const auto& s : score_systems) exp.score(s);
    } else if (*fuse_train_cmd) {
      open(fuse_train_opts).fuse_train();
    } else if (*fuse_apply_cmd) {
      open(fuse_apply_opts).fuse_apply();
    } else if (*eval_cmd) {
      auto exp = open(eval_opts);
      exp.evaluate();
      std::cout << "wrote reports under " << (exp.layout().root / "reports").string() << "\n";
    } else if (*run_cmd) {
      auto exp = open(run_opts);
      const auto start = std::chrono::steady_clock::now();
      const nlohmann::json summary = exp.run();
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      print_summary(summary);
      std::printf("run finished in %.1f s\n", seconds);
    }
  } catch (const emofuse::Error& e) {
    std::cerr << "emofuse: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "emofuse: unexpected failure: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
