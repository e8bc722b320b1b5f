// SPDX-License-Identifier: Apache-2.0
#include "emofuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "emofuse/audio.hpp"
#include "emofuse/dsp.hpp"
#include "emofuse/error.hpp"
#include "emofuse/labels.hpp"
#include "emofuse/manifest.hpp"
#include "emofuse/nn/tensor.hpp"

namespace emofuse {
namespace {

struct Prosody {
  double pitch;      // multiplier on the speaker base frequency
  double contour;    // relative pitch change from start to end
  double loudness;   // peak amplitude
  double vibrato;    // Hz, with a 3% pitch depth
  double tremolo;    // Hz, with a 40% amplitude depth
  double richness;   // harmonic decay ratio
  double snr_db;
};

// Keyed by the frozen emotion order.
const std::map<std::string, Prosody>& prosody_table() {
  static const std::map<std::string, Prosody> table = {
      {"angry", {1.30, 0.10, 0.60, 0.0, 0.0, 0.80, 30.0}},
      {"anxious", {1.20, 0.00, 0.35, 0.0, 8.0, 0.55, 24.0}},
      {"disgust", {0.85, -0.25, 0.30, 0.0, 0.0, 0.70, 18.0}},
      {"happy", {1.40, 0.30, 0.45, 5.0, 0.0, 0.60, 28.0}},
      {"neutral", {1.00, 0.00, 0.30, 0.0, 0.0, 0.50, 26.0}},
      {"sad", {0.80, -0.20, 0.15, 0.0, 0.0, 0.35, 14.0}},
      {"surprise", {1.60, 0.60, 0.50, 0.0, 0.0, 0.65, 26.0}},
      {"worried", {1.10, -0.10, 0.20, 0.0, 4.0, 0.45, 20.0}},
  };
  return table;
}

// Class keywords and shared filler, all CJK ideographs.
const std::map<std::string, std::vector<std::string>>& keyword_table() {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"angry", {"怒", "滚", "恨", "吵", "骂", "烦"}},   {"anxious", {"急", "快", "慌", "赶", "忙", "乱"}},
      {"disgust", {"恶", "脏", "臭", "厌", "呸", "丑"}}, {"happy", {"喜", "乐", "笑", "甜", "好", "棒"}},
      {"neutral", {"吃", "走", "看", "书", "天", "路"}}, {"sad", {"哭", "泪", "痛", "伤", "别", "苦"}},
      {"surprise", {"哇", "竟", "真", "奇", "啊", "惊"}}, {"worried", {"怕", "愁", "担", "忧", "难", "病"}},
  };
  return table;
}

const std::vector<std::string>& filler() {
  static const std::vector<std::string> f = {"的", "我", "你", "他", "是", "了", "在", "有", "这", "那",
                                             "们", "就", "也", "都", "说", "要", "去", "会", "个", "不"};
  return f;
}

Waveform render(const Prosody& p, double base_f0, double duration, int rate, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double pitch = base_f0 * p.pitch * (1.0 + 0.08 * gauss(rng));
  const double loud = std::clamp(p.loudness * (1.0 + 0.25 * gauss(rng)), 0.03, 0.9);
  const double contour = p.contour + 0.08 * gauss(rng);
  const double snr = p.snr_db + 4.0 * gauss(rng);
  const int harmonics = 8;
  const auto n = static_cast<std::size_t>(duration * rate);

  // Voiced stretches separated by short pauses.
  std::vector<double> voiced(n, 0.0);
  std::size_t pos = static_cast<std::size_t>(0.05 * rate);
  while (pos < n) {
    const auto len = static_cast<std::size_t>((0.25 + 0.35 * uni(rng)) * rate);
    const auto fade = static_cast<std::size_t>(0.02 * rate);
    for (std::size_t k = 0; k < len && pos + k < n; ++k) {
      const double edge = std::min({1.0, static_cast<double>(k) / fade, static_cast<double>(len - k) / fade});
      voiced[pos + k] = edge;
    }
    pos += len + static_cast<std::size_t>((0.04 + 0.08 * uni(rng)) * rate);
  }

  std::vector<double> x(n, 0.0);
  double phase = 0.0;
  double norm = 0.0;
  for (int h = 1; h <= harmonics; ++h) norm += std::pow(p.richness, h - 1);
  for (std::size_t t = 0; t < n; ++t) {
    const double time = static_cast<double>(t) / rate;
    const double rel = time / duration;
    double f0 = pitch * (1.0 + contour * (rel - 0.5));
    if (p.vibrato > 0.0) f0 *= 1.0 + 0.03 * std::sin(2.0 * std::numbers::pi * p.vibrato * time);
    phase += 2.0 * std::numbers::pi * f0 / rate;
    double s = 0.0;
    for (int h = 1; h <= harmonics; ++h) {
      if (h * f0 >= 0.45 * rate) break;
      s += std::pow(p.richness, h - 1) * std::sin(h * phase);
    }
    double env = loud * voiced[t];
    if (p.tremolo > 0.0) env *= 1.0 - 0.4 * (0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * p.tremolo * time));
    x[t] = env * s / norm;
  }
  double power = 0.0;
  for (double v : x) power += v * v;
  power = std::max(power / static_cast<double>(n), 1e-8);
  const double noise_std = std::sqrt(power / std::pow(10.0, snr / 10.0));
  for (double& v : x) v = std::clamp(v + noise_std * gauss(rng), -1.0, 1.0);

  Waveform w;
  w.samples = std::move(x);
  w.sample_rate = rate;
  w.channel_count = 1;
  return w;
}

std::string make_transcript(const std::string& emotion, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const auto& words = keyword_table();
  // A few items borrow another class's words so the lexical system is not perfect.
  std::string source = emotion;
  if (uni(rng) < 0.15) source = kEmotionLabels[static_cast<std::size_t>(rng() % kEmotionCount)];
  const auto& keys = words.at(source);
  const int length = 4 + static_cast<int>(rng() % 5);
  std::string out;
  for (int i = 0; i < length; ++i) {
    out += uni(rng) < 0.4 ? keys[rng() % keys.size()] : filler()[rng() % filler().size()];
  }
  return out;
}

Eigen::VectorXd lld_summary(const Waveform& w) {
  const FrameFeatureMatrix llds = assemble_llds(canonicalize(w));
  Eigen::VectorXd s(2 * llds.dim());
  for (Eigen::Index c = 0; c < llds.dim(); ++c) {
    const double mean = llds.values.col(c).mean();
    s(c) = mean;
    s(llds.dim() + c) = std::sqrt((llds.values.col(c).array() - mean).square().mean());
  }
  return s;
}

}  // namespace

std::map<std::string, int> imbalanced_class_counts(int total) {
  if (total < static_cast<int>(kEmotionCount)) throw InvalidArgument("synthetic corpus needs at least 8 items");
  // Train + test counts of the reference corpus.
  const std::map<std::string, int> reference = {{"angry", 1012}, {"anxious", 523},  {"disgust", 165}, {"happy", 947},
                                                {"neutral", 1600}, {"sad", 529},   {"surprise", 200}, {"worried", 648}};
  const double sum = 5624.0;
  std::map<std::string, int> counts;
  int assigned = 0;
  for (const auto& [label, c] : reference) {
    counts[label] = std::max(1, static_cast<int>(std::lround(total * c / sum)));
    assigned += counts[label];
  }
  counts["neutral"] += total - assigned;
  return counts;
}

std::filesystem::path synthesize_corpus(const std::filesystem::path& out_dir, const SynthOptions& options) {
  if (options.speakers < 2) throw InvalidArgument("synthetic corpus needs at least two speakers");
  std::filesystem::create_directories(out_dir / "audio");
  std::filesystem::create_directories(out_dir / "embeddings");
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  struct Speaker {
    std::string id;
    std::string gender;
    double f0;
  };
  std::vector<Speaker> speakers;
  for (int s = 0; s < options.speakers; ++s) {
    const bool female = s % 2 == 0;
    char id[16];
    std::snprintf(id, sizeof id, "spk%03d", s);
    speakers.push_back({id, female ? "female" : "male", female ? 210.0 + 20.0 * gauss(rng) : 120.0 + 15.0 * gauss(rng)});
  }

  // Emotion sequence with stratified test membership (707 of 5624 in the reference corpus).
  std::vector<std::pair<std::string, Partition>> plan;
  for (const auto& [label, count] : imbalanced_class_counts(options.utterances)) {
    const int test = static_cast<int>(std::lround(count * 707.0 / 5624.0));
    for (int i = 0; i < count; ++i) plan.emplace_back(label, i < test ? Partition::kTest : Partition::kTrain);
  }
  for (std::size_t i = plan.size(); i > 1; --i) std::swap(plan[i - 1], plan[rng() % i]);

  std::vector<UtteranceRecord> records;
  std::vector<Eigen::VectorXd> summaries;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto& [emotion, partition] = plan[i];
    const Speaker& spk = speakers[rng() % speakers.size()];
    char id[32];
    std::snprintf(id, sizeof id, "syn%04zu", i + 1);
    const double duration = 0.8 + 1.4 * uni(rng);
    const bool resampled = uni(rng) < options.resampled_fraction;
    Waveform w = render(prosody_table().at(emotion), spk.f0, duration, resampled ? 44100 : 16000, rng);
    summaries.push_back(lld_summary(w));
    const std::filesystem::path audio = out_dir / "audio" / (std::string(id) + ".wav");
    if (resampled) {
      Waveform stereo;
      stereo.sample_rate = w.sample_rate;
      stereo.channel_count = 2;
      for (double v : w.samples) {
        stereo.samples.push_back(v);
        stereo.samples.push_back(v);
      }
      write_wav(audio, stereo, WavEncoding::kFloat32);
    } else {
      write_wav(audio, w, WavEncoding::kPcm16);
    }
    UtteranceRecord r;
    r.id = id;
    r.audio_path = audio;
    r.emotion = emotion;
    r.speaker = spk.id;
    r.gender = spk.gender;
    r.partition = partition;
    r.transcript = uni(rng) < options.empty_transcript_fraction ? std::string() : make_transcript(emotion, rng);
    r.embedding_path = out_dir / "embeddings" / (std::string(id) + ".txt");
    records.push_back(std::move(r));
  }

  // Pseudo-embeddings: standardize the LLD summaries with training-item
  // statistics, project with a seeded matrix, add a speaker code.
  const Eigen::Index in_dim = summaries.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(in_dim);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(in_dim);
  double n_train = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].partition != Partition::kTrain) continue;
    mean += summaries[i];
    sq += summaries[i].array().square().matrix();
    n_train += 1.0;
  }
  mean /= n_train;
  const Eigen::VectorXd stdev = (sq / n_train - mean.array().square().matrix()).cwiseMax(1e-12).cwiseSqrt();
  Eigen::MatrixXd projection(kEmbeddingDim, in_dim);
  for (Eigen::Index r = 0; r < projection.rows(); ++r) {
    for (Eigen::Index c = 0; c < projection.cols(); ++c) projection(r, c) = gauss(rng) / std::sqrt(static_cast<double>(in_dim));
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Eigen::VectorXd z = ((summaries[i] - mean).array() / stdev.array()).matrix();
    Eigen::VectorXd e = (projection * z).array().tanh().matrix();
    const std::uint64_t key = nn::hash_string(records[i].speaker);
    for (Eigen::Index d = 0; d < e.size(); ++d) {
      e(d) += 0.5 * (2.0 * nn::counter_uniform(options.seed, key, 0, static_cast<std::uint64_t>(d)) - 1.0);
      e(d) += 0.1 * gauss(rng);
    }
    write_embedding(*records[i].embedding_path, e);
  }

  const std::filesystem::path manifest = out_dir / "manifest.jsonl";
  write_manifest(manifest, records);
  return manifest;
}

}  // namespace emofuse
