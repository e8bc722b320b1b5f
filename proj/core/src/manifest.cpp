// SPDX-License-Identifier: Apache-2.0
#include "emofuse/manifest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "emofuse/audio.hpp"
#include "emofuse/dsp.hpp"
#include "emofuse/error.hpp"
#include "emofuse/labels.hpp"

namespace emofuse {
namespace {

std::string where(const std::filesystem::path& path, int line) {
  return path.string() + ":" + std::to_string(line);
}

std::string required_string(const nlohmann::json& j, const char* key, const std::filesystem::path& path, int line) {
  if (!j.contains(key)) throw FormatError(where(path, line) + ": missing required field '" + key + "'");
  if (!j.at(key).is_string()) throw FormatError(where(path, line) + ": field '" + key + "' must be a string");
  std::string v = j.at(key).get<std::string>();
  if (v.empty()) throw FormatError(where(path, line) + ": field '" + key + "' is empty");
  return v;
}

std::string json_line(const UtteranceRecord& r, const std::filesystem::path& base) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["audio"] = r.audio_path.lexically_relative(base).generic_string();
  j["emotion"] = r.emotion;
  j["speaker"] = r.speaker;
  j["gender"] = r.gender;
  j["partition"] = partition_name(r.partition);
  if (r.transcript) j["transcript"] = *r.transcript;
  if (r.embedding_path) j["embedding"] = r.embedding_path->lexically_relative(base).generic_string();
  return j.dump();
}

}  // namespace

std::string partition_name(Partition p) { return p == Partition::kTrain ? "train" : "test"; }

std::vector<UtteranceRecord> load_manifest(const std::filesystem::path& path, const ManifestOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  const std::filesystem::path base = path.parent_path();
  std::vector<UtteranceRecord> records;
  std::map<std::string, int> seen;
  std::string text;
  int line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); })) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(where(path, line) + ": not valid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw FormatError(where(path, line) + ": record must be a JSON object");
    UtteranceRecord r;
    r.line = line;
    r.id = required_string(j, "id", path, line);
    r.audio_path = base / required_string(j, "audio", path, line);
    r.emotion = required_string(j, "emotion", path, line);
    r.speaker = required_string(j, "speaker", path, line);
    r.gender = required_string(j, "gender", path, line);
    const std::string partition = required_string(j, "partition", path, line);
    if (partition == "train") {
      r.partition = Partition::kTrain;
    } else if (partition == "test") {
      r.partition = Partition::kTest;
    } else {
      throw FormatError(where(path, line) + ": unknown partition '" + partition + "' (expected train or test)");
    }
    if (vocabulary_index(emotion_vocabulary(), r.emotion) < 0) {
      throw FormatError(where(path, line) + ": unknown emotion label '" + r.emotion + "'");
    }
    if (vocabulary_index(gender_vocabulary(), r.gender) < 0) {
      throw FormatError(where(path, line) + ": unknown gender label '" + r.gender + "'");
    }
    if (j.contains("transcript") && !j.at("transcript").is_null()) {
      if (!j.at("transcript").is_string()) throw FormatError(where(path, line) + ": transcript must be a string");
      r.transcript = j.at("transcript").get<std::string>();
    }
    if (j.contains("embedding") && !j.at("embedding").is_null()) {
      r.embedding_path = base / required_string(j, "embedding", path, line);
    }
    const auto [it, inserted] = seen.emplace(r.id, line);
    if (!inserted) {
      throw FormatError(where(path, line) + ": duplicate id '" + r.id + "' (first seen on line " +
                        std::to_string(it->second) + ", again on line " + std::to_string(line) + ")");
    }
    if (options.check_files) {
      if (!std::filesystem::exists(r.audio_path)) {
        throw IoError(where(path, line) + ": audio file '" + r.audio_path.string() + "' does not exist");
      }
      if (r.embedding_path && !std::filesystem::exists(*r.embedding_path)) {
        throw IoError(where(path, line) + ": embedding file '" + r.embedding_path->string() + "' does not exist");
      }
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw FormatError("manifest '" + path.string() + "' has no records");
  return records;
}

void write_manifest(const std::filesystem::path& path, const std::vector<UtteranceRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  const std::filesystem::path base = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  for (const auto& r : records) out << json_line(r, base) << '\n';
  if (!out) throw IoError("failed writing manifest '" + path.string() + "'");
}

void Histogram::add(double value) {
  const long bin = static_cast<long>(std::floor((value - origin) / bin_width));
  const std::size_t idx = static_cast<std::size_t>(std::max(0L, bin));
  if (counts.size() <= idx) counts.resize(idx + 1, 0);
  ++counts[idx];
}

nlohmann::json ManifestStats::to_json() const {
  nlohmann::ordered_json j;
  for (const auto& [partition, classes] : per_partition) {
    nlohmann::ordered_json p;
    for (const std::string& label : emotion_vocabulary()) {
      const auto it = classes.find(label);
      const ClassCount c = it == classes.end() ? ClassCount{} : it->second;
      p[label] = {{"count", c.count}, {"proportion", c.proportion}};
    }
    p["total"] = totals.at(partition);
    j["partitions"][partition] = p;
  }
  j["genders"] = genders;
  j["male_ratio"] = male_ratio;
  j["female_ratio"] = female_ratio;
  j["speakers"] = speakers;
  const auto hist = [](const Histogram& h) {
    return nlohmann::ordered_json{{"origin", h.origin}, {"bin_width", h.bin_width}, {"counts", h.counts}};
  };
  if (duration_seconds) j["duration_seconds"] = hist(*duration_seconds);
  if (snr_db) j["snr_db"] = hist(*snr_db);
  return nlohmann::json::parse(j.dump());
}

ManifestStats manifest_stats(const std::vector<UtteranceRecord>& records, bool with_audio) {
  ManifestStats s;
  std::set<std::string> speakers;
  for (const auto& r : records) {
    const std::string p = partition_name(r.partition);
    auto& classes = s.per_partition[p];
    if (classes.empty()) {
      for (const auto label : kEmotionLabels) classes[std::string(label)] = {};
    }
    ++classes[r.emotion].count;
    ++s.totals[p];
    ++s.genders[r.gender];
    speakers.insert(r.speaker);
  }
  for (auto& [p, classes] : s.per_partition) {
    for (auto& [label, c] : classes) c.proportion = static_cast<double>(c.count) / static_cast<double>(s.totals[p]);
  }
  const auto n = static_cast<double>(records.size());
  s.male_ratio = n > 0 ? static_cast<double>(s.genders["male"]) / n : 0.0;
  s.female_ratio = n > 0 ? static_cast<double>(s.genders["female"]) / n : 0.0;
  s.speakers = static_cast<long>(speakers.size());
  if (with_audio) {
    Histogram dur{1.0, 0.0, {}};
    Histogram snr{5.0, 0.0, {}};
    bool any_snr = false;
    for (const auto& r : records) {
      const Waveform w = canonicalize(decode_wav(r.audio_path));
      dur.add(w.duration_seconds());
      if (frame_count(w.frame_count()) >= 10) {
        snr.add(estimate_snr(w));
        any_snr = true;
      }
    }
    s.duration_seconds = dur;
    if (any_snr) s.snr_db = snr;
  }
  return s;
}

ValidationSplit split_validation(const std::vector<UtteranceRecord>& train, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidArgument("validation fraction must lie in [0, 1)");
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < train.size(); ++i) by_class[train[i].emotion].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<bool> held_out(train.size(), false);
  for (const std::string& label : emotion_vocabulary()) {
    auto it = by_class.find(label);
    if (it == by_class.end()) continue;
    std::vector<std::size_t>& idx = it->second;
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng() % i)]);
    auto take = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(idx.size())));
    if (fraction > 0.0 && take == 0 && idx.size() >= 2) take = 1;
    for (std::size_t k = 0; k < take; ++k) held_out[idx[k]] = true;
  }
  ValidationSplit out;
  for (std::size_t i = 0; i < train.size(); ++i) (held_out[i] ? out.validation : out.train).push_back(train[i]);
  return out;
}

Eigen::VectorXd read_embedding(const std::filesystem::path& path, Eigen::Index dim) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embedding file '" + path.string() + "'");
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw FormatError("embedding file '" + path.string() + "' has a non-numeric token '" + token + "'");
    }
  }
  if (static_cast<Eigen::Index>(values.size()) != dim) {
    throw FormatError("embedding file '" + path.string() + "' has " + std::to_string(values.size()) +
                      " values, expected " + std::to_string(dim));
  }
  Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(values.data(), dim);
  if (!v.allFinite()) throw FormatError("embedding file '" + path.string() + "' has non-finite values");
  return v;
}

void write_embedding(const std::filesystem::path& path, const Eigen::VectorXd& v) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embedding file '" + path.string() + "'");
  out.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << v(i);
  out << '\n';
}

}  // namespace emofuse
