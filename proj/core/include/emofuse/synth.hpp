// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace emofuse {

struct SynthOptions {
  int utterances = 800;
  std::uint64_t seed = 7;
  int speakers = 40;
  double resampled_fraction = 0.05;  // share written at 44.1 kHz stereo
  double empty_transcript_fraction = 0.05;
};

/// Per-class counts of a corpus of `total` items with the class imbalance of
/// the reference emotion corpus (neutral most frequent, disgust rarest).
std::map<std::string, int> imbalanced_class_counts(int total);

/// Writes a synthetic corpus: harmonic tones whose pitch level, contour,
/// loudness and modulation depend on the emotion, additive noise, CJK
/// transcripts drawn from class-specific vocabularies and 200-dim
/// pseudo-embeddings. The embeddings are a seeded random projection of LLD
/// statistics plus a speaker code, for exercising the pipeline only; they
/// carry no scientific meaning. Returns the manifest path.
std::filesystem::path synthesize_corpus(const std::filesystem::path& out_dir, const SynthOptions& options = {});

}  // namespace emofuse
