// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "emofuse/audio.hpp"

namespace emofuse {

inline constexpr int kFrameLength = 400;  // 25 ms at 16 kHz
inline constexpr int kFrameHop = 160;     // 10 ms at 16 kHz
inline constexpr int kFftSize = 512;
inline constexpr int kMelFilters = 26;
inline constexpr int kMfccCount = 13;
inline constexpr int kLldCount = 36;
inline constexpr int kLldWithDeltasCount = 2 * kLldCount;
inline constexpr int kFunctionalCount = 21;
inline constexpr int kFunctionalDim = kLldWithDeltasCount * kFunctionalCount;  // 1512
inline constexpr int kEmbeddingDim = 200;

/// T x D frame-level descriptors (D = 36, or 72 with deltas).
struct FrameFeatureMatrix {
  Eigen::MatrixXd values;
  std::vector<std::string> feature_names;
  int frame_ms = 25;
  int hop_ms = 10;

  Eigen::Index frames() const { return values.rows(); }
  Eigen::Index dim() const { return values.cols(); }
};

enum class VectorKind { kFunctional, kEmbedding };

struct UtteranceFeatureVector {
  Eigen::VectorXd values;
  VectorKind kind = VectorKind::kFunctional;
};

struct SpectralDescriptors {
  double zcr = 0.0;
  double energy = 0.0;
  double energy_entropy = 0.0;
  double centroid = 0.0;
  double spread = 0.0;
  double spectral_entropy = 0.0;
  double flux = 0.0;
  double rolloff = 0.0;
};

struct Chroma {
  std::array<double, 12> bins{};  // pitch class 0 = A
  double deviation = 0.0;
};

struct PitchEstimate {
  double harmonic_ratio = 0.0;
  double pitch_hz = 0.0;
};

/// Number of full frames: floor((n - 400) / 160) + 1, or 0 when n < 400.
std::size_t frame_count(std::size_t num_samples);

/// Splits a canonical waveform into 400-sample frames with a 160-sample hop.
/// The tail remainder is dropped. Throws InvalidArgument for non-canonical
/// input or fewer than 400 samples.
std::vector<std::vector<double>> frame_signal(const Waveform& w);

/// Per-frame descriptor computation with cached windows, filterbank and FFT
/// plans. Not thread-safe; use one extractor per thread.
class FrameAnalyzer {
 public:
  FrameAnalyzer();
  ~FrameAnalyzer();
  FrameAnalyzer(FrameAnalyzer&&) noexcept;
  FrameAnalyzer& operator=(FrameAnalyzer&&) noexcept;

  /// MFCC 1..13 (c0 excluded): Hamming window, 512-point power spectrum,
  /// 26 mel triangles over 0-8000 Hz, log floored at 1e-10, orthonormal DCT-II.
  std::array<double, kMfccCount> mfcc(std::span<const double> frame);

  /// Time-domain and Hann-windowed magnitude-spectrum descriptors.
  /// `previous_spectrum` is the L1-normalised magnitude spectrum of the prior
  /// frame (empty for the first frame); it is overwritten with this frame's.
  SpectralDescriptors spectral(std::span<const double> frame, std::vector<double>& previous_spectrum);

  Chroma chroma(std::span<const double> frame);

  /// Normalised autocorrelation peak over lags 32..320.
  PitchEstimate pitch(std::span<const double> frame) const;

  /// Mel filterbank weights, kMelFilters x (kFftSize / 2 + 1).
  const Eigen::MatrixXd& mel_filterbank() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Names of the 36 frame descriptors in column order.
const std::vector<std::string>& lld_names();

/// T x 36 descriptor matrix for a canonical waveform.
FrameFeatureMatrix assemble_llds(const Waveform& w);

/// Appends regression deltas (half-window 2, edge replication): T x 72.
FrameFeatureMatrix compute_deltas(const FrameFeatureMatrix& m);

/// Names of the 21 per-stream functionals in output order.
const std::vector<std::string>& functional_names();

/// 21 functionals of one stream.
std::array<double, kFunctionalCount> stream_functionals(std::span<const double> stream);

/// 72 streams x 21 functionals, stream-major: 1512 values.
UtteranceFeatureVector utterance_functionals(const FrameFeatureMatrix& m);

/// Names "<stream>__<functional>" aligned with utterance_functionals output.
std::vector<std::string> functional_feature_names();

/// Energy-percentile SNR estimate in dB. Requires at least 10 frames.
double estimate_snr(const Waveform& w);

}  // namespace emofuse
