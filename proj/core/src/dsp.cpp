// SPDX-License-Identifier: Apache-2.0
#include "emofuse/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "emofuse/error.hpp"
#include "emofuse/spectrum.hpp"

namespace emofuse {
namespace {

constexpr double kSampleRate = kCanonicalSampleRate;
constexpr double kLogFloor = 1e-10;
constexpr int kEntropyBlocks = 10;
constexpr double kRolloffFraction = 0.90;
constexpr double kVoicingThreshold = 0.1;
constexpr int kMinLag = kCanonicalSampleRate / 500;  // 32
constexpr int kMaxLag = kCanonicalSampleRate / 50;   // 320
constexpr double kMomentFloor = 1e-12;
constexpr int kSpectrumBins = kFftSize / 2 + 1;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

double bin_hz(int k) { return k * kSampleRate / kFftSize; }

// Shannon entropy (bits) of a non-negative vector after normalisation.
double entropy_bits(std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double w : weights) {
    if (w <= 0.0) continue;
    const double p = w / total;
    h -= p * std::log2(p);
  }
  return h;
}

// Sums of `values` over `blocks` contiguous, nearly equal partitions.
std::vector<double> block_sums(std::span<const double> values, int blocks) {
  std::vector<double> sums(static_cast<std::size_t>(blocks), 0.0);
  const std::size_t n = values.size();
  for (int b = 0; b < blocks; ++b) {
    const std::size_t lo = n * static_cast<std::size_t>(b) / static_cast<std::size_t>(blocks);
    const std::size_t hi = n * static_cast<std::size_t>(b + 1) / static_cast<std::size_t>(blocks);
    for (std::size_t i = lo; i < hi; ++i) sums[static_cast<std::size_t>(b)] += values[i];
  }
  return sums;
}

void check_frame(std::span<const double> frame) {
  if (frame.size() != static_cast<std::size_t>(kFrameLength)) {
    throw InvalidArgument("expected a " + std::to_string(kFrameLength) + "-sample frame, got " +
                          std::to_string(frame.size()));
  }
}

// Linear interpolation between order statistics at position q * (n - 1).
double percentile_sorted(std::span<const double> sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

struct FrameAnalyzer::Impl {
  RealFft fft{kFftSize};
  std::vector<double> hamming;
  std::vector<double> hann;
  Eigen::MatrixXd mel;  // kMelFilters x kSpectrumBins
  Eigen::MatrixXd dct;  // kMfccCount x kMelFilters, rows for c1..c13
  std::array<int, kSpectrumBins> pitch_class{};
  std::vector<double> scratch;

  Impl() : hamming(kFrameLength), hann(kFrameLength), scratch(kFrameLength) {
    for (int n = 0; n < kFrameLength; ++n) {
      const double phase = 2.0 * std::numbers::pi * n / (kFrameLength - 1);
      hamming[static_cast<std::size_t>(n)] = 0.54 - 0.46 * std::cos(phase);
      hann[static_cast<std::size_t>(n)] = 0.5 - 0.5 * std::cos(phase);
    }

    mel = Eigen::MatrixXd::Zero(kMelFilters, kSpectrumBins);
    const double mel_lo = hz_to_mel(0.0);
    const double mel_hi = hz_to_mel(kSampleRate / 2.0);
    std::array<double, kMelFilters + 2> edges{};
    for (int i = 0; i < kMelFilters + 2; ++i) {
      edges[static_cast<std::size_t>(i)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (kMelFilters + 1));
    }
    for (int m = 0; m < kMelFilters; ++m) {
      const double left = edges[static_cast<std::size_t>(m)];
      const double centre = edges[static_cast<std::size_t>(m + 1)];
      const double right = edges[static_cast<std::size_t>(m + 2)];
      for (int k = 0; k < kSpectrumBins; ++k) {
        const double f = bin_hz(k);
        double w = 0.0;
        if (f > left && f <= centre) {
          w = (f - left) / (centre - left);
        } else if (f > centre && f < right) {
          w = (right - f) / (right - centre);
        }
        mel(m, k) = w;
      }
    }

    dct.resize(kMfccCount, kMelFilters);
    const double scale = std::sqrt(2.0 / kMelFilters);
    for (int c = 1; c <= kMfccCount; ++c) {
      for (int m = 0; m < kMelFilters; ++m) {
        dct(c - 1, m) = scale * std::cos(std::numbers::pi * c * (m + 0.5) / kMelFilters);
      }
    }

    pitch_class[0] = -1;
    for (int k = 1; k < kSpectrumBins; ++k) {
      const long semitone = std::lround(12.0 * std::log2(bin_hz(k) / 440.0));
      pitch_class[static_cast<std::size_t>(k)] = static_cast<int>(((semitone % 12) + 12) % 12);
    }
  }

  std::span<const double> windowed(std::span<const double> frame, const std::vector<double>& window) {
    for (int n = 0; n < kFrameLength; ++n) {
      scratch[static_cast<std::size_t>(n)] = frame[static_cast<std::size_t>(n)] * window[static_cast<std::size_t>(n)];
    }
    return scratch;
  }
};

FrameAnalyzer::FrameAnalyzer() : impl_(std::make_unique<Impl>()) {}
FrameAnalyzer::~FrameAnalyzer() = default;
FrameAnalyzer::FrameAnalyzer(FrameAnalyzer&&) noexcept = default;
FrameAnalyzer& FrameAnalyzer::operator=(FrameAnalyzer&&) noexcept = default;

const Eigen::MatrixXd& FrameAnalyzer::mel_filterbank() const { return impl_->mel; }

std::array<double, kMfccCount> FrameAnalyzer::mfcc(std::span<const double> frame) {
  check_frame(frame);
  const auto power = impl_->fft.power(impl_->windowed(frame, impl_->hamming));
  const Eigen::Map<const Eigen::VectorXd> spectrum(power.data(), kSpectrumBins);
  Eigen::VectorXd log_energy = impl_->mel * spectrum;
  for (Eigen::Index i = 0; i < log_energy.size(); ++i) {
    log_energy[i] = std::log(std::max(log_energy[i], kLogFloor));
  }
  const Eigen::VectorXd cepstrum = impl_->dct * log_energy;
  std::array<double, kMfccCount> out{};
  std::copy(cepstrum.data(), cepstrum.data() + kMfccCount, out.begin());
  return out;
}

SpectralDescriptors FrameAnalyzer::spectral(std::span<const double> frame,
                                            std::vector<double>& previous_spectrum) {
  check_frame(frame);
  SpectralDescriptors d;

  int crossings = 0;
  for (int n = 1; n < kFrameLength; ++n) {
    if ((frame[static_cast<std::size_t>(n)] >= 0.0) != (frame[static_cast<std::size_t>(n - 1)] >= 0.0)) ++crossings;
  }
  d.zcr = static_cast<double>(crossings) / (kFrameLength - 1);

  std::vector<double> squares(frame.size());
  std::transform(frame.begin(), frame.end(), squares.begin(), [](double x) { return x * x; });
  const double sum_squares = std::accumulate(squares.begin(), squares.end(), 0.0);
  d.energy = sum_squares / kFrameLength;
  d.energy_entropy = entropy_bits(block_sums(squares, kEntropyBlocks));

  const auto magnitude = impl_->fft.magnitude(impl_->windowed(frame, impl_->hann));
  const double mag_sum = std::accumulate(magnitude.begin(), magnitude.end(), 0.0);

  std::vector<double> normalized(magnitude.size(), 0.0);
  if (mag_sum > 0.0) {
    double first = 0.0;
    for (int k = 0; k < kSpectrumBins; ++k) first += bin_hz(k) * magnitude[static_cast<std::size_t>(k)];
    d.centroid = first / mag_sum;
    double second = 0.0;
    for (int k = 0; k < kSpectrumBins; ++k) {
      const double dev = bin_hz(k) - d.centroid;
      second += dev * dev * magnitude[static_cast<std::size_t>(k)];
    }
    d.spread = std::sqrt(second / mag_sum);
    for (std::size_t k = 0; k < magnitude.size(); ++k) normalized[k] = magnitude[k] / mag_sum;
  }

  std::vector<double> power(magnitude.size());
  std::transform(magnitude.begin(), magnitude.end(), power.begin(), [](double m) { return m * m; });
  d.spectral_entropy = entropy_bits(block_sums(power, kEntropyBlocks));

  if (!previous_spectrum.empty()) {
    double flux = 0.0;
    for (std::size_t k = 0; k < normalized.size(); ++k) {
      const double diff = normalized[k] - previous_spectrum[k];
      flux += diff * diff;
    }
    d.flux = flux;
  }
  previous_spectrum = std::move(normalized);

  const double total_power = std::accumulate(power.begin(), power.end(), 0.0);
  if (total_power > 0.0) {
    double cumulative = 0.0;
    for (int k = 0; k < kSpectrumBins; ++k) {
      cumulative += power[static_cast<std::size_t>(k)];
      if (cumulative >= kRolloffFraction * total_power) {
        d.rolloff = bin_hz(k);
        break;
      }
    }
  }
  return d;
}

Chroma FrameAnalyzer::chroma(std::span<const double> frame) {
  check_frame(frame);
  const auto power = impl_->fft.power(impl_->windowed(frame, impl_->hann));
  Chroma c;
  for (int k = 1; k < kSpectrumBins; ++k) {
    c.bins[static_cast<std::size_t>(impl_->pitch_class[static_cast<std::size_t>(k)])] += power[static_cast<std::size_t>(k)];
  }
  const double total = std::accumulate(c.bins.begin(), c.bins.end(), 0.0);
  if (total <= 0.0) {
    c.bins.fill(0.0);
    return c;
  }
  for (double& b : c.bins) b /= total;
  const double mean = 1.0 / 12.0;
  double var = 0.0;
  for (double b : c.bins) var += (b - mean) * (b - mean);
  c.deviation = std::sqrt(var / 12.0);
  return c;
}

PitchEstimate FrameAnalyzer::pitch(std::span<const double> frame) const {
  check_frame(frame);
  // Prefix sums of squares give the energy of each overlapping segment.
  std::vector<double> prefix(frame.size() + 1, 0.0);
  for (std::size_t n = 0; n < frame.size(); ++n) prefix[n + 1] = prefix[n] + frame[n] * frame[n];

  double best = 0.0;
  int best_lag = 0;
  for (int lag = kMinLag; lag <= kMaxLag; ++lag) {
    const auto overlap = static_cast<std::size_t>(kFrameLength - lag);
    const double head = prefix[overlap];
    const double tail = prefix[frame.size()] - prefix[static_cast<std::size_t>(lag)];
    const double denom = std::sqrt(head * tail);
    if (denom <= 0.0) continue;
    double acc = 0.0;
    for (std::size_t n = 0; n < overlap; ++n) acc += frame[n] * frame[n + static_cast<std::size_t>(lag)];
    const double r = acc / denom;
    // Multiples of the period score equally on periodic input; keep the shortest.
    if (r > best + 1e-9) {
      best = r;
      best_lag = lag;
    }
  }

  PitchEstimate p;
  p.harmonic_ratio = std::clamp(best, 0.0, 1.0);
  if (p.harmonic_ratio >= kVoicingThreshold && best_lag > 0) p.pitch_hz = kSampleRate / best_lag;
  return p;
}

std::size_t frame_count(std::size_t num_samples) {
  if (num_samples < static_cast<std::size_t>(kFrameLength)) return 0;
  return (num_samples - kFrameLength) / kFrameHop + 1;
}

std::vector<std::vector<double>> frame_signal(const Waveform& w) {
  if (!w.is_canonical()) throw InvalidArgument("framing requires a canonical 16 kHz mono waveform");
  const std::size_t count = frame_count(w.samples.size());
  if (count == 0) {
    throw InvalidArgument("utterance of " + std::to_string(w.samples.size()) +
                          " samples is shorter than one " + std::to_string(kFrameLength) + "-sample frame");
  }
  std::vector<std::vector<double>> frames(count);
  for (std::size_t t = 0; t < count; ++t) {
    const auto begin = w.samples.begin() + static_cast<std::ptrdiff_t>(t * kFrameHop);
    frames[t].assign(begin, begin + kFrameLength);
  }
  return frames;
}

const std::vector<std::string>& lld_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (int i = 1; i <= kMfccCount; ++i) n.push_back("mfcc_" + std::to_string(i));
    for (const char* s : {"zcr", "energy", "energy_entropy", "spectral_centroid", "spectral_spread",
                          "spectral_entropy", "spectral_flux", "spectral_rolloff"}) {
      n.emplace_back(s);
    }
    for (const char* pc : {"A", "As", "B", "C", "Cs", "D", "Ds", "E", "F", "Fs", "G", "Gs"}) {
      n.push_back(std::string("chroma_") + pc);
    }
    n.emplace_back("chroma_deviation");
    n.emplace_back("harmonic_ratio");
    n.emplace_back("pitch");
    return n;
  }();
  return names;
}

FrameFeatureMatrix assemble_llds(const Waveform& w) {
  const auto frames = frame_signal(w);
  FrameAnalyzer analyzer;
  FrameFeatureMatrix m;
  m.feature_names = lld_names();
  m.values.resize(static_cast<Eigen::Index>(frames.size()), kLldCount);

  std::vector<double> previous;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    const auto cep = analyzer.mfcc(frames[t]);
    for (int i = 0; i < kMfccCount; ++i) m.values(row, i) = cep[static_cast<std::size_t>(i)];
    const auto d = analyzer.spectral(frames[t], previous);
    const std::array<double, 8> spectral{d.zcr, d.energy, d.energy_entropy, d.centroid,
                                         d.spread, d.spectral_entropy, d.flux, d.rolloff};
    for (int i = 0; i < 8; ++i) m.values(row, kMfccCount + i) = spectral[static_cast<std::size_t>(i)];
    const auto c = analyzer.chroma(frames[t]);
    for (int i = 0; i < 12; ++i) m.values(row, 21 + i) = c.bins[static_cast<std::size_t>(i)];
    m.values(row, 33) = c.deviation;
    const auto p = analyzer.pitch(frames[t]);
    m.values(row, 34) = p.harmonic_ratio;
    m.values(row, 35) = p.pitch_hz;
  }
  return m;
}

FrameFeatureMatrix compute_deltas(const FrameFeatureMatrix& m) {
  const Eigen::Index frames = m.frames();
  const Eigen::Index dim = m.dim();
  if (frames < 1) throw InvalidArgument("delta computation needs at least one frame");
  FrameFeatureMatrix out;
  out.frame_ms = m.frame_ms;
  out.hop_ms = m.hop_ms;
  out.values.resize(frames, 2 * dim);
  out.values.leftCols(dim) = m.values;

  constexpr int kHalfWindow = 2;
  constexpr double kNorm = 2.0 * (1 * 1 + 2 * 2);
  auto at = [&](Eigen::Index t, Eigen::Index c) {
    return m.values(std::clamp<Eigen::Index>(t, 0, frames - 1), c);
  };
  for (Eigen::Index c = 0; c < dim; ++c) {
    for (Eigen::Index t = 0; t < frames; ++t) {
      double acc = 0.0;
      for (int n = 1; n <= kHalfWindow; ++n) acc += n * (at(t + n, c) - at(t - n, c));
      out.values(t, dim + c) = acc / kNorm;
    }
  }

  out.feature_names = m.feature_names;
  for (const auto& name : m.feature_names) out.feature_names.push_back("delta_" + name);
  return out;
}

const std::vector<std::string>& functional_names() {
  static const std::vector<std::string> names{
      "mean",     "std",       "skewness",  "kurtosis",   "min",         "max",         "range",
      "min_pos",  "max_pos",   "quartile1", "median",     "quartile3",   "iqr1_2",      "iqr2_3",
      "iqr1_3",   "percentile1", "percentile99", "pct_range1_99", "linreg_slope", "linreg_offset",
      "linreg_qerror"};
  return names;
}

std::array<double, kFunctionalCount> stream_functionals(std::span<const double> stream) {
  if (stream.empty()) throw InvalidArgument("functionals of an empty stream");
  const std::size_t n = stream.size();
  const double count = static_cast<double>(n);
  std::array<double, kFunctionalCount> f{};

  const double mean = std::accumulate(stream.begin(), stream.end(), 0.0) / count;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : stream) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= count;
  m3 /= count;
  m4 /= count;
  const double std_dev = std::sqrt(m2);
  f[0] = mean;
  f[1] = std_dev;
  if (std_dev >= kMomentFloor) {
    f[2] = m3 / (m2 * std_dev);
    f[3] = m4 / (m2 * m2) - 3.0;
  }

  const auto [min_it, max_it] = std::minmax_element(stream.begin(), stream.end());
  f[4] = *min_it;
  f[5] = *max_it;
  f[6] = *max_it - *min_it;
  if (n > 1) {
    f[7] = static_cast<double>(min_it - stream.begin()) / (count - 1.0);
    f[8] = static_cast<double>(max_it - stream.begin()) / (count - 1.0);
  }

  std::vector<double> sorted(stream.begin(), stream.end());
  std::sort(sorted.begin(), sorted.end());
  const double q1 = percentile_sorted(sorted, 0.25);
  const double q2 = percentile_sorted(sorted, 0.50);
  const double q3 = percentile_sorted(sorted, 0.75);
  const double p1 = percentile_sorted(sorted, 0.01);
  const double p99 = percentile_sorted(sorted, 0.99);
  f[9] = q1;
  f[10] = q2;
  f[11] = q3;
  f[12] = q2 - q1;
  f[13] = q3 - q2;
  f[14] = q3 - q1;
  f[15] = p1;
  f[16] = p99;
  f[17] = p99 - p1;

  if (n > 1) {
    // Least squares over t = 0..n-1.
    const double t_mean = (count - 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double dt = static_cast<double>(t) - t_mean;
      sxy += dt * (stream[t] - mean);
      sxx += dt * dt;
    }
    const double slope = sxy / sxx;
    const double offset = mean - slope * t_mean;
    double err = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double r = stream[t] - (offset + slope * static_cast<double>(t));
      err += r * r;
    }
    f[18] = slope;
    f[19] = offset;
    f[20] = err / count;
  } else {
    f[19] = stream[0];
  }
  return f;
}

UtteranceFeatureVector utterance_functionals(const FrameFeatureMatrix& m) {
  if (m.dim() != kLldWithDeltasCount) {
    throw ShapeError("functionals expect " + std::to_string(kLldWithDeltasCount) + " streams, got " +
                     std::to_string(m.dim()));
  }
  if (m.frames() < 1) throw InvalidArgument("functionals need at least one frame");
  UtteranceFeatureVector v;
  v.kind = VectorKind::kFunctional;
  v.values.resize(kFunctionalDim);
  std::vector<double> column(static_cast<std::size_t>(m.frames()));
  for (Eigen::Index c = 0; c < m.dim(); ++c) {
    for (Eigen::Index t = 0; t < m.frames(); ++t) column[static_cast<std::size_t>(t)] = m.values(t, c);
    const auto f = stream_functionals(column);
    for (int i = 0; i < kFunctionalCount; ++i) v.values[c * kFunctionalCount + i] = f[static_cast<std::size_t>(i)];
  }
  return v;
}

std::vector<std::string> functional_feature_names() {
  std::vector<std::string> names;
  names.reserve(kFunctionalDim);
  std::vector<std::string> streams = lld_names();
  for (const auto& s : lld_names()) streams.push_back("delta_" + s);
  for (const auto& s : streams) {
    for (const auto& f : functional_names()) names.push_back(s + "__" + f);
  }
  return names;
}

double estimate_snr(const Waveform& w) {
  if (!w.is_canonical()) throw InvalidArgument("SNR estimation requires a canonical waveform");
  const std::size_t count = frame_count(w.samples.size());
  if (count < 10) {
    throw InvalidArgument("SNR estimation needs at least 10 frames, got " + std::to_string(count));
  }
  std::vector<double> energies(count);
  for (std::size_t t = 0; t < count; ++t) {
    double e = 0.0;
    for (int n = 0; n < kFrameLength; ++n) {
      const double x = w.samples[t * kFrameHop + static_cast<std::size_t>(n)];
      e += x * x;
    }
    energies[t] = e / kFrameLength;
  }
  std::sort(energies.begin(), energies.end());
  const std::size_t low = std::max<std::size_t>(1, count / 10);
  const std::size_t high = std::max<std::size_t>(1, count / 4);
  const double noise =
      std::max(std::accumulate(energies.begin(), energies.begin() + static_cast<std::ptrdiff_t>(low), 0.0) /
                   static_cast<double>(low),
               1e-12);
  const double signal =
      std::accumulate(energies.end() - static_cast<std::ptrdiff_t>(high), energies.end(), 0.0) /
      static_cast<double>(high);
  return 10.0 * std::log10(std::max(signal, 1e-12) / noise);
}

}  // namespace emofuse
