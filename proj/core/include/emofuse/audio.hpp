// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace emofuse {

inline constexpr int kCanonicalSampleRate = 16000;

/// Interleaved audio samples in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kCanonicalSampleRate;
  int channel_count = 1;

  /// Samples per channel.
  std::size_t frame_count() const {
    return channel_count > 0 ? samples.size() / static_cast<std::size_t>(channel_count) : 0;
  }
  double duration_seconds() const {
    return static_cast<double>(frame_count()) / sample_rate;
  }
  bool is_canonical() const {
    return sample_rate == kCanonicalSampleRate && channel_count == 1;
  }
  /// De-interleaved copy of one channel.
  std::vector<double> channel(int index) const;
};

enum class WavEncoding { kPcm16, kFloat32 };

/// Reads a RIFF/WAVE file with a PCM16 or IEEE-float (32/64 bit) payload.
/// Throws IoError (cannot open), FormatError (malformed container) or
/// UnsupportedError (other codecs / bit depths); messages carry the path.
Waveform decode_wav(const std::filesystem::path& path);

/// Writes a little-endian RIFF/WAVE file. PCM16 output is clipped to [-1, 1).
void write_wav(const std::filesystem::path& path, const Waveform& w,
               WavEncoding encoding = WavEncoding::kPcm16);

/// Mixes down to mono by channel mean and resamples to 16 kHz. Already
/// canonical input is returned unchanged.
Waveform canonicalize(const Waveform& w);

/// Polyphase windowed-sinc resampler (Kaiser window, beta 8.6, 64 taps per
/// phase). Output length is ceil(n * to / from).
std::vector<double> resample(std::span<const double> input, int from_rate, int to_rate);

}  // namespace emofuse
