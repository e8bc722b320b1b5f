// SPDX-License-Identifier: Apache-2.0
#include "emofuse/audio.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>
#include <string>

#include "emofuse/error.hpp"

namespace emofuse {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

constexpr int kTapsPerPhase = 64;
constexpr double kKaiserBeta = 8.6;
// Cutoff as a fraction of the lower Nyquist rate; leaves room for the
// transition band below the folding frequency.
constexpr double kCutoffFraction = 0.95;

static_assert(std::endian::native == std::endian::little,
              "WAV codec assumes a little-endian host");

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& what) {
  throw FormatError("malformed WAV header in '" + path.string() + "': " + what);
}

}  // namespace

std::vector<double> Waveform::channel(int index) const {
  if (index < 0 || index >= channel_count) {
    throw InvalidArgument("channel index " + std::to_string(index) + " out of range");
  }
  std::vector<double> out(frame_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = samples[i * static_cast<std::size_t>(channel_count) + static_cast<std::size_t>(index)];
  }
  return out;
}

Waveform decode_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open WAV file '" + path.string() + "'");
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    malformed(path, "missing RIFF/WAVE signature");
  }

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Some writers leave a bogus size on the trailing data chunk.
      if (std::memcmp(chunk, "data", 4) != 0) malformed(path, "chunk extends past end of file");
    }
    const std::size_t available = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (available < 16) malformed(path, "fmt chunk shorter than 16 bytes");
      format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      block_align = read_u16(chunk + 20);
      bits = read_u16(chunk + 22);
      if (format == kFormatExtensible) {
        if (available < 40) malformed(path, "extensible fmt chunk too short");
        format = read_u16(chunk + 8 + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = available;
    }
    pos = body + size + (size & 1U);
  }

  if (!have_fmt) malformed(path, "no fmt chunk");
  if (data == nullptr) malformed(path, "no data chunk");
  if (channels == 0) malformed(path, "zero channels");
  if (rate == 0) malformed(path, "zero sample rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  const bool float64 = format == kFormatFloat && bits == 64;
  if (!pcm16 && !float32 && !float64) {
    throw UnsupportedError("unsupported WAV codec in '" + path.string() + "': format tag " +
                           std::to_string(format) + ", " + std::to_string(bits) + " bits");
  }
  const std::size_t sample_bytes = bits / 8U;
  if (block_align != sample_bytes * channels) malformed(path, "block alignment disagrees with format");

  const std::size_t total = data_size / sample_bytes;
  const std::size_t usable = total - total % channels;
  if (usable == 0) malformed(path, "empty data chunk");

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.channel_count = channels;
  w.samples.resize(usable);
  for (std::size_t i = 0; i < usable; ++i) {
    const unsigned char* p = data + i * sample_bytes;
    double v;
    if (pcm16) {
      v = static_cast<std::int16_t>(read_u16(p)) / 32768.0;
    } else if (float32) {
      v = std::bit_cast<float>(read_u32(p));
    } else {
      std::uint64_t raw = 0;
      std::memcpy(&raw, p, 8);
      v = std::bit_cast<double>(raw);
    }
    if (!std::isfinite(v)) malformed(path, "non-finite sample at index " + std::to_string(i));
    w.samples[i] = std::clamp(v, -1.0, 1.0);
  }
  return w;
}

void write_wav(const std::filesystem::path& path, const Waveform& w, WavEncoding encoding) {
  if (w.channel_count < 1 || w.samples.empty()) {
    throw InvalidArgument("cannot write empty waveform to '" + path.string() + "'");
  }
  const bool pcm = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint16_t block = static_cast<std::uint16_t>(bits / 8 * w.channel_count);
  const std::uint32_t data_size = static_cast<std::uint32_t>(w.samples.size() * (bits / 8));

  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put_u32(out, 36 + data_size);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, pcm ? kFormatPcm : kFormatFloat);
  put_u16(out, static_cast<std::uint16_t>(w.channel_count));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * block);
  put_u16(out, block);
  put_u16(out, bits);
  out += "data";
  put_u32(out, data_size);
  for (double s : w.samples) {
    if (pcm) {
      const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
      const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
      put_u16(out, static_cast<std::uint16_t>(v));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(s)));
    }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write WAV file '" + path.string() + "'");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write on '" + path.string() + "'");
}

std::vector<double> resample(std::span<const double> input, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw InvalidArgument("sample rates must be positive");
  if (input.empty()) throw InvalidArgument("cannot resample zero-length input");
  if (from_rate == to_rate) return {input.begin(), input.end()};

  const long g = std::gcd(from_rate, to_rate);
  const long up = to_rate / g;
  const long down = from_rate / g;
  const double cutoff = kCutoffFraction * std::min(1.0, static_cast<double>(up) / down);
  constexpr int half = kTapsPerPhase / 2;
  const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);

  // table[p][k]: weight of input sample base + k - half + 1 for output phase p.
  std::vector<double> table(static_cast<std::size_t>(up) * kTapsPerPhase);
  for (long p = 0; p < up; ++p) {
    double* row = table.data() + p * kTapsPerPhase;
    const double frac = static_cast<double>(p) / up;
    double sum = 0.0;
    for (int k = 0; k < kTapsPerPhase; ++k) {
      const double tau = frac - (k - half + 1);
      const double r = tau / half;
      const double window = std::abs(r) >= 1.0
                                ? 0.0
                                : std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
      const double x = cutoff * tau;
      const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
      row[k] = cutoff * sinc * window;
      sum += row[k];
    }
    for (int k = 0; k < kTapsPerPhase; ++k) row[k] /= sum;
  }

  const long n_in = static_cast<long>(input.size());
  const long n_out = (n_in * up + down - 1) / down;
  std::vector<double> out(static_cast<std::size_t>(n_out));
  for (long n = 0; n < n_out; ++n) {
    const long pos = n * down;
    const long base = pos / up;
    const double* row = table.data() + (pos % up) * kTapsPerPhase;
    double acc = 0.0;
    for (int k = 0; k < kTapsPerPhase; ++k) {
      const long i = base + k - half + 1;
      if (i >= 0 && i < n_in) acc += row[k] * input[static_cast<std::size_t>(i)];
    }
    out[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

Waveform canonicalize(const Waveform& w) {
  if (w.samples.empty() || w.frame_count() == 0) {
    throw InvalidArgument("cannot canonicalize zero-length waveform");
  }
  if (w.channel_count < 1 || w.sample_rate <= 0) {
    throw InvalidArgument("waveform has invalid channel count or sample rate");
  }
  if (w.is_canonical()) return w;

  std::vector<double> mono(w.frame_count());
  const auto channels = static_cast<std::size_t>(w.channel_count);
  for (std::size_t i = 0; i < mono.size(); ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) acc += w.samples[i * channels + c];
    mono[i] = acc / static_cast<double>(channels);
  }

  Waveform out;
  out.channel_count = 1;
  out.sample_rate = kCanonicalSampleRate;
  out.samples = w.sample_rate == kCanonicalSampleRate
                    ? std::move(mono)
                    : resample(mono, w.sample_rate, kCanonicalSampleRate);
  return out;
}

}  // namespace emofuse
