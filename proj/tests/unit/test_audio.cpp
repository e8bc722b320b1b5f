// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "emofuse/audio.hpp"
#include "emofuse/error.hpp"
#include "emofuse/spectrum.hpp"
#include "test_support.hpp"

namespace {

using emofuse::testing::TempDir;

// Hand-assembled RIFF bytes, independent of write_wav.
std::string riff(std::uint16_t format, std::uint16_t channels, std::uint32_t rate, std::uint16_t bits,
                 const std::string& payload) {
  std::string out;
  const auto u32 = [&](std::uint32_t v) { for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF)); };
  const auto u16 = [&](std::uint16_t v) { for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF)); };
  out += "RIFF";
  u32(static_cast<std::uint32_t>(36 + payload.size()));
  out += "WAVEfmt ";
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * bits / 8);
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(bits);
  out += "data";
  u32(static_cast<std::uint32_t>(payload.size()));
  out += payload;
  return out;
}

std::string pcm16(const std::vector<std::int16_t>& v) {
  std::string s(v.size() * 2, '\0');
  for (std::size_t i = 0; i < v.size(); ++i) {
    s[2 * i] = static_cast<char>(v[i] & 0xFF);
    s[2 * i + 1] = static_cast<char>((v[i] >> 8) & 0xFF);
  }
  return s;
}

void dump(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

double dominant_frequency(const std::vector<double>& x, int rate) {
  emofuse::RealFft fft(4096);
  std::vector<double> seg(x.begin() + 1000, x.begin() + 1000 + 4096);
  for (std::size_t i = 0; i < seg.size(); ++i) seg[i] *= 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / 4095.0);
  const auto p = fft.power(seg);
  const auto k = std::max_element(p.begin() + 1, p.end()) - p.begin();
  return static_cast<double>(k) * rate / 4096.0;
}

TEST(DecodeWav, SilentSecondDecodesToZeros) {
  TempDir dir("audio");
  dump(dir / "z.wav", riff(1, 1, 16000, 16, pcm16(std::vector<std::int16_t>(16000, 0))));
  const auto w = emofuse::decode_wav(dir / "z.wav");
  EXPECT_EQ(w.sample_rate, 16000);
  EXPECT_EQ(w.channel_count, 1);
  ASSERT_EQ(w.samples.size(), 16000u);
  EXPECT_TRUE(std::all_of(w.samples.begin(), w.samples.end(), [](double v) { return v == 0.0; }));
}

TEST(DecodeWav, Pcm16FullScaleScalesBy32768) {
  TempDir dir("audio");
  dump(dir / "one.wav", riff(1, 1, 16000, 16, pcm16({32767})));
  const auto w = emofuse::decode_wav(dir / "one.wav");
  ASSERT_EQ(w.samples.size(), 1u);
  EXPECT_EQ(w.samples[0], 32767.0 / 32768.0);
  EXPECT_NEAR(w.samples[0], 0.99997, 1e-5);
}

TEST(DecodeWav, ThreeChannelInterleavedPayload) {
  TempDir dir("audio");
  std::vector<std::int16_t> v;
  for (int i = 0; i < 30; ++i) v.push_back(static_cast<std::int16_t>(i * 100));
  dump(dir / "tri.wav", riff(1, 3, 22050, 16, pcm16(v)));
  const auto w = emofuse::decode_wav(dir / "tri.wav");
  EXPECT_EQ(w.channel_count, 3);
  EXPECT_EQ(w.sample_rate, 22050);
  EXPECT_EQ(w.frame_count(), 10u);
  const auto ch1 = w.channel(1);
  ASSERT_EQ(ch1.size(), 10u);
  EXPECT_EQ(ch1[2], 700.0 / 32768.0);
}

TEST(DecodeWav, Float32Payload) {
  TempDir dir("audio");
  const float vals[3] = {0.25f, -0.5f, 1.0f};
  std::string payload(reinterpret_cast<const char*>(vals), sizeof vals);
  dump(dir / "f.wav", riff(3, 1, 8000, 32, payload));
  const auto w = emofuse::decode_wav(dir / "f.wav");
  ASSERT_EQ(w.samples.size(), 3u);
  EXPECT_EQ(w.samples[1], -0.5);
}

TEST(DecodeWav, DistinctErrorsNameThePath) {
  TempDir dir("audio");
  const auto missing = dir / "missing.wav";
  try {
    emofuse::decode_wav(missing);
    FAIL();
  } catch (const emofuse::IoError& e) {
    EXPECT_NE(std::string(e.what()).find(missing.string()), std::string::npos);
  }
  dump(dir / "bad.wav", "RIFX garbage");
  try {
    emofuse::decode_wav(dir / "bad.wav");
    FAIL();
  } catch (const emofuse::FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.wav"), std::string::npos);
  }
  dump(dir / "adpcm.wav", riff(2, 1, 16000, 4, std::string(100, '\0')));
  try {
    emofuse::decode_wav(dir / "adpcm.wav");
    FAIL();
  } catch (const emofuse::UnsupportedError& e) {
    EXPECT_NE(std::string(e.what()).find("adpcm.wav"), std::string::npos);
  }
  dump(dir / "pcm24.wav", riff(1, 1, 16000, 24, std::string(30, '\0')));
  EXPECT_THROW(emofuse::decode_wav(dir / "pcm24.wav"), emofuse::UnsupportedError);
}

TEST(DecodeWav, WriteReadRoundTrip) {
  TempDir dir("audio");
  auto w = emofuse::testing::mono(emofuse::testing::sine(300.0, 0.1));
  emofuse::write_wav(dir / "f.wav", w, emofuse::WavEncoding::kFloat32);
  const auto back = emofuse::decode_wav(dir / "f.wav");
  ASSERT_EQ(back.samples.size(), w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) EXPECT_EQ(back.samples[i], static_cast<double>(static_cast<float>(w.samples[i])));
  emofuse::write_wav(dir / "p.wav", w, emofuse::WavEncoding::kPcm16);
  const auto p = emofuse::decode_wav(dir / "p.wav");
  for (std::size_t i = 0; i < w.samples.size(); ++i) EXPECT_NEAR(p.samples[i], w.samples[i], 1.0 / 32768.0);
}

TEST(Canonicalize, OneSecondAt44100GivesSixteenThousandSamples) {
  const auto w = emofuse::canonicalize(emofuse::testing::mono(emofuse::testing::sine(440.0, 1.0, 44100), 44100));
  EXPECT_TRUE(w.is_canonical());
  EXPECT_NEAR(static_cast<double>(w.samples.size()), 16000.0, 1.0);
}

TEST(Canonicalize, CanonicalInputIsBitIdentical) {
  const auto in = emofuse::testing::mono(emofuse::testing::white_noise(5000, 3));
  const auto out = emofuse::canonicalize(in);
  EXPECT_EQ(out.samples, in.samples);
}

TEST(Canonicalize, ToneKeepsDominantFrequency) {
  for (double hz : {440.0, 1000.0, 3150.0, 6500.0}) {
    const auto out = emofuse::canonicalize(emofuse::testing::mono(emofuse::testing::sine(hz, 1.0, 44100), 44100));
    EXPECT_NEAR(dominant_frequency(out.samples, 16000), hz, 16000.0 / 4096.0) << hz;
  }
}

TEST(Canonicalize, IsIdempotent) {
  const auto once = emofuse::canonicalize(emofuse::testing::mono(emofuse::testing::sine(523.0, 0.5, 22050), 22050));
  const auto twice = emofuse::canonicalize(once);
  EXPECT_EQ(once.samples, twice.samples);
}

TEST(Canonicalize, IdenticalStereoChannelsEqualEitherChannel) {
  const auto ch = emofuse::testing::white_noise(4000, 11);
  emofuse::Waveform st;
  st.sample_rate = 16000;
  st.channel_count = 2;
  for (double v : ch) {
    st.samples.push_back(v);
    st.samples.push_back(v);
  }
  EXPECT_EQ(emofuse::canonicalize(st).samples, ch);
}

TEST(Canonicalize, RejectsEmptyInput) {
  EXPECT_THROW(emofuse::canonicalize(emofuse::testing::mono({}, 44100)), emofuse::Error);
}

TEST(Canonicalize, DurationPreservedAcrossRates) {
  for (int rate : {8000, 11025, 22050, 32000, 48000}) {
    const auto w = emofuse::testing::mono(emofuse::testing::sine(200.0, 0.73, rate), rate);
    const auto out = emofuse::canonicalize(w);
    EXPECT_NEAR(static_cast<double>(out.samples.size()), w.duration_seconds() * 16000.0, 1.0) << rate;
  }
}

}  // namespace
