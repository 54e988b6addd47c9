#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "mmw2s/frontend/frames.hpp"
#include "mmw2s/frontend/log_mel.hpp"
#include "mmw2s/frontend/tokenizer.hpp"
#include "mmw2s/frontend/wav.hpp"

using namespace mmw2s;

namespace {

// Direct DFT of one Hann-windowed frame, then triangles built bin by bin.
std::vector<double> oracle_log_mel_frame(const std::vector<float>& x, std::size_t offset, const MelConfig& cfg) {
  const std::size_t n = cfg.frame_length();
  const std::size_t nfft = cfg.fft_size();
  std::vector<double> power(nfft / 2 + 1);
  for (std::size_t k = 0; k < power.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double w = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * double(t) / double(n));
      const double angle = -2 * std::numbers::pi * double(k) * double(t) / double(nfft);
      acc += double(x[offset + t]) * w * std::polar(1.0, angle);
    }
    power[k] = std::norm(acc);
  }
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  const double lo = mel(cfg.f_min), hi = mel(cfg.upper_frequency());
  const double step = (hi - lo) / double(cfg.n_mels + 1);
  std::vector<double> out(cfg.n_mels);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double c = lo + step * double(m + 1);
    double e = 0.0;
    for (std::size_t k = 0; k < power.size(); ++k) {
      const double f = mel(cfg.sample_rate * double(k) / double(nfft));
      double w = 0.0;
      if (f > c - step && f <= c) w = (f - (c - step)) / step;
      if (f > c && f < c + step) w = (c + step - f) / step;
      e += w * power[k];
    }
    out[m] = std::log(std::max(e, cfg.log_floor));
  }
  return out;
}

std::vector<float> tone(double hz, double seconds, double rate = 16000.0, double amp = 0.5) {
  std::vector<float> x(static_cast<std::size_t>(seconds * rate));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = float(amp * std::sin(2 * std::numbers::pi * hz * double(i) / rate));
  return x;
}

}  // namespace

TEST(LogMel, FrameCountAndShape) {
  const MelConfig cfg;
  EXPECT_EQ(cfg.frame_length(), 400u);
  EXPECT_EQ(cfg.hop_length(), 160u);
  EXPECT_EQ(cfg.fft_size(), 512u);
  // 10 s window at 16 kHz holds 160001 samples.
  EXPECT_EQ(log_mel_frame_count(160001, cfg), 998u);
  const auto spec = compute_log_mel(std::vector<float>(1000, 0.0f), 16000.0, cfg);
  EXPECT_EQ(spec.n_frames, 4u);
  EXPECT_EQ(spec.n_mels, 40u);
  for (double v : spec.values) EXPECT_DOUBLE_EQ(v, std::log(cfg.log_floor));
}

TEST(LogMel, MatchesDirectDft) {
  MelConfig cfg;
  cfg.n_mels = 24;
  Rng rng(3);
  std::vector<float> x(2000);
  for (auto& v : x) v = float(rng.uniform(-0.5, 0.5));
  const auto spec = compute_log_mel(x, 16000.0, cfg);
  for (std::size_t f : {std::size_t{0}, std::size_t{3}, spec.n_frames - 1}) {
    const auto ref = oracle_log_mel_frame(x, f * cfg.hop_length(), cfg);
    for (std::size_t m = 0; m < cfg.n_mels; ++m) EXPECT_NEAR(spec.at(f, m), ref[m], 1e-8) << f << "," << m;
  }
}

TEST(LogMel, ToneLandsInNearestFilter) {
  const MelConfig cfg;
  const MelFilterbank bank(cfg);
  for (double hz : {300.0, 1000.0, 3000.0}) {
    const auto spec = compute_log_mel(tone(hz, 0.5), 16000.0, cfg);
    std::size_t best = 0;
    for (std::size_t m = 1; m < cfg.n_mels; ++m) {
      if (spec.at(10, m) > spec.at(10, best)) best = m;
    }
    std::size_t nearest = 0;
    for (std::size_t m = 1; m < cfg.n_mels; ++m) {
      if (std::abs(bank.centers_hz()[m] - hz) < std::abs(bank.centers_hz()[nearest] - hz)) nearest = m;
    }
    EXPECT_LE(best > nearest ? best - nearest : nearest - best, 1u) << hz;
  }
}

TEST(LogMel, Errors) {
  const MelConfig cfg;
  try {
    compute_log_mel(std::vector<float>(10, 0.0f), 16000.0, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptySignal);
  }
  EXPECT_THROW(compute_log_mel(std::vector<float>(1000, 0.0f), 8000.0, cfg), Error);
  MelConfig bad;
  bad.n_mels = 0;
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Wav, RoundTripIsExactAfterQuantization) {
  AudioBuffer a;
  a.samples = tone(440.0, 0.25);
  a.samples.push_back(1.5f);  // clamps
  quantize_pcm16(a.samples);
  const auto b = decode_wav(encode_wav(a));
  EXPECT_EQ(b.sample_rate, 16000.0);
  EXPECT_EQ(b.samples, a.samples);
  EXPECT_FLOAT_EQ(b.samples.back(), 1.0f);
}

TEST(Wav, ResamplesToCanonicalRate) {
  AudioBuffer a;
  a.sample_rate = 8000.0;
  a.samples = tone(200.0, 1.0, 8000.0);
  const auto b = decode_wav(encode_wav(a));
  EXPECT_EQ(b.sample_rate, 16000.0);
  EXPECT_EQ(b.samples.size(), 15999u);
  EXPECT_NEAR(b.samples[2], a.samples[1], 1e-4);
}

TEST(Wav, RejectsGarbage) {
  try {
    decode_wav("not a wav file at all, definitely");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
}

TEST(Frames, SampledAtFixedRate) {
  MediaTimeline tl;
  tl.source_id = "v";
  tl.duration_s = 30.0;
  FrameTrack v;
  v.fps = 5.0;
  v.height = 2;
  v.width = 2;
  v.channels = 1;
  const std::size_t n = 151;
  for (std::size_t j = 0; j < n; ++j)
    for (int p = 0; p < 4; ++p) v.pixels.push_back(float(j));
  tl.video = v;
  const Clip c = extract_clip(tl, 3, WindowConfig{});
  const auto seq = sample_frames(c, 2.0);
  ASSERT_TRUE(seq.has_value());
  EXPECT_EQ(seq->count, 20u);
  // t_start = 1.0 -> source frame 5, then every 0.5 s.
  EXPECT_EQ(seq->source_indices.front(), 5u);
  EXPECT_EQ(seq->source_indices[1], 8u);
  EXPECT_FLOAT_EQ(seq->frame(19)[0], float(seq->source_indices[19]));
  tl.video.reset();
  EXPECT_FALSE(sample_frames(extract_clip(tl, 3, WindowConfig{}), 2.0).has_value());
}

TEST(Frames, TrackFileRoundTrip) {
  FrameTrack v;
  v.fps = 4.0;
  v.height = 3;
  v.width = 2;
  v.channels = 3;
  for (int i = 0; i < 3 * 2 * 3 * 5; ++i) v.pixels.push_back(float(i) * 0.25f);
  const auto path = std::filesystem::temp_directory_path() / "mmw2s_frames_test.vfeat";
  write_frame_track(path.string(), v);
  const FrameTrack back = read_frame_track(path.string(), 4.0);
  EXPECT_EQ(back.frame_count(), 5u);
  EXPECT_EQ(back.pixels, v.pixels);
  std::filesystem::remove(path);
}

TEST(Tokenizer, SplitsPunctuationAndLowercases) {
  const auto w = split_words("Wait, WHAT?  ok");
  ASSERT_EQ(w.size(), 5u);
  EXPECT_EQ(w[0], "wait");
  EXPECT_EQ(w[1], ",");
  EXPECT_EQ(w[2], "what");
  EXPECT_EQ(w[3], "?");
  EXPECT_EQ(w[4], "ok");
}

TEST(Tokenizer, OovBucketsAreStable) {
  const Vocabulary& v = default_vocabulary();
  const auto id = v.id_of("zyzzyva");
  EXPECT_TRUE(v.is_oov(id));
  EXPECT_LT(id, v.size());
  EXPECT_EQ(id, v.id_of("zyzzyva"));
  EXPECT_FALSE(v.is_oov(v.id_of("yeah")));
  EXPECT_EQ(v.word_of(v.id_of("yeah")), "yeah");
  EXPECT_THROW(Vocabulary({"a", "a"}), Error);
}

TEST(Tokenizer, KeepsMostRecentTokens) {
  const auto seq = tokenize("one two three four five", default_vocabulary(), 3);
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(seq.tokens.front(), "three");
  EXPECT_EQ(seq.tokens.back(), "five");
  const std::vector<TimedToken> timed{{"Hi,", 0.0, 0.1}, {"there", 0.2, 0.3}};
  const auto t = tokenize_timed(timed, default_vocabulary());
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.tokens[1], ",");
}
