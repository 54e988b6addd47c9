#include <gtest/gtest.h>

#include <cmath>

#include "mmw2s/timeline.hpp"
#include "oracles.hpp"

using namespace mmw2s;

namespace {

MediaTimeline make_timeline(double duration, double rate = 16000.0) {
  MediaTimeline tl;
  tl.source_id = "t";
  tl.duration_s = duration;
  AudioTrack a;
  a.sample_rate = rate;
  a.samples.assign(static_cast<std::size_t>(std::floor(duration * rate)) + 1, 0.0f);
  tl.audio = a;
  return tl;
}

}  // namespace

TEST(Windowing, SixtySecondsGivesOneHundredOneClips) {
  const WindowConfig cfg;
  ASSERT_EQ(window_count(60.0, cfg), 101u);
  EXPECT_DOUBLE_EQ(clip_end_time(1, cfg), 10.0);
  EXPECT_DOUBLE_EQ(clip_end_time(2, cfg), 10.5);
  EXPECT_DOUBLE_EQ(clip_end_time(101, cfg), 60.0);
}

TEST(Windowing, BoundaryCases) {
  const WindowConfig cfg;
  EXPECT_EQ(window_count(9.99, cfg), 0u);
  EXPECT_EQ(window_count(10.0, cfg), 1u);
  EXPECT_EQ(window_count(10.49, cfg), 1u);
  EXPECT_EQ(window_count(10.5, cfg), 2u);
  EXPECT_EQ(window_count(0.0, cfg), 0u);
}

TEST(Windowing, IndexZeroIsInvalid) {
  try {
    clip_end_time(0, WindowConfig{});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidIndex);
  }
}

TEST(Windowing, MatchesEnumerationOnRandomConfigs) {
  Rng rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    WindowConfig cfg;
    // Mix grid-aligned values (exact boundary hits) with arbitrary ones.
    cfg.window_s = trial % 2 ? rng.uniform(0.5, 20.0) : 0.5 * static_cast<double>(1 + rng.below(40));
    cfg.stride_s = trial % 3 ? rng.uniform(0.05, 3.0) : 0.1 * static_cast<double>(1 + rng.below(20));
    const double duration = trial % 4 ? rng.uniform(0.0, 120.0) : 0.5 * static_cast<double>(rng.below(200));
    const auto expected = oracle::enumerate_window_ends(duration, cfg.window_s, cfg.stride_s);
    ASSERT_EQ(window_count(duration, cfg), expected.size()) << "duration " << duration;
    for (std::size_t i = 0; i < expected.size(); ++i) ASSERT_EQ(clip_end_time(i + 1, cfg), expected[i]);
  }
}

TEST(Windowing, StrideMustBePositive) {
  WindowConfig cfg;
  cfg.stride_s = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(TimestampRange, ClosedInterval) {
  const IndexRange r = timestamp_range(16000.0, 0.0, 10.0, 1000000);
  EXPECT_EQ(r.first, 0u);
  EXPECT_EQ(r.last, 160001u);
  const IndexRange v = timestamp_range(2.0, 1.0, 2.0, 100);
  EXPECT_EQ(v.first, 2u);
  EXPECT_EQ(v.last, 5u);
  EXPECT_TRUE(timestamp_range(2.0, 0.6, 0.9, 100).empty());
}

TEST(Clip, ExtractsClosedWindow) {
  const MediaTimeline tl = make_timeline(60.0);
  const Clip c = extract_clip(tl, 1, WindowConfig{});
  EXPECT_DOUBLE_EQ(c.t_start, 0.0);
  EXPECT_DOUBLE_EQ(c.t_end, 10.0);
  EXPECT_EQ(c.audio().size(), 160001u);
  const Clip last = extract_clip(tl, 101, WindowConfig{});
  EXPECT_EQ(last.audio_samples.first, 800000u);
  EXPECT_EQ(last.audio_samples.last, 960001u);
}

TEST(Clip, OutOfBounds) {
  const MediaTimeline tl = make_timeline(60.0);
  try {
    extract_clip(tl, 102, WindowConfig{});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kWindowOutOfBounds);
  }
}

TEST(Clip, TokensBelongByOnset) {
  MediaTimeline tl = make_timeline(20.0);
  tl.transcript = std::vector<TimedToken>{{"a", 0.4, 1.0}, {"b", 9.9, 10.4}, {"c", 10.0, 10.2}, {"d", 10.1, 10.3}};
  const Clip c = extract_clip(tl, 1, WindowConfig{});
  ASSERT_EQ(c.tokens().size(), 3u);
  EXPECT_EQ(c.tokens()[2].token, "c");
  const Clip c2 = extract_clip(tl, 2, WindowConfig{});
  ASSERT_EQ(c2.tokens().size(), 3u);
  EXPECT_EQ(c2.tokens()[0].token, "b");
}

TEST(Clip, IterClipsIsLazyAndOrdered) {
  const MediaTimeline tl = make_timeline(60.0, 100.0);
  std::size_t n = 0;
  double last = 0.0;
  for (const Clip& c : iter_clips(tl, WindowConfig{})) {
    EXPECT_GT(c.t_end, last);
    last = c.t_end;
    ++n;
  }
  EXPECT_EQ(n, 101u);
}

TEST(Clip, MissingModalitiesAreEmpty) {
  MediaTimeline tl;
  tl.source_id = "x";
  tl.duration_s = 30.0;
  const Clip c = extract_clip(tl, 3, WindowConfig{});
  EXPECT_FALSE(c.has_audio());
  EXPECT_TRUE(c.audio().empty());
  EXPECT_TRUE(c.tokens().empty());
}

TEST(Manifest, RoundTripsWithNulls) {
  TimelineManifestEntry e;
  e.source_id = "s1";
  e.duration_s = 42.5;
  e.audio_path = "a.wav";
  e.transcript = std::vector<TimedToken>{{"hi", 1.0, 1.2}};
  const nlohmann::json j = e;
  EXPECT_TRUE(j.at("video_feat_path").is_null());
  const auto back = j.get<TimelineManifestEntry>();
  EXPECT_EQ(back.source_id, "s1");
  EXPECT_EQ(back.audio_path, e.audio_path);
  EXPECT_FALSE(back.video_feat_path.has_value());
  ASSERT_TRUE(back.transcript.has_value());
  EXPECT_EQ(back.transcript->at(0).token, "hi");
}
