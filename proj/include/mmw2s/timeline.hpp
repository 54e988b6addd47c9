#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ranges>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmw2s/common/error.hpp"

namespace mmw2s {

/// Sliding-window geometry: clip i covers [t_i - window_s, t_i] with
/// t_i = window_s + (i - 1) * stride_s.
struct WindowConfig {
  double window_s = 10.0;
  double stride_s = 0.5;

  void validate() const {
    require(std::isfinite(window_s) && window_s > 0.0, ErrorCode::kInvalidConfig,
            "window_s must be positive");
    require(std::isfinite(stride_s) && stride_s > 0.0, ErrorCode::kInvalidConfig,
            "stride_s must be positive");
    require(stride_s <= window_s, ErrorCode::kInvalidConfig, "stride_s must not exceed window_s");
  }

  friend bool operator==(const WindowConfig&, const WindowConfig&) = default;
};

inline void to_json(nlohmann::json& j, const WindowConfig& c) {
  j = nlohmann::json{{"window_s", c.window_s}, {"stride_s", c.stride_s}};
}
inline void from_json(const nlohmann::json& j, WindowConfig& c) {
  c.window_s = j.value("window_s", 10.0);
  c.stride_s = j.value("stride_s", 0.5);
}

struct AudioTrack {
  double sample_rate = 16000.0;
  std::vector<float> samples;
};

/// Raw frames stored frame-major as height x width x channels floats.
struct FrameTrack {
  double fps = 0.0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 3;
  std::vector<float> pixels;

  std::size_t frame_size() const { return height * width * channels; }
  std::size_t frame_count() const { return frame_size() == 0 ? 0 : pixels.size() / frame_size(); }
  std::span<const float> frame(std::size_t j) const {
    return std::span<const float>(pixels).subspan(j * frame_size(), frame_size());
  }
};

struct TimedToken {
  std::string token;
  double onset_s = 0.0;
  double offset_s = 0.0;

  friend bool operator==(const TimedToken&, const TimedToken&) = default;
};

inline void to_json(nlohmann::json& j, const TimedToken& t) {
  j = nlohmann::json{{"token", t.token}, {"onset_s", t.onset_s}, {"offset_s", t.offset_s}};
}
inline void from_json(const nlohmann::json& j, TimedToken& t) {
  t.token = j.at("token").get<std::string>();
  t.onset_s = j.at("onset_s").get<double>();
  t.offset_s = j.at("offset_s").get<double>();
}

/// A full recorded conversation with whichever modalities are available.
struct MediaTimeline {
  std::string source_id;
  double duration_s = 0.0;
  std::optional<AudioTrack> audio;
  std::optional<FrameTrack> video;
  std::optional<std::vector<TimedToken>> transcript;

  void validate() const {
    require(std::isfinite(duration_s) && duration_s >= 0.0, ErrorCode::kInvalidConfig,
            "timeline duration must be nonnegative");
    if (audio) {
      require(audio->sample_rate > 0.0, ErrorCode::kInvalidConfig, "audio sample rate must be positive");
      require(audio->samples.size() >= static_cast<std::size_t>(std::floor(duration_s * audio->sample_rate)),
              ErrorCode::kInvalidConfig, "audio track shorter than timeline " + source_id);
    }
    if (video) {
      require(video->fps > 0.0 && video->frame_size() > 0, ErrorCode::kInvalidConfig,
              "video track needs positive fps and frame size");
      require(video->frame_count() >= static_cast<std::size_t>(std::floor(duration_s * video->fps)),
              ErrorCode::kInvalidConfig, "video track shorter than timeline " + source_id);
    }
    if (transcript) {
      double last = 0.0;
      for (const auto& t : *transcript) {
        require(t.onset_s >= last, ErrorCode::kInvalidConfig, "transcript onsets must be nondecreasing");
        require(t.onset_s <= duration_s, ErrorCode::kInvalidConfig, "transcript token beyond duration");
        last = t.onset_s;
      }
    }
  }
};

/// Half-open index range [first, last).
struct IndexRange {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last > first ? last - first : 0; }
  bool empty() const { return size() == 0; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

/// Indices k < count whose timestamp k / rate lies in the closed interval
/// [t0, t1].
inline IndexRange timestamp_range(double rate, double t0, double t1, std::size_t count) {
  auto time_of = [rate](double k) { return k / rate; };
  double first = std::max(0.0, std::ceil(t0 * rate));
  while (first > 0.0 && time_of(first - 1.0) >= t0) first -= 1.0;
  while (time_of(first) < t0) first += 1.0;
  double last = std::floor(t1 * rate);
  while (time_of(last + 1.0) <= t1) last += 1.0;
  while (last >= 0.0 && time_of(last) > t1) last -= 1.0;
  if (last < first) return {0, 0};
  const auto lo = static_cast<std::size_t>(first);
  const auto hi = std::min(count, static_cast<std::size_t>(last) + 1);
  if (lo >= hi) return {0, 0};
  return {lo, hi};
}

/// End time of the i-th window (1-based), computed directly from i.
inline double clip_end_time(std::size_t i, const WindowConfig& cfg) {
  require(i >= 1, ErrorCode::kInvalidIndex, "clip index is 1-based");
  return cfg.window_s + static_cast<double>(i - 1) * cfg.stride_s;
}

/// Number of i >= 1 with clip_end_time(i) <= duration_s.
inline std::size_t window_count(double duration_s, const WindowConfig& cfg) {
  require(duration_s >= 0.0, ErrorCode::kInvalidConfig, "duration must be nonnegative");
  if (duration_s < cfg.window_s) return 0;
  auto n = static_cast<std::size_t>(std::floor((duration_s - cfg.window_s) / cfg.stride_s)) + 1;
  // The closed form can be off by one ulp-sized step at exact boundaries.
  while (clip_end_time(n + 1, cfg) <= duration_s) ++n;
  while (n > 0 && clip_end_time(n, cfg) > duration_s) --n;
  return n;
}

/// One window of a timeline. Holds non-owning views into the source, which
/// must outlive the clip.
struct Clip {
  const MediaTimeline* source = nullptr;
  std::size_t index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  IndexRange audio_samples;
  IndexRange video_frames;
  IndexRange transcript_tokens;

  const std::string& source_id() const { return source->source_id; }
  double duration() const { return t_end - t_start; }

  bool has_audio() const { return source->audio.has_value(); }
  bool has_video() const { return source->video.has_value(); }
  bool has_transcript() const { return source->transcript.has_value(); }

  std::span<const float> audio() const {
    if (!has_audio()) return {};
    return std::span<const float>(source->audio->samples)
        .subspan(audio_samples.first, audio_samples.size());
  }

  std::span<const TimedToken> tokens() const {
    if (!has_transcript()) return {};
    return std::span<const TimedToken>(*source->transcript)
        .subspan(transcript_tokens.first, transcript_tokens.size());
  }
};

/// Crops window i: audio samples and video frames whose timestamps fall in
/// [t_i - window_s, t_i], and transcript tokens whose onset does.
inline Clip extract_clip(const MediaTimeline& timeline, std::size_t i, const WindowConfig& cfg) {
  const double t_end = clip_end_time(i, cfg);
  require(t_end <= timeline.duration_s, ErrorCode::kWindowOutOfBounds,
          "window " + std::to_string(i) + " ends at " + std::to_string(t_end) +
              " beyond duration of " + timeline.source_id);
  Clip clip;
  clip.source = &timeline;
  clip.index = i;
  clip.t_end = t_end;
  clip.t_start = t_end - cfg.window_s;
  if (timeline.audio) {
    clip.audio_samples = timestamp_range(timeline.audio->sample_rate, clip.t_start, clip.t_end,
                                         timeline.audio->samples.size());
  }
  if (timeline.video) {
    clip.video_frames = timestamp_range(timeline.video->fps, clip.t_start, clip.t_end,
                                        timeline.video->frame_count());
  }
  if (timeline.transcript) {
    const auto& tokens = *timeline.transcript;
    auto lo = std::lower_bound(tokens.begin(), tokens.end(), clip.t_start,
                               [](const TimedToken& t, double v) { return t.onset_s < v; });
    auto hi = std::upper_bound(tokens.begin(), tokens.end(), clip.t_end,
                               [](double v, const TimedToken& t) { return v < t.onset_s; });
    clip.transcript_tokens = {static_cast<std::size_t>(lo - tokens.begin()),
                              static_cast<std::size_t>(hi - tokens.begin())};
  }
  return clip;
}

/// Lazy sequence of every valid window in increasing index order.
inline auto iter_clips(const MediaTimeline& timeline, const WindowConfig& cfg) {
  const std::size_t n = window_count(timeline.duration_s, cfg);
  return std::views::iota(std::size_t{1}, n + 1) |
         std::views::transform([&timeline, cfg](std::size_t i) { return extract_clip(timeline, i, cfg); });
}

/// One JSON line of a timeline manifest. Paths are relative to the manifest
/// directory; missing modalities are null.
struct TimelineManifestEntry {
  std::string source_id;
  double duration_s = 0.0;
  std::optional<std::string> audio_path;
  std::optional<std::string> video_feat_path;
  std::optional<double> video_fps;
  std::optional<std::string> diarization_path;
  std::optional<std::string> listener_id;
  std::optional<std::vector<TimedToken>> transcript;
};

inline void to_json(nlohmann::json& j, const TimelineManifestEntry& e) {
  auto opt = [](const auto& v) -> nlohmann::json { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  j = nlohmann::json{{"source_id", e.source_id},
                     {"duration_s", e.duration_s},
                     {"audio_path", opt(e.audio_path)},
                     {"video_feat_path", opt(e.video_feat_path)},
                     {"video_fps", opt(e.video_fps)},
                     {"diarization_path", opt(e.diarization_path)},
                     {"listener_id", opt(e.listener_id)},
                     {"transcript", opt(e.transcript)}};
}

inline void from_json(const nlohmann::json& j, TimelineManifestEntry& e) {
  auto opt_string = [&j](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
  };
  e.source_id = j.at("source_id").get<std::string>();
  e.duration_s = j.at("duration_s").get<double>();
  e.audio_path = opt_string("audio_path");
  e.video_feat_path = opt_string("video_feat_path");
  e.diarization_path = opt_string("diarization_path");
  e.listener_id = opt_string("listener_id");
  if (j.contains("video_fps") && !j.at("video_fps").is_null()) e.video_fps = j.at("video_fps").get<double>();
  if (j.contains("transcript") && !j.at("transcript").is_null()) {
    e.transcript = j.at("transcript").get<std::vector<TimedToken>>();
  }
}

}  // namespace mmw2s
