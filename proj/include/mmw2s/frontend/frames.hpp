#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmw2s/common/binary_io.hpp"
#include "mmw2s/timeline.hpp"

namespace mmw2s {

/// Frames resampled for one clip, frame-major h x w x channels, values in [0, 1].
struct FrameSequence {
  double fps = 0.0;
  std::size_t count = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 3;
  std::vector<float> pixels;
  /// Source frame index used for each output frame.
  std::vector<std::size_t> source_indices;

  std::size_t frame_size() const { return height * width * channels; }
  std::span<const float> frame(std::size_t k) const {
    return std::span<const float>(pixels).subspan(k * frame_size(), frame_size());
  }
};

inline std::size_t sampled_frame_count(double clip_duration_s, double fps) {
  return static_cast<std::size_t>(std::floor(clip_duration_s * fps + 1e-9));
}

/// Uniform timestamps t_start + k / fps, nearest source frame clamped into
/// `range` (absolute indices). `frame_at(j)` returns source frame j.
template <class FrameAt>
FrameSequence sample_frames_in(double t_start, double duration, double fps, const FrameTrack& shape, IndexRange range,
                               FrameAt&& frame_at) {
  FrameSequence out;
  out.fps = fps;
  out.count = sampled_frame_count(duration, fps);
  out.height = shape.height;
  out.width = shape.width;
  out.channels = shape.channels;
  out.pixels.reserve(out.count * out.frame_size());
  out.source_indices.reserve(out.count);
  for (std::size_t k = 0; k < out.count; ++k) {
    const double t = t_start + static_cast<double>(k) / fps;
    const double nearest = std::round(t * shape.fps);
    auto index = static_cast<std::size_t>(std::max(0.0, nearest));
    index = std::clamp(index, range.first, range.last - 1);
    out.source_indices.push_back(index);
    const std::span<const float> frame = frame_at(index);
    out.pixels.insert(out.pixels.end(), frame.begin(), frame.end());
  }
  return out;
}

/// Returns nullopt when the timeline has no video track or the clip holds
/// no frames.
inline std::optional<FrameSequence> sample_frames(const Clip& clip, double fps) {
  require(fps > 0.0, ErrorCode::kInvalidConfig, "sampling fps must be positive");
  if (!clip.has_video() || clip.video_frames.empty()) return std::nullopt;
  const FrameTrack& track = *clip.source->video;
  return sample_frames_in(clip.t_start, clip.duration(), fps, track, clip.video_frames,
                          [&track](std::size_t j) { return track.frame(j); });
}

inline constexpr std::string_view kFeatureMagic = "MMW2SF01";

/// Raw float32 tensor file: magic, u32 rank, u32 dims, row-major payload.
struct FeatureArray {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};

inline std::string encode_feature_file(const FeatureArray& array) {
  std::size_t expected = 1;
  for (auto d : array.dims) expected *= d;
  require(expected == array.values.size(), ErrorCode::kShapeMismatch, "feature dims disagree with payload");
  std::string out;
  binary::put_bytes(out, kFeatureMagic);
  binary::put_u32(out, static_cast<std::uint32_t>(array.dims.size()));
  for (auto d : array.dims) binary::put_u32(out, d);
  for (float v : array.values) binary::put_f32(out, v);
  return out;
}

inline FeatureArray decode_feature_file(std::string_view bytes) {
  binary::Reader r(bytes);
  require(r.remaining() >= 8 && r.bytes(8) == kFeatureMagic, ErrorCode::kFormat, "bad feature file magic");
  FeatureArray out;
  const std::uint32_t rank = r.u32();
  std::size_t total = 1;
  for (std::uint32_t k = 0; k < rank; ++k) {
    out.dims.push_back(r.u32());
    total *= out.dims.back();
  }
  require(r.remaining() == total * 4, ErrorCode::kFormat, "feature payload size mismatch");
  out.values.resize(total);
  for (auto& v : out.values) v = r.f32();
  return out;
}

inline void write_frame_track(const std::string& path, const FrameTrack& track) {
  FeatureArray a;
  a.dims = {static_cast<std::uint32_t>(track.frame_count()), static_cast<std::uint32_t>(track.height),
            static_cast<std::uint32_t>(track.width), static_cast<std::uint32_t>(track.channels)};
  a.values = track.pixels;
  binary::write_file(path, encode_feature_file(a));
}

inline FrameTrack read_frame_track(const std::string& path, double fps) {
  FeatureArray a = decode_feature_file(binary::read_file(path));
  require(a.dims.size() == 4, ErrorCode::kFormat, "frame track file must be rank 4 (f, h, w, c)");
  FrameTrack track;
  track.fps = fps;
  track.height = a.dims[1];
  track.width = a.dims[2];
  track.channels = a.dims[3];
  track.pixels = std::move(a.values);
  return track;
}

}  // namespace mmw2s
