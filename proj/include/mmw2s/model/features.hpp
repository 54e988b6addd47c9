#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mmw2s/frontend/frames.hpp"
#include "mmw2s/frontend/log_mel.hpp"
#include "mmw2s/frontend/tokenizer.hpp"
#include "mmw2s/model/config.hpp"
#include "mmw2s/model/params.hpp"
#include "mmw2s/timeline.hpp"

namespace mmw2s {

/// Model inputs for one clip. A missing modality is nullopt.
struct ClipFeatures {
  std::optional<Mat> log_mel;        // n_frames x n_mels
  std::optional<Mat> video_patches;  // (frames * k) x patch_dim
  std::optional<std::vector<std::uint32_t>> text_ids;

  bool has(Modality m) const {
    switch (m) {
      case Modality::kVideo: return video_patches.has_value();
      case Modality::kAudio: return log_mel.has_value();
      case Modality::kText: return text_ids.has_value();
    }
    return false;
  }
};

/// Splits each frame into a g x g grid of patches and mean-pools every patch
/// to pool x pool cells per channel. Row f * k + (py * g + px).
inline Mat video_patch_features(const FrameSequence& frames, const ModelConfig& cfg) {
  const std::size_t g = cfg.video_grid();
  const std::size_t pool = cfg.video_pool;
  const std::size_t ch = frames.channels;
  require(ch == cfg.video_channels, ErrorCode::kIncompatible, "frame channel count does not match the model");
  require(frames.height >= g * pool && frames.width >= g * pool, ErrorCode::kInvalidConfig,
          "frames are too small for the patch grid");
  Mat out = Mat::Zero(static_cast<Eigen::Index>(frames.count * g * g), static_cast<Eigen::Index>(cfg.video_patch_dim()));
  const std::size_t cells = g * pool;
  for (std::size_t f = 0; f < frames.count; ++f) {
    const auto px = frames.frame(f);
    for (std::size_t cy = 0; cy < cells; ++cy) {
      const std::size_t y0 = cy * frames.height / cells, y1 = (cy + 1) * frames.height / cells;
      for (std::size_t cx = 0; cx < cells; ++cx) {
        const std::size_t x0 = cx * frames.width / cells, x1 = (cx + 1) * frames.width / cells;
        const auto row = static_cast<Eigen::Index>(f * g * g + (cy / pool) * g + cx / pool);
        const std::size_t cell_in_patch = (cy % pool) * pool + cx % pool;
        const double inv = 1.0 / static_cast<double>((y1 - y0) * (x1 - x0));
        for (std::size_t c = 0; c < ch; ++c) {
          double sum = 0.0;
          for (std::size_t y = y0; y < y1; ++y) {
            for (std::size_t x = x0; x < x1; ++x) sum += px[(y * frames.width + x) * ch + c];
          }
          out(row, static_cast<Eigen::Index>(cell_in_patch * ch + c)) = sum * inv;
        }
      }
    }
  }
  return out;
}

inline Mat to_matrix(const LogMelSpectrogram& spec) {
  Mat m(static_cast<Eigen::Index>(spec.n_frames), static_cast<Eigen::Index>(spec.n_mels));
  for (std::size_t r = 0; r < spec.n_frames; ++r) {
    for (std::size_t c = 0; c < spec.n_mels; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = spec.at(r, c);
  }
  return m;
}

/// Frontend on raw window contents. Audio shorter than one analysis frame
/// counts as missing.
inline ClipFeatures features_from_parts(std::optional<std::span<const float>> audio, double sample_rate,
                                        const std::optional<FrameSequence>& frames,
                                        std::optional<std::span<const TimedToken>> words, const FrontendConfig& fe,
                                        const ModelConfig& model, const Vocabulary& vocab = default_vocabulary()) {
  ClipFeatures out;
  if (audio && audio->size() >= fe.mel.frame_length()) {
    out.log_mel = to_matrix(compute_log_mel(*audio, sample_rate, fe.mel));
  }
  if (frames && frames->count > 0) out.video_patches = video_patch_features(*frames, model);
  if (words) out.text_ids = tokenize_timed(*words, vocab, fe.max_text_tokens).ids;
  return out;
}

inline ClipFeatures extract_features(const Clip& clip, const FrontendConfig& fe, const ModelConfig& model,
                                     const Vocabulary& vocab = default_vocabulary()) {
  std::optional<std::span<const float>> audio;
  double rate = fe.mel.sample_rate;
  if (clip.has_audio()) {
    audio = clip.audio();
    rate = clip.source->audio->sample_rate;
  }
  std::optional<std::span<const TimedToken>> words;
  if (clip.has_transcript()) words = clip.tokens();
  return features_from_parts(audio, rate, sample_frames(clip, fe.video_fps), words, fe, model, vocab);
}

}  // namespace mmw2s
