#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmw2s/corpus/diarization.hpp"
#include "mmw2s/labels.hpp"
#include "mmw2s/timeline.hpp"

namespace mmw2s {

/// A listener event the synthesizer planted, keyed by its decision point.
struct PlantedEvent {
  double t_end = 0.0;
  ResponseLabel label = ResponseLabel::kSilence;
};

/// One conversation: media, diarization, and who plays the listener role.
struct CorpusSource {
  MediaTimeline timeline;
  DiarizationTrack track;
  std::string listener_id = "B";
  std::vector<PlantedEvent> planted;
  // On-disk locations relative to the corpus directory, when persisted.
  std::optional<std::string> audio_path;
  std::optional<std::string> video_feat_path;
  std::optional<std::string> diarization_path;

  const std::string& id() const { return timeline.source_id; }
};

struct Corpus {
  std::vector<CorpusSource> sources;

  const CorpusSource* find(const std::string& source_id) const {
    for (const auto& s : sources) {
      if (s.id() == source_id) return &s;
    }
    return nullptr;
  }
};

}  // namespace mmw2s
