#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmw2s/common/binary_io.hpp"
#include "mmw2s/corpus/corpus.hpp"
#include "mmw2s/frontend/frames.hpp"
#include "mmw2s/frontend/wav.hpp"

namespace mmw2s {

inline constexpr const char* kTimelineManifestName = "timelines.jsonl";

/// Writes sources/<id>.{wav,vfeat,diar.csv} plus timelines.jsonl. Paths in
/// the manifest are relative to dir.
inline void save_corpus(const std::string& dir, Corpus& corpus) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "sources", ec);
  require(!ec, ErrorCode::kIo, "cannot create corpus directory " + dir + ": " + ec.message());
  std::string lines;
  for (auto& s : corpus.sources) {
    TimelineManifestEntry e;
    e.source_id = s.id();
    e.duration_s = s.timeline.duration_s;
    e.listener_id = s.listener_id;
    if (s.timeline.audio) {
      s.audio_path = "sources/" + s.id() + ".wav";
      write_wav((fs::path(dir) / *s.audio_path).string(),
                AudioBuffer{s.timeline.audio->sample_rate, s.timeline.audio->samples});
      e.audio_path = s.audio_path;
    }
    if (s.timeline.video) {
      s.video_feat_path = "sources/" + s.id() + ".vfeat";
      write_frame_track((fs::path(dir) / *s.video_feat_path).string(), *s.timeline.video);
      e.video_feat_path = s.video_feat_path;
      e.video_fps = s.timeline.video->fps;
    }
    s.diarization_path = "sources/" + s.id() + ".diar.csv";
    binary::write_file((fs::path(dir) / *s.diarization_path).string(), format_diarization_csv(s.track.events()));
    e.diarization_path = s.diarization_path;
    e.transcript = s.timeline.transcript;
    nlohmann::json j = e;
    nlohmann::json planted = nlohmann::json::array();
    for (const auto& p : s.planted) planted.push_back({{"t_end", p.t_end}, {"label", label_name(p.label)}});
    j["planted"] = planted;
    lines += j.dump() + "\n";
  }
  binary::write_file((fs::path(dir) / kTimelineManifestName).string(), lines);
}

inline CorpusSource load_source(const std::string& dir, const nlohmann::json& j) {
  namespace fs = std::filesystem;
  const auto e = j.get<TimelineManifestEntry>();
  CorpusSource s;
  s.timeline.source_id = e.source_id;
  s.timeline.duration_s = e.duration_s;
  s.listener_id = e.listener_id.value_or("B");
  s.audio_path = e.audio_path;
  s.video_feat_path = e.video_feat_path;
  s.diarization_path = e.diarization_path;
  if (e.audio_path) {
    AudioBuffer a = read_wav((fs::path(dir) / *e.audio_path).string());
    s.timeline.audio = AudioTrack{a.sample_rate, std::move(a.samples)};
  }
  if (e.video_feat_path) {
    require(e.video_fps.has_value(), ErrorCode::kFormat, "source " + e.source_id + " has video but no video_fps");
    s.timeline.video = read_frame_track((fs::path(dir) / *e.video_feat_path).string(), *e.video_fps);
  }
  s.timeline.transcript = e.transcript;
  if (e.diarization_path) {
    s.track = DiarizationTrack(read_diarization_csv((fs::path(dir) / *e.diarization_path).string()));
  }
  if (j.contains("planted")) {
    for (const auto& p : j.at("planted")) {
      s.planted.push_back({p.at("t_end").get<double>(), label_from_name(p.at("label").get<std::string>())});
    }
  }
  s.timeline.validate();
  return s;
}

inline Corpus load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string text = binary::read_file((fs::path(dir) / kTimelineManifestName).string());
  Corpus corpus;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCode::kFormat, std::string(kTimelineManifestName) + " line " + std::to_string(line_no) + ": " +
                                   ex.what());
    }
    corpus.sources.push_back(load_source(dir, j));
  }
  return corpus;
}

}  // namespace mmw2s
