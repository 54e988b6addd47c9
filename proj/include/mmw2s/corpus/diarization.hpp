#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmw2s/common/binary_io.hpp"
#include "mmw2s/common/error.hpp"
#include "mmw2s/labels.hpp"

namespace mmw2s {

struct DiarizationEvent {
  std::string speaker_id;
  double onset_s = 0.0;
  double offset_s = 0.0;
  std::string text;

  double duration() const { return offset_s - onset_s; }
  friend bool operator==(const DiarizationEvent&, const DiarizationEvent&) = default;
};

/// Thresholds for turning a diarization track into per-window actions.
struct LabelRuleConfig {
  double brief_max_s = 2.0;
  double horizon_s = 0.5;
  double resume_gap_s = 1.0;

  void validate() const {
    require(brief_max_s > 0.0 && horizon_s > 0.0 && resume_gap_s > 0.0, ErrorCode::kInvalidConfig,
            "label rule thresholds must be positive");
  }
};

inline void to_json(nlohmann::json& j, const LabelRuleConfig& c) {
  j = nlohmann::json{{"brief_max_s", c.brief_max_s}, {"horizon_s", c.horizon_s}, {"resume_gap_s", c.resume_gap_s}};
}
inline void from_json(const nlohmann::json& j, LabelRuleConfig& c) {
  LabelRuleConfig d;
  c.brief_max_s = j.value("brief_max_s", d.brief_max_s);
  c.horizon_s = j.value("horizon_s", d.horizon_s);
  c.resume_gap_s = j.value("resume_gap_s", d.resume_gap_s);
}

/// Events sorted by onset, validated as a two-party track.
class DiarizationTrack {
 public:
  DiarizationTrack() = default;

  explicit DiarizationTrack(std::vector<DiarizationEvent> events) : events_(std::move(events)) {
    std::set<std::string> speakers;
    for (const auto& e : events_) {
      require(e.offset_s > e.onset_s, ErrorCode::kFormat,
              "diarization event must have offset > onset (speaker " + e.speaker_id + ")");
      speakers.insert(e.speaker_id);
    }
    require(speakers.size() <= 2, ErrorCode::kNonDyadic,
            "diarization track has " + std::to_string(speakers.size()) + " speakers; expected a dyad");
    speakers_.assign(speakers.begin(), speakers.end());
    std::stable_sort(events_.begin(), events_.end(),
                     [](const auto& a, const auto& b) { return a.onset_s < b.onset_s; });
    max_duration_ = 0.0;
    for (const auto& e : events_) max_duration_ = std::max(max_duration_, e.duration());
  }

  const std::vector<DiarizationEvent>& events() const { return events_; }
  const std::vector<std::string>& speakers() const { return speakers_; }
  double longest_event() const { return max_duration_; }

 private:
  std::vector<DiarizationEvent> events_;
  std::vector<std::string> speakers_;
  double max_duration_ = 0.0;
};

struct ActionDecision {
  ListenerAction action = ListenerAction::kSilence;
  /// The listener utterance the decision anchors on, when any.
  std::optional<DiarizationEvent> utterance;
};

/// Labels the decision point t_end by the listener's next move. The anchor is
/// the earliest listener utterance with onset in (t_end, t_end + horizon].
/// It is a reaction when brief and the other party is either speaking at its
/// onset (onset <= t < offset) or starts a new utterance with onset in
/// (U.onset, U.offset + resume_gap]; otherwise the listener takes the turn.
inline ActionDecision derive_action(const DiarizationTrack& track, const std::string& listener_id, double t_end,
                                    const LabelRuleConfig& rules) {
  const auto& events = track.events();
  auto it = std::upper_bound(events.begin(), events.end(), t_end,
                             [](double t, const DiarizationEvent& e) { return t < e.onset_s; });
  const DiarizationEvent* anchor = nullptr;
  for (; it != events.end() && it->onset_s <= t_end + rules.horizon_s; ++it) {
    if (it->speaker_id == listener_id) {
      anchor = &*it;
      break;
    }
  }
  if (anchor == nullptr) return {};

  ActionDecision out;
  out.utterance = *anchor;
  out.action = ListenerAction::kFullResponse;
  if (anchor->duration() > rules.brief_max_s) return out;

  // Other-speaker events overlapping U.onset must start within the longest
  // event duration before it.
  const double search_from = anchor->onset_s - track.longest_event();
  auto lo = std::lower_bound(events.begin(), events.end(), search_from,
                             [](const DiarizationEvent& e, double t) { return e.onset_s < t; });
  const double resume_limit = anchor->offset_s + rules.resume_gap_s;
  for (auto e = lo; e != events.end() && e->onset_s <= resume_limit; ++e) {
    if (e->speaker_id == listener_id) continue;
    const bool active_at_onset = e->onset_s <= anchor->onset_s && anchor->onset_s < e->offset_s;
    const bool resumes = e->onset_s > anchor->onset_s;
    if (active_at_onset || resumes) {
      out.action = ListenerAction::kReaction;
      return out;
    }
  }
  return out;
}

inline std::vector<DiarizationEvent> parse_diarization_csv(std::string_view text) {
  std::vector<DiarizationEvent> out;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      require(line == "speaker_id,onset_s,offset_s,text", ErrorCode::kFormat,
              "diarization CSV header must be speaker_id,onset_s,offset_s,text");
      header = false;
      continue;
    }
    // speaker,onset,offset,text where text may be double-quoted.
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
      const char c = line[k];
      if (quoted) {
        if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
          field.push_back('"');
          ++k;
        } else if (c == '"') {
          quoted = false;
        } else {
          field.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else {
        field.push_back(c);
      }
    }
    fields.push_back(std::move(field));
    require(fields.size() == 4, ErrorCode::kFormat, "diarization CSV line " + std::to_string(line_no) + " needs 4 fields");
    DiarizationEvent e;
    e.speaker_id = fields[0];
    try {
      e.onset_s = std::stod(fields[1]);
      e.offset_s = std::stod(fields[2]);
    } catch (const std::exception&) {
      fail(ErrorCode::kFormat, "diarization CSV line " + std::to_string(line_no) + " has bad times");
    }
    e.text = fields[3];
    out.push_back(std::move(e));
  }
  return out;
}

inline std::string format_diarization_csv(const std::vector<DiarizationEvent>& events) {
  std::ostringstream out;
  out.precision(17);
  out << "speaker_id,onset_s,offset_s,text\n";
  for (const auto& e : events) {
    std::string text = e.text;
    std::string quoted = "\"";
    for (char c : text) {
      if (c == '"') quoted += "\"\"";
      else quoted.push_back(c);
    }
    quoted += "\"";
    out << e.speaker_id << ',' << e.onset_s << ',' << e.offset_s << ',' << quoted << '\n';
  }
  return out.str();
}

inline std::vector<DiarizationEvent> read_diarization_csv(const std::string& path) {
  return parse_diarization_csv(binary::read_file(path));
}

}  // namespace mmw2s
