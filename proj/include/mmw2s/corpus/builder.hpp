#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "mmw2s/common/rng.hpp"
#include "mmw2s/corpus/corpus.hpp"
#include "mmw2s/corpus/reaction_rules.hpp"

namespace mmw2s {

enum class Split : std::uint8_t { kTrain, kTest };

inline const char* split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

inline Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  fail(ErrorCode::kFormat, "unknown split '" + std::string(name) + "'");
}

/// Label of window i of a source: the listener action, subtyped when it is a
/// reaction.
inline ResponseLabel label_window(const CorpusSource& source, std::size_t i, const WindowConfig& window,
                                  const LabelRuleConfig& rules, const ReactionCategorizer& categorizer) {
  const double t_end = clip_end_time(i, window);
  const ActionDecision d = derive_action(source.track, source.listener_id, t_end, rules);
  switch (d.action) {
    case ListenerAction::kSilence:
      return ResponseLabel::kSilence;
    case ListenerAction::kFullResponse:
      return ResponseLabel::kFullResponse;
    case ListenerAction::kReaction:
      break;
  }
  return categorizer.categorize(d.utterance ? d.utterance->text : std::string()).label;
}

struct FullVideoLabels {
  std::string source_id;
  WindowConfig window;
  /// labels[i - 1] is the label of window i.
  std::vector<ResponseLabel> labels;
};

inline FullVideoLabels label_source(const CorpusSource& source, const WindowConfig& window,
                                    const LabelRuleConfig& rules, const ReactionCategorizer& categorizer) {
  FullVideoLabels out{source.id(), window, {}};
  const std::size_t n = window_count(source.timeline.duration_s, window);
  out.labels.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) out.labels.push_back(label_window(source, i, window, rules, categorizer));
  return out;
}

inline std::vector<FullVideoLabels> build_full_videos(const Corpus& corpus, const WindowConfig& window,
                                                      const LabelRuleConfig& rules = {},
                                                      const ReactionCategorizer& categorizer = RuleTableCategorizer()) {
  window.validate();
  std::vector<FullVideoLabels> out;
  out.reserve(corpus.sources.size());
  for (const auto& s : corpus.sources) out.push_back(label_source(s, window, rules, categorizer));
  return out;
}

/// How many clips to draw, grouped into pools of labels. Each group samples
/// without replacement from the union of its labels.
struct QuotaGroup {
  std::string name;
  std::vector<ResponseLabel> labels;
  std::size_t count = 0;
};

struct ClipQuota {
  std::vector<QuotaGroup> groups;

  static ClipQuota by_category(std::size_t reaction, std::size_t full_response, std::size_t silence) {
    std::vector<ResponseLabel> reactions;
    for (std::size_t k = 0; k < kNumReactions; ++k) reactions.push_back(label_at(k));
    return ClipQuota{{{"reaction", reactions, reaction},
                      {"full_response", {ResponseLabel::kFullResponse}, full_response},
                      {"silence", {ResponseLabel::kSilence}, silence}}};
  }

  static ClipQuota by_label(const std::array<std::size_t, kNumLabels>& counts) {
    ClipQuota q;
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      q.groups.push_back({std::string(label_name(label_at(k))), {label_at(k)}, counts[k]});
    }
    return q;
  }

  static ClipQuota full_scale() { return by_category(4393, 2000, 2000); }

  std::size_t total() const {
    std::size_t n = 0;
    for (const auto& g : groups) n += g.count;
    return n;
  }
};

inline void to_json(nlohmann::json& j, const QuotaGroup& g) {
  std::vector<std::string> names;
  for (auto l : g.labels) names.emplace_back(label_name(l));
  j = nlohmann::json{{"name", g.name}, {"labels", names}, {"count", g.count}};
}
inline void from_json(const nlohmann::json& j, QuotaGroup& g) {
  g.name = j.at("name").get<std::string>();
  g.labels.clear();
  for (const auto& n : j.at("labels")) g.labels.push_back(label_from_name(n.get<std::string>()));
  g.count = j.at("count").get<std::size_t>();
}

struct LabeledClipRecord {
  std::string source_id;
  std::size_t i = 0;
  double t_end = 0.0;
  ResponseLabel label = ResponseLabel::kSilence;
  Split split = Split::kTrain;

  bool operator==(const LabeledClipRecord&) const = default;
};

inline void to_json(nlohmann::json& j, const LabeledClipRecord& r) {
  j = nlohmann::json{{"source_id", r.source_id},
                     {"i", r.i},
                     {"t_end", r.t_end},
                     {"label", label_name(r.label)},
                     {"split", split_name(r.split)}};
}
inline void from_json(const nlohmann::json& j, LabeledClipRecord& r) {
  r.source_id = j.at("source_id").get<std::string>();
  r.i = j.at("i").get<std::size_t>();
  r.t_end = j.at("t_end").get<double>();
  r.label = label_from_name(j.at("label").get<std::string>());
  r.split = parse_split(j.at("split").get<std::string>());
}

struct CorpusManifest {
  WindowConfig window;
  std::vector<LabeledClipRecord> records;
  std::array<std::size_t, kNumLabels> counts{};
  std::uint64_t seed = 0;
  double split_ratio = 0.7;
  ClipQuota quota;

  std::array<std::size_t, kNumLabels> recount() const {
    std::array<std::size_t, kNumLabels> c{};
    for (const auto& r : records) ++c[index_of(r.label)];
    return c;
  }

  std::vector<LabeledClipRecord> subset(Split s) const {
    std::vector<LabeledClipRecord> out;
    for (const auto& r : records) {
      if (r.split == s) out.push_back(r);
    }
    return out;
  }

  void validate() const {
    require(recount() == counts, ErrorCode::kFormat, "manifest counts do not match its records");
    std::set<std::string> train, test;
    for (const auto& r : records) (r.split == Split::kTrain ? train : test).insert(r.source_id);
    for (const auto& s : train) {
      require(!test.count(s), ErrorCode::kFormat, "source " + s + " appears in both splits");
    }
  }
};

inline nlohmann::json manifest_meta(const CorpusManifest& m) {
  nlohmann::json counts = nlohmann::json::object();
  for (std::size_t k = 0; k < kNumLabels; ++k) counts[std::string(label_name(label_at(k)))] = m.counts[k];
  return nlohmann::json{{"window", m.window},   {"counts", counts},
                        {"seed", m.seed},       {"split_ratio", m.split_ratio},
                        {"quota", m.quota.groups}, {"n_records", m.records.size()}};
}

inline CorpusManifest manifest_from_meta(const nlohmann::json& meta, std::vector<LabeledClipRecord> records) {
  CorpusManifest m;
  m.window = meta.at("window").get<WindowConfig>();
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    m.counts[k] = meta.at("counts").at(std::string(label_name(label_at(k)))).get<std::size_t>();
  }
  m.seed = meta.at("seed").get<std::uint64_t>();
  m.split_ratio = meta.at("split_ratio").get<double>();
  m.quota.groups = meta.at("quota").get<std::vector<QuotaGroup>>();
  m.records = std::move(records);
  m.validate();
  return m;
}

/// One record per line. When a corpus is given, each line also carries the
/// timeline fields of its source so the file stands on its own.
inline std::string records_to_jsonl(const std::vector<LabeledClipRecord>& records, const Corpus* corpus = nullptr) {
  std::ostringstream out;
  for (const auto& r : records) {
    nlohmann::json j = r;
    if (corpus) {
      if (const CorpusSource* s = corpus->find(r.source_id)) {
        j["duration_s"] = s->timeline.duration_s;
        j["audio_path"] = s->audio_path ? nlohmann::json(*s->audio_path) : nlohmann::json(nullptr);
        j["video_feat_path"] = s->video_feat_path ? nlohmann::json(*s->video_feat_path) : nlohmann::json(nullptr);
        j["diarization_path"] = s->diarization_path ? nlohmann::json(*s->diarization_path) : nlohmann::json(nullptr);
      }
    }
    out << j.dump() << '\n';
  }
  return out.str();
}

inline std::vector<LabeledClipRecord> records_from_jsonl(std::string_view text) {
  std::vector<LabeledClipRecord> out;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<LabeledClipRecord>());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kFormat, "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

/// Samples labeled windows per quota group and splits by source. Sources are
/// shuffled with the seed and the first round(split_ratio * n) go to train.
inline CorpusManifest build_short_clips(const Corpus& corpus, const ClipQuota& quota, double split_ratio,
                                        std::uint64_t seed, const WindowConfig& window,
                                        const LabelRuleConfig& rules = {},
                                        const ReactionCategorizer& categorizer = RuleTableCategorizer()) {
  window.validate();
  require(split_ratio >= 0.0 && split_ratio <= 1.0, ErrorCode::kInvalidConfig, "split ratio must be in [0, 1]");

  struct Candidate {
    std::size_t source;
    std::size_t i;
  };
  std::array<std::vector<Candidate>, kNumLabels> by_label;
  for (std::size_t s = 0; s < corpus.sources.size(); ++s) {
    const auto labels = label_source(corpus.sources[s], window, rules, categorizer);
    for (std::size_t k = 0; k < labels.labels.size(); ++k) {
      by_label[index_of(labels.labels[k])].push_back({s, k + 1});
    }
  }

  Rng rng(mix_seed(seed, fnv1a64("short-clips")));
  std::vector<Candidate> chosen;
  std::array<bool, kNumLabels> used{};
  for (const auto& g : quota.groups) {
    std::vector<Candidate> pool;
    for (auto l : g.labels) {
      require(!used[index_of(l)], ErrorCode::kInvalidConfig, "label listed in two quota groups");
      used[index_of(l)] = true;
      const auto& c = by_label[index_of(l)];
      pool.insert(pool.end(), c.begin(), c.end());
    }
    std::sort(pool.begin(), pool.end(),
              [](const Candidate& a, const Candidate& b) { return std::tie(a.source, a.i) < std::tie(b.source, b.i); });
    if (pool.size() < g.count) {
      fail(ErrorCode::kShortfall, "not enough " + g.name + " clips: requested " + std::to_string(g.count) +
                                      ", available " + std::to_string(pool.size()));
    }
    for (std::size_t k = 0; k < g.count; ++k) {
      std::swap(pool[k], pool[k + rng.below(pool.size() - k)]);
      chosen.push_back(pool[k]);
    }
  }

  std::vector<std::string> ids;
  for (const auto& s : corpus.sources) ids.push_back(s.id());
  std::sort(ids.begin(), ids.end());
  Rng split_rng(mix_seed(seed, fnv1a64("split")));
  split_rng.shuffle(ids);
  const auto n_train = static_cast<std::size_t>(std::llround(split_ratio * static_cast<double>(ids.size())));
  std::set<std::string> train_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));

  CorpusManifest m;
  m.window = window;
  m.seed = seed;
  m.split_ratio = split_ratio;
  m.quota = quota;
  for (const auto& c : chosen) {
    const CorpusSource& src = corpus.sources[c.source];
    const ResponseLabel label = label_window(src, c.i, window, rules, categorizer);
    m.records.push_back({src.id(), c.i, clip_end_time(c.i, window), label,
                         train_ids.count(src.id()) ? Split::kTrain : Split::kTest});
  }
  std::sort(m.records.begin(), m.records.end(), [](const LabeledClipRecord& a, const LabeledClipRecord& b) {
    return std::tie(a.split, a.source_id, a.i) < std::tie(b.split, b.source_id, b.i);
  });
  m.counts = m.recount();
  return m;
}

}  // namespace mmw2s
