#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmw2s/common/rng.hpp"
#include "mmw2s/corpus/corpus.hpp"
#include "mmw2s/frontend/wav.hpp"

namespace mmw2s {

struct SynthConfig {
  std::size_t n_sources = 8;
  double min_duration_s = 60.0;
  double max_duration_s = 120.0;
  /// Relative frequency of each planned slot, indexed by ResponseLabel. A
  /// silence slot plants nothing and only advances time.
  std::array<double, kNumLabels> class_mix = {1, 1, 1, 1, 1, 1, 1, 1, 1};
  /// 0 = clean cues; around 1 the interference matches the cue strength.
  double noise = 0.1;
  WindowConfig window;
  double cue_s = 1.0;
  double sample_rate = 16000.0;
  double video_fps = 5.0;
  std::size_t frame_height = 8;
  std::size_t frame_width = 8;
  std::uint64_t seed = 0;
  /// When false only diarization, planted events and transcripts are made.
  bool with_media = true;

  void validate() const {
    window.validate();
    require(n_sources >= 1, ErrorCode::kInvalidConfig, "synth needs at least one source");
    require(min_duration_s >= window.window_s + 2.0 && max_duration_s >= min_duration_s, ErrorCode::kInvalidConfig,
            "synth durations must exceed the window by at least 2 s");
    require(noise >= 0.0, ErrorCode::kInvalidConfig, "noise must be nonnegative");
    require(cue_s > 0.0 && cue_s < window.window_s, ErrorCode::kInvalidConfig, "cue length must fit in a window");
    require(frame_height >= 4 && frame_width >= 4, ErrorCode::kInvalidConfig, "synthetic frames need at least 4x4");
    double total = 0.0;
    for (double w : class_mix) {
      require(w >= 0.0, ErrorCode::kInvalidConfig, "class mix weights must be nonnegative");
      total += w;
    }
    require(total > 0.0, ErrorCode::kInvalidConfig, "class mix must have positive mass");
  }
};

inline void to_json(nlohmann::json& j, const SynthConfig& c) {
  j = nlohmann::json{{"n_sources", c.n_sources},       {"min_duration_s", c.min_duration_s},
                     {"max_duration_s", c.max_duration_s}, {"class_mix", c.class_mix},
                     {"noise", c.noise},               {"window", c.window},
                     {"cue_s", c.cue_s},               {"sample_rate", c.sample_rate},
                     {"video_fps", c.video_fps},       {"frame_height", c.frame_height},
                     {"frame_width", c.frame_width},   {"seed", c.seed},
                     {"with_media", c.with_media}};
}
inline void from_json(const nlohmann::json& j, SynthConfig& c) {
  SynthConfig d;
  c.n_sources = j.value("n_sources", d.n_sources);
  c.min_duration_s = j.value("min_duration_s", d.min_duration_s);
  c.max_duration_s = j.value("max_duration_s", d.max_duration_s);
  c.class_mix = j.value("class_mix", d.class_mix);
  c.noise = j.value("noise", d.noise);
  c.window = j.value("window", d.window);
  c.cue_s = j.value("cue_s", d.cue_s);
  c.sample_rate = j.value("sample_rate", d.sample_rate);
  c.video_fps = j.value("video_fps", d.video_fps);
  c.frame_height = j.value("frame_height", d.frame_height);
  c.frame_width = j.value("frame_width", d.frame_width);
  c.seed = j.value("seed", d.seed);
  c.with_media = j.value("with_media", d.with_media);
}

namespace synth_detail {

inline constexpr std::size_t kCueClasses = 8;  // every label except silence

/// Tone frequency of each class cue; spaced roughly evenly on the mel scale.
inline constexpr std::array<double, kCueClasses> kCueFrequencyHz = {500, 700, 950, 1250, 1600, 2050, 2600, 3300};

inline const std::array<std::vector<std::string>, kCueClasses>& cue_words() {
  static const std::array<std::vector<std::string>, kCueClasses> words = {{
      {"agree", "obviously", "know", "right"},
      {"gift", "helped", "favor", "brought"},
      {"leave", "late", "goodnight", "going"},
      {"arrived", "meet", "welcome", "hi"},
      {"guess", "secret", "happened", "wonder"},
      {"won", "lottery", "unbelievable", "promoted"},
      {"puzzle", "riddle", "tricky", "choose"},
      {"think", "opinion", "your", "what"},
  }};
  return words;
}

inline const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> words = {"and", "so", "then", "because", "also",
                                                 "the", "a",  "was",  "we",      "it"};
  return words;
}

/// Listener utterances per reaction label; each must categorize back to its
/// label under the default rule table.
inline const std::array<std::vector<std::string>, kNumReactions>& reaction_phrases() {
  static const std::array<std::vector<std::string>, kNumReactions> phrases = {{
      {"yeah", "right", "okay sure", "mm mm", "exactly"},
      {"thank you", "thanks so much", "i appreciate it"},
      {"bye", "see you later", "take care"},
      {"hello", "hi there", "hey"},
      {"really?", "wait, what?", "how come?"},
      {"wow", "no way", "oh my god"},
      {"hmm", "let me think", "um"},
  }};
  return phrases;
}

/// Fixed +-1 pattern over a 2x2 cell grid x 3 channels per class, tiled over
/// the four quadrants of the frame. The patterns are part of the synthetic
/// world, not of any one corpus.
inline const std::array<std::array<float, 12>, kCueClasses>& cue_patterns() {
  static const auto patterns = [] {
    std::array<std::array<float, 12>, kCueClasses> out{};
    Rng rng(0x5EEDC0DEULL);
    for (auto& p : out) {
      for (auto& v : p) v = rng.bernoulli(0.5) ? 1.0f : -1.0f;
    }
    return out;
  }();
  return patterns;
}

struct PlannedEvent {
  ResponseLabel label;
  double t_end;
  double onset;
  double offset;
  double speaker_stop = 0.0;   // full responses: when the user stops
  double speaker_resume = 0.0; // full responses: when the user resumes
  std::string text;
};

/// Interval [start, end] during which a class cue is planted.
struct CueSpan {
  double start;
  double end;
  std::size_t cue_class;
};

inline std::size_t cue_class_at(const std::vector<CueSpan>& spans, double t) {
  for (const auto& s : spans) {
    if (t >= s.start && t <= s.end) return s.cue_class;
  }
  return kCueClasses;
}

}  // namespace synth_detail

/// Generates one dyadic conversation. The user ("A") talks with short pauses
/// only around full responses; the listener ("B") produces the planted
/// events. Every planted event sits just after a window end t_i, and its cue
/// occupies [t_i - cue_s, t_i] in all three modalities.
inline CorpusSource synth_source(const SynthConfig& cfg, std::size_t index) {
  using namespace synth_detail;
  Rng rng(mix_seed(cfg.seed, index));
  CorpusSource src;
  char id[32];
  std::snprintf(id, sizeof(id), "syn%04zu", index);
  const double duration = std::round(rng.uniform(cfg.min_duration_s, cfg.max_duration_s) * 10.0) / 10.0;
  src.timeline.source_id = id;
  src.timeline.duration_s = duration;
  src.listener_id = "B";

  const WindowConfig& win = cfg.window;
  std::vector<double> mix(cfg.class_mix.begin(), cfg.class_mix.end());
  std::vector<PlannedEvent> plan;
  double cursor = win.window_s + cfg.cue_s;
  while (true) {
    const auto label = label_at(rng.categorical(mix));
    if (label == ResponseLabel::kSilence) {
      cursor += rng.uniform(2.0, 5.0);
      if (cursor > duration) break;
      continue;
    }
    const auto i = static_cast<std::size_t>(std::ceil((cursor - win.window_s) / win.stride_s)) + 1;
    PlannedEvent e{label, clip_end_time(i, win), 0, 0, 0, 0, {}};
    e.onset = e.t_end + win.stride_s * rng.uniform(0.2, 0.8);
    if (label == ResponseLabel::kFullResponse) {
      e.offset = e.onset + rng.uniform(3.0, 6.0);
      e.speaker_stop = e.t_end + 0.5 * (e.onset - e.t_end);
      e.speaker_resume = e.offset + rng.uniform(0.3, 0.8);
      e.text = "well i think that is a good point and here is my view";
    } else {
      e.offset = e.onset + rng.uniform(0.4, 1.2);
      const auto& phrases = reaction_phrases()[index_of(label)];
      e.text = phrases[rng.below(phrases.size())];
    }
    const double busy_until = std::max(e.offset, e.speaker_resume);
    if (busy_until + 1.0 > duration) break;
    plan.push_back(e);
    src.planted.push_back({e.t_end, label});
    cursor = busy_until + cfg.cue_s + rng.uniform(1.0, 4.0);
  }

  // Diarization: the user speaks everywhere except the gaps around full
  // responses.
  std::vector<DiarizationEvent> events;
  std::vector<std::pair<double, double>> user_turns;
  double turn_start = 0.0;
  for (const auto& e : plan) {
    if (e.label == ResponseLabel::kFullResponse) {
      user_turns.emplace_back(turn_start, e.speaker_stop);
      turn_start = e.speaker_resume;
    }
  }
  user_turns.emplace_back(turn_start, duration);
  for (const auto& [a, b] : user_turns) events.push_back({"A", a, b, ""});
  for (const auto& e : plan) events.push_back({"B", e.onset, e.offset, e.text});
  std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.onset_s < b.onset_s; });

  std::vector<CueSpan> cues;
  for (const auto& e : plan) cues.push_back({e.t_end - cfg.cue_s, e.t_end, index_of(e.label)});
  auto user_speaking = [&](double t) {
    for (const auto& [a, b] : user_turns) {
      if (t >= a && t < b) return true;
    }
    return false;
  };
  auto listener_speaking = [&](double t) {
    for (const auto& e : plan) {
      if (t >= e.onset && t < e.offset) return true;
    }
    return false;
  };

  // Interference: independent Gaussian gains on every cue channel, held
  // constant over stride-length segments.
  const double segment = win.stride_s;
  const auto n_segments = static_cast<std::size_t>(std::ceil(duration / segment)) + 1;
  std::vector<std::array<double, kCueClasses>> audio_gain(n_segments), video_gain(n_segments);
  for (std::size_t s = 0; s < n_segments; ++s) {
    for (std::size_t c = 0; c < kCueClasses; ++c) {
      audio_gain[s][c] = cfg.noise * rng.normal();
      video_gain[s][c] = cfg.noise * rng.normal();
    }
  }
  auto segment_of = [&](double t) { return std::min(n_segments - 1, static_cast<std::size_t>(t / segment)); };

  // Transcript.
  std::vector<TimedToken> transcript;
  const double text_confusion = std::min(1.0, 0.6 * cfg.noise);
  const double false_cue_rate = std::min(1.0, 0.25 * cfg.noise);
  for (const auto& [a, b] : user_turns) {
    double t = a + rng.uniform(0.05, 0.3);
    while (t < b) {
      const std::size_t cue = cue_class_at(cues, t);
      std::string word;
      if (cue < kCueClasses) {
        const std::size_t cls = rng.bernoulli(text_confusion) ? rng.below(kCueClasses) : cue;
        const auto& pool = cue_words()[cls];
        word = pool[rng.below(pool.size())];
      } else if (rng.bernoulli(false_cue_rate)) {
        const auto& pool = cue_words()[rng.below(kCueClasses)];
        word = pool[rng.below(pool.size())];
      } else {
        word = filler_words()[rng.below(filler_words().size())];
      }
      transcript.push_back({word, t, std::min(b, t + 0.25)});
      t += rng.uniform(0.3, 0.5);
    }
  }

  src.timeline.transcript = std::move(transcript);
  src.track = DiarizationTrack(std::move(events));
  if (!cfg.with_media) return src;

  // Audio: harmonic voices for both parties, class tones, interference tones.
  AudioTrack audio;
  audio.sample_rate = cfg.sample_rate;
  const auto n_samples = static_cast<std::size_t>(std::floor(duration * cfg.sample_rate)) + 1;
  audio.samples.resize(n_samples);
  const double user_f0 = rng.uniform(120.0, 160.0);
  const double listener_f0 = rng.uniform(200.0, 240.0);
  auto phasor = [&](double hz) { return std::polar(1.0, 2.0 * std::numbers::pi * hz / cfg.sample_rate); };
  std::array<std::complex<double>, kCueClasses> tone{}, tone_step{};
  for (std::size_t c = 0; c < kCueClasses; ++c) {
    tone[c] = 1.0;
    tone_step[c] = phasor(kCueFrequencyHz[c]);
  }
  std::array<std::complex<double>, 3> user_h{1.0, 1.0, 1.0}, listener_h{1.0, 1.0, 1.0};
  std::array<std::complex<double>, 3> user_step{phasor(user_f0), phasor(2 * user_f0), phasor(3 * user_f0)};
  std::array<std::complex<double>, 3> listener_step{phasor(listener_f0), phasor(2 * listener_f0),
                                                    phasor(3 * listener_f0)};
  std::complex<double> syllable{1.0}, syllable_step = phasor(4.0);
  constexpr double kCueAmplitude = 0.08;
  const double hiss = 0.004;
  std::size_t cue_idx = 0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double t = static_cast<double>(k) / cfg.sample_rate;
    const double envelope = 0.6 + 0.4 * syllable.imag();
    double v = hiss * rng.normal();
    if (user_speaking(t)) {
      v += envelope * (0.05 * user_h[0].imag() + 0.03 * user_h[1].imag() + 0.02 * user_h[2].imag());
    }
    if (listener_speaking(t)) {
      v += envelope * (0.05 * listener_h[0].imag() + 0.03 * listener_h[1].imag() + 0.02 * listener_h[2].imag());
    }
    while (cue_idx < cues.size() && cues[cue_idx].end < t) ++cue_idx;
    const bool in_cue = cue_idx < cues.size() && t >= cues[cue_idx].start && t <= cues[cue_idx].end;
    const auto& gains = audio_gain[segment_of(t)];
    for (std::size_t c = 0; c < kCueClasses; ++c) {
      double amp = kCueAmplitude * gains[c];
      if (in_cue && cues[cue_idx].cue_class == c) amp += kCueAmplitude;
      v += amp * tone[c].imag();
      tone[c] *= tone_step[c];
    }
    for (std::size_t h = 0; h < 3; ++h) {
      user_h[h] *= user_step[h];
      listener_h[h] *= listener_step[h];
    }
    syllable *= syllable_step;
    audio.samples[k] = static_cast<float>(v);
  }
  quantize_pcm16(audio.samples);

  // Video: gray background, a per-source face texture, cue patterns.
  FrameTrack video;
  video.fps = cfg.video_fps;
  video.height = cfg.frame_height;
  video.width = cfg.frame_width;
  video.channels = 3;
  const auto n_frames = static_cast<std::size_t>(std::floor(duration * cfg.video_fps)) + 1;
  video.pixels.resize(n_frames * video.frame_size());
  std::vector<float> face(video.frame_size());
  for (auto& f : face) f = static_cast<float>(0.05 * rng.normal());
  constexpr double kPatternAmplitude = 0.12;
  for (std::size_t j = 0; j < n_frames; ++j) {
    const double t = static_cast<double>(j) / cfg.video_fps;
    const std::size_t cue = cue_class_at(cues, t);
    const auto& gains = video_gain[segment_of(t)];
    const bool talking = user_speaking(t);
    float* frame = video.pixels.data() + j * video.frame_size();
    for (std::size_t y = 0; y < video.height; ++y) {
      for (std::size_t x = 0; x < video.width; ++x) {
        const std::size_t cell = ((y * 4 / video.height) % 2) * 2 + (x * 4 / video.width) % 2;
        for (std::size_t ch = 0; ch < 3; ++ch) {
          const std::size_t p = (y * video.width + x) * 3 + ch;
          double v = 0.5 + face[p] + (talking ? 0.03 : 0.0);
          for (std::size_t c = 0; c < kCueClasses; ++c) {
            double amp = kPatternAmplitude * gains[c];
            if (c == cue) amp += kPatternAmplitude;
            v += amp * cue_patterns()[c][cell * 3 + ch];
          }
          v += 0.01 * rng.normal();
          frame[p] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    }
  }

  src.timeline.audio = std::move(audio);
  src.timeline.video = std::move(video);
  return src;
}

inline Corpus synth_corpus(const SynthConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  corpus.sources.reserve(cfg.n_sources);
  for (std::size_t s = 0; s < cfg.n_sources; ++s) corpus.sources.push_back(synth_source(cfg, s));
  return corpus;
}

}  // namespace mmw2s
