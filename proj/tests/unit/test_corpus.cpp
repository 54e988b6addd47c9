#include <gtest/gtest.h>

#include <filesystem>

#include "mmw2s/corpus/builder.hpp"
#include "mmw2s/corpus/corpus_io.hpp"
#include "mmw2s/corpus/synth.hpp"
#include "oracles.hpp"

using namespace mmw2s;

namespace {

DiarizationTrack dyad(std::vector<DiarizationEvent> e) { return DiarizationTrack(std::move(e)); }

ListenerAction action(const DiarizationTrack& t, double t_end) {
  return derive_action(t, "B", t_end, LabelRuleConfig{}).action;
}

SynthConfig small_synth(std::size_t n = 4) {
  SynthConfig c;
  c.n_sources = n;
  c.min_duration_s = 40.0;
  c.max_duration_s = 60.0;
  c.seed = 9;
  return c;
}

}  // namespace

TEST(DeriveAction, BackchannelWhileSpeakerTalks) {
  const auto t = dyad({{"A", 0.0, 20.0, ""}, {"B", 10.2, 10.8, "yeah"}});
  EXPECT_EQ(action(t, 10.0), ListenerAction::kReaction);
  // Onset must be strictly after t_end and within the horizon.
  EXPECT_EQ(action(t, 10.2), ListenerAction::kSilence);
  EXPECT_EQ(action(t, 9.5), ListenerAction::kSilence);
  EXPECT_EQ(action(t, 9.7), ListenerAction::kReaction);
}

TEST(DeriveAction, LongUtteranceIsFullResponse) {
  const auto t = dyad({{"A", 0.0, 10.0, ""}, {"B", 10.3, 14.0, "well i think"}});
  EXPECT_EQ(action(t, 10.0), ListenerAction::kFullResponse);
}

TEST(DeriveAction, BriefTurnWithoutResumeIsFullResponse) {
  const auto t = dyad({{"A", 0.0, 10.0, ""}, {"B", 10.3, 11.0, "sure"}, {"A", 12.5, 15.0, ""}});
  EXPECT_EQ(action(t, 10.0), ListenerAction::kFullResponse);
  const auto resumed = dyad({{"A", 0.0, 10.0, ""}, {"B", 10.3, 11.0, "sure"}, {"A", 12.0, 15.0, ""}});
  EXPECT_EQ(action(resumed, 10.0), ListenerAction::kReaction);
}

TEST(DeriveAction, NoListenerMeansSilence) {
  const auto t = dyad({{"A", 0.0, 30.0, ""}});
  EXPECT_EQ(action(t, 10.0), ListenerAction::kSilence);
  EXPECT_FALSE(derive_action(t, "B", 10.0, {}).utterance.has_value());
}

TEST(DeriveAction, RejectsMoreThanTwoSpeakers) {
  try {
    dyad({{"A", 0, 1, ""}, {"B", 1, 2, ""}, {"C", 2, 3, ""}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonDyadic);
  }
  EXPECT_THROW(dyad({{"A", 2, 1, ""}}), Error);
}

TEST(DeriveAction, AgreesWithEventScanOnRandomDyads) {
  Rng rng(2024);
  const LabelRuleConfig rules;
  std::size_t checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto events = oracle::random_dyad(rng, 60.0);
    const DiarizationTrack track(events);
    for (int k = 0; k < 20; ++k) {
      const double t_end = 0.1 * static_cast<double>(rng.below(600));
      ASSERT_EQ(derive_action(track, "B", t_end, rules).action, oracle::derive_action(events, "B", t_end, rules))
          << "trial " << trial << " t_end " << t_end;
      ++checked;
    }
  }
  EXPECT_EQ(checked, 20000u);
}

TEST(DiarizationCsv, RoundTripWithQuotes) {
  const std::vector<DiarizationEvent> events{{"A", 0.0, 1.5, "hello, \"you\""}, {"B", 1.25, 2.0, "yeah"}};
  const auto back = parse_diarization_csv(format_diarization_csv(events));
  EXPECT_EQ(back, events);
}

TEST(ReactionRules, Categories) {
  const RuleTableCategorizer c;
  EXPECT_EQ(c.categorize("Thank you so much").label, ResponseLabel::kGratitude);
  EXPECT_EQ(c.categorize("okay bye").label, ResponseLabel::kFarewell);
  EXPECT_EQ(c.categorize("hi there").label, ResponseLabel::kGreeting);
  EXPECT_EQ(c.categorize("really?").label, ResponseLabel::kQuestion);
  EXPECT_EQ(c.categorize("how come").label, ResponseLabel::kQuestion);
  EXPECT_EQ(c.categorize("wow").label, ResponseLabel::kSurprise);
  EXPECT_EQ(c.categorize("hmm").label, ResponseLabel::kPondering);
  EXPECT_EQ(c.categorize("yeah").label, ResponseLabel::kAffirmation);
  const auto empty = c.categorize("");
  EXPECT_EQ(empty.label, ResponseLabel::kAffirmation);
  EXPECT_TRUE(empty.empty_text);
}

TEST(ReactionRules, SynthPhrasesMapToTheirClass) {
  const RuleTableCategorizer c;
  const auto& phrases = synth_detail::reaction_phrases();
  for (std::size_t k = 0; k < kNumReactions; ++k) {
    for (const auto& p : phrases[k]) EXPECT_EQ(index_of(c.categorize(p).label), k) << p;
  }
}

TEST(Synth, PlantedEventsRelabelExactly) {
  const Corpus corpus = synth_corpus(small_synth());
  std::size_t n = 0;
  for (const auto& s : corpus.sources) {
    for (const auto& p : s.planted) {
      const auto i = static_cast<std::size_t>(std::llround((p.t_end - 10.0) / 0.5)) + 1;
      EXPECT_EQ(label_window(s, i, WindowConfig{}, {}, RuleTableCategorizer()), p.label) << s.id() << " " << p.t_end;
      ++n;
    }
  }
  EXPECT_GT(n, 10u);
}

TEST(Synth, IsDeterministic) {
  auto cfg = small_synth(2);
  const Corpus a = synth_corpus(cfg);
  const Corpus b = synth_corpus(cfg);
  ASSERT_EQ(a.sources.size(), 2u);
  EXPECT_EQ(a.sources[1].timeline.audio->samples, b.sources[1].timeline.audio->samples);
  EXPECT_EQ(a.sources[1].timeline.video->pixels, b.sources[1].timeline.video->pixels);
  EXPECT_EQ(*a.sources[1].timeline.transcript, *b.sources[1].timeline.transcript);
  cfg.seed = 10;
  EXPECT_NE(synth_corpus(cfg).sources[0].timeline.transcript, a.sources[0].timeline.transcript);
}

TEST(Synth, MediaIsOptional) {
  auto cfg = small_synth(1);
  cfg.with_media = false;
  const Corpus c = synth_corpus(cfg);
  EXPECT_FALSE(c.sources[0].timeline.audio.has_value());
  EXPECT_FALSE(c.sources[0].timeline.video.has_value());
  EXPECT_TRUE(c.sources[0].timeline.transcript.has_value());
}

TEST(FullVideos, OneLabelPerWindow) {
  const Corpus corpus = synth_corpus(small_synth());
  const auto fv = build_full_videos(corpus, WindowConfig{});
  ASSERT_EQ(fv.size(), corpus.sources.size());
  for (std::size_t s = 0; s < fv.size(); ++s) {
    EXPECT_EQ(fv[s].labels.size(), window_count(corpus.sources[s].timeline.duration_s, WindowConfig{}));
  }
}

TEST(ShortClips, QuotasSplitAndDeterminism) {
  auto cfg = small_synth(8);
  cfg.with_media = false;
  const Corpus corpus = synth_corpus(cfg);
  const auto quota = ClipQuota::by_category(20, 5, 10);
  const auto m = build_short_clips(corpus, quota, 0.75, 3, WindowConfig{});
  m.validate();
  std::size_t reactions = 0;
  for (std::size_t k = 0; k < kNumReactions; ++k) reactions += m.counts[k];
  EXPECT_EQ(reactions, 20u);
  EXPECT_EQ(m.counts[index_of(ResponseLabel::kFullResponse)], 5u);
  EXPECT_EQ(m.counts[index_of(ResponseLabel::kSilence)], 10u);
  std::set<std::string> train_sources;
  for (const auto& r : m.records) {
    if (r.split == Split::kTrain) train_sources.insert(r.source_id);
    EXPECT_DOUBLE_EQ(r.t_end, clip_end_time(r.i, m.window));
  }
  const auto again = build_short_clips(corpus, quota, 0.75, 3, WindowConfig{});
  EXPECT_EQ(records_to_jsonl(again.records), records_to_jsonl(m.records));
  const auto other = build_short_clips(corpus, quota, 0.75, 4, WindowConfig{});
  EXPECT_NE(records_to_jsonl(other.records), records_to_jsonl(m.records));
}

TEST(ShortClips, ShortfallIsReported) {
  auto cfg = small_synth(1);
  cfg.with_media = false;
  const Corpus corpus = synth_corpus(cfg);
  try {
    build_short_clips(corpus, ClipQuota::by_category(1000, 1, 1), 0.7, 1, WindowConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShortfall);
  }
}

TEST(ShortClips, RecordsRoundTrip) {
  auto cfg = small_synth(3);
  cfg.with_media = false;
  const Corpus corpus = synth_corpus(cfg);
  const auto m = build_short_clips(corpus, ClipQuota::by_category(5, 1, 3), 0.7, 1, WindowConfig{});
  const auto back = records_from_jsonl(records_to_jsonl(m.records));
  EXPECT_EQ(back, m.records);
  const auto meta = manifest_from_meta(manifest_meta(m), back);
  EXPECT_EQ(meta.counts, m.counts);
  EXPECT_EQ(meta.window, m.window);
}

TEST(CorpusIo, SaveLoadRoundTrip) {
  Corpus corpus = synth_corpus(small_synth(2));
  const auto dir = std::filesystem::temp_directory_path() / "mmw2s_corpus_io_test";
  std::filesystem::remove_all(dir);
  save_corpus(dir.string(), corpus);
  const Corpus back = load_corpus(dir.string());
  ASSERT_EQ(back.sources.size(), 2u);
  for (std::size_t s = 0; s < 2; ++s) {
    const auto& a = corpus.sources[s];
    const auto& b = back.sources[s];
    EXPECT_EQ(a.id(), b.id());
    EXPECT_EQ(a.timeline.audio->samples, b.timeline.audio->samples);
    EXPECT_EQ(a.timeline.video->pixels, b.timeline.video->pixels);
    EXPECT_EQ(*a.timeline.transcript, *b.timeline.transcript);
    EXPECT_EQ(a.track.events(), b.track.events());
    ASSERT_EQ(a.planted.size(), b.planted.size());
  }
  std::filesystem::remove_all(dir);
}
