#include <gtest/gtest.h>

#include <random>

#include "mmw2s/corpus/builder.hpp"
#include "mmw2s/eval/ablation.hpp"
#include "oracles.hpp"
#include "stream_fixture.hpp"

using namespace mmw2s;

namespace {

using L = ResponseLabel;

ConfusionMatrix confusion_of(const std::vector<L>& gold, const std::vector<L>& pred) {
  ConfusionMatrix cm;
  for (std::size_t k = 0; k < gold.size(); ++k) accumulate(gold[k], pred[k], cm);
  return cm;
}

}  // namespace

TEST(Confusion, AccumulateCells) {
  ConfusionMatrix cm;
  accumulate(L::kSilence, L::kSilence, cm);
  accumulate(L::kAffirmation, L::kQuestion, cm);
  EXPECT_EQ(cm.counts[8][8], 1u);
  EXPECT_EQ(cm.counts[0][4], 1u);
  EXPECT_EQ(cm.total(), 2u);
  EXPECT_EQ(cm.trace(), 1u);
}

TEST(ClassMetrics, WorkedThreeClipExample) {
  const auto m = class_metrics(confusion_of({L::kAffirmation, L::kSilence, L::kSilence},
                                            {L::kAffirmation, L::kAffirmation, L::kSilence}));
  EXPECT_DOUBLE_EQ(m[0].precision, 0.5);
  EXPECT_DOUBLE_EQ(m[0].recall, 1.0);
  EXPECT_NEAR(m[0].f1, 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(m[8].precision, 1.0);
  EXPECT_DOUBLE_EQ(m[8].recall, 0.5);
  EXPECT_NEAR(m[8].f1, 2.0 / 3.0, 1e-15);
  // no support, never predicted
  EXPECT_EQ(m[4].precision, 0.0);
  EXPECT_EQ(m[4].recall, 0.0);
  EXPECT_EQ(m[4].f1, 0.0);
}

TEST(ClassMetrics, PerfectPredictions) {
  std::vector<L> y;
  for (std::size_t k = 0; k < kNumLabels; ++k) y.push_back(label_at(k));
  const auto r = make_report(confusion_of(y, y));
  for (const auto& c : r.per_class) {
    EXPECT_EQ(c.precision, 1.0);
    EXPECT_EQ(c.recall, 1.0);
    EXPECT_EQ(c.f1, 1.0);
  }
  EXPECT_DOUBLE_EQ(r.macro_f1, 1.0);
}

TEST(ClassMetrics, MatchesCountingOracleOnRandomSequences) {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + gen() % 200;
    // skewed label draws so some classes go missing
    const std::size_t span = 1 + gen() % kNumLabels;
    std::vector<L> gold(n), pred(n);
    std::size_t matches = 0;
    for (std::size_t k = 0; k < n; ++k) {
      gold[k] = label_at(gen() % span);
      pred[k] = gen() % 3 == 0 ? gold[k] : label_at(gen() % kNumLabels);
      matches += gold[k] == pred[k];
    }
    const auto cm = confusion_of(gold, pred);
    const auto got = class_metrics(cm);
    const auto want = oracle::class_metrics(gold, pred);
    for (std::size_t c = 0; c < kNumLabels; ++c) {
      ASSERT_EQ(got[c].precision, want[c].precision) << trial << " " << c;
      ASSERT_EQ(got[c].recall, want[c].recall) << trial << " " << c;
      ASSERT_EQ(got[c].f1, want[c].f1) << trial << " " << c;
    }
    ASSERT_EQ(cm.total(), n);
    ASSERT_DOUBLE_EQ(cm.accuracy(), static_cast<double>(matches) / static_cast<double>(n));
  }
}

TEST(RowNormalize, RowsSumToOneAndZeroRowsStay) {
  std::mt19937_64 gen(5);
  ConfusionMatrix cm;
  for (int k = 0; k < 500; ++k) accumulate(label_at(gen() % 8), label_at(gen() % kNumLabels), cm);
  const auto n = row_normalize(cm);
  for (std::size_t r = 0; r < 8; ++r) {
    double s = 0;
    for (double v : n[r]) s += v;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  for (double v : n[8]) EXPECT_EQ(v, 0.0);

  ConfusionMatrix id;
  for (std::size_t k = 0; k < kNumLabels; ++k) id.counts[k][k] = 3;
  const auto ni = row_normalize(id);
  for (std::size_t r = 0; r < kNumLabels; ++r) {
    for (std::size_t c = 0; c < kNumLabels; ++c) EXPECT_EQ(ni[r][c], r == c ? 1.0 : 0.0);
  }
}

TEST(Report, JsonAndCsvLayout) {
  const auto r = make_report(confusion_of({L::kAffirmation, L::kSilence, L::kSilence},
                                          {L::kAffirmation, L::kAffirmation, L::kSilence}),
                             {{"modalities", "text"}});
  const auto j = report_to_json(r);
  ASSERT_EQ(j["per_class"].size(), kNumLabels);
  EXPECT_EQ(j["per_class"][0]["abbrev"], "Affm.");
  EXPECT_EQ(j["n_scored"], 3);
  EXPECT_EQ(j["confusion"][8][0], 1);
  EXPECT_DOUBLE_EQ(j["confusion_row_normalized"][8][8].get<double>(), 0.5);
  EXPECT_EQ(j["meta"]["modalities"], "text");
  EXPECT_NEAR(j["macro"]["f1"].get<double>(), (4.0 / 3.0) / 9.0, 1e-15);

  const std::string csv = report_to_csv(r);
  EXPECT_EQ(csv.rfind("class,precision,recall,f1,support\nAffm.,0.500000,1.000000,0.666667,1\n", 0), 0u);
  EXPECT_NE(csv.find("slnc.,1.000000,0.500000,0.666667,2\n"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
}

TEST(Evaluate, EmptyDatasetIsConfigError) {
  const auto ck = fixture::small_checkpoint();
  try {
    evaluate_examples(ck.model, {}, ModalitySet::all());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidConfig);
  }
}

TEST(Evaluate, RandomCheckpointIsNearChance) {
  SynthConfig sc;
  sc.n_sources = 20;
  sc.seed = 4;
  const Corpus corpus = synth_corpus(sc);
  std::array<std::size_t, kNumLabels> q;
  q.fill(20);
  const auto m = build_short_clips(corpus, ClipQuota::by_label(q), 0.7, 2, sc.window);
  const auto ck0 = fixture::small_checkpoint();
  const auto data = examples_from_records(corpus, m.records, m.window, ck0.frontend, ck0.model.config());
  double acc = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ck = fixture::small_checkpoint(seed);
    const auto a = evaluate_examples(ck.model, data, ModalitySet::all());
    const auto b = evaluate_examples(ck.model, data, ModalitySet::all());
    EXPECT_EQ(report_to_json(a), report_to_json(b));
    acc += a.accuracy / 5.0;
  }
  EXPECT_NEAR(acc, 1.0 / 9.0, 0.05);
}

TEST(Evaluate, FullVideosScoresEveryWindow) {
  SynthConfig sc;
  sc.n_sources = 2;
  sc.min_duration_s = 30.0;
  sc.max_duration_s = 45.0;
  sc.seed = 8;
  const Corpus corpus = synth_corpus(sc);
  const WindowConfig w;
  const auto gold = build_full_videos(corpus, w);
  const auto ck = fixture::small_checkpoint();
  const auto r = evaluate_full_videos(corpus, gold, ck, ModalitySet::all());
  std::uint64_t n = 0;
  for (const auto& s : corpus.sources) n += window_count(s.timeline.duration_s, w);
  EXPECT_EQ(r.confusion.total(), n);
  EXPECT_EQ(r.meta["mode"], "full_videos");

  const auto one = evaluate_full_videos(corpus, gold, ck, ModalitySet::all(), {corpus.sources[0].id()});
  EXPECT_EQ(one.confusion.total(), window_count(corpus.sources[0].timeline.duration_s, w));
}

TEST(Ablation, EightCellsWithCompleteTables) {
  SynthConfig sc;
  sc.n_sources = 10;
  sc.seed = 2;
  const Corpus corpus = synth_corpus(sc);
  std::array<std::size_t, kNumLabels> q;
  q.fill(4);
  const auto m = build_short_clips(corpus, ClipQuota::by_label(q), 0.7, 2, sc.window);
  const auto ck = fixture::small_checkpoint();
  const auto train = examples_from_records(corpus, m.subset(Split::kTrain), m.window, ck.frontend, ck.model.config());
  const auto test = examples_from_records(corpus, m.subset(Split::kTest), m.window, ck.frontend, ck.model.config());
  TrainConfig tc;
  tc.max_steps = 2;
  tc.batch_size = 4;
  std::size_t seen = 0;
  const auto r = ablation_suite(train, test, ck.frontend, ck.model.config(), tc, {1},
                                [&](const AblationCell&) { ++seen; });
  ASSERT_EQ(r.cells.size(), 8u);
  EXPECT_EQ(seen, 8u);
  for (const auto& c : r.cells) {
    EXPECT_EQ(c.steps, 2u);
    EXPECT_EQ(c.report.confusion.total(), test.size());
  }
  const std::string csv = ablation_table_csv(r);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 8 * 10);
  const auto j = ablation_to_json(r);
  EXPECT_EQ(j["median_macro_f1"].size(), 8u);
  EXPECT_TRUE(j["median_macro_f1"].contains("V+A+T/no-attn"));
  EXPECT_THROW(r.median_macro_f1(ModalitySet::of({Modality::kVideo}), true), Error);
}
