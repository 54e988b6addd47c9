#include <gtest/gtest.h>

#include <cmath>

#include "mmw2s/train/adamw.hpp"
#include "mmw2s/train/alignment.hpp"
#include "mmw2s/train/checkpoint.hpp"
#include "mmw2s/train/finetune.hpp"
#include "mmw2s/train/grad_check.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace mmw2s;

namespace {

RowVec logits_of(std::initializer_list<double> v) {
  RowVec z(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) z(k++) = x;
  return z;
}

std::vector<TrainExample> tiny_dataset(const ModelConfig& cfg, std::size_t n) {
  std::vector<TrainExample> out;
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back({fixture::tiny_features(cfg, 100 + k), label_at(k % kNumLabels)});
  }
  return out;
}

Checkpoint fresh_checkpoint(const ModelConfig& cfg, std::uint64_t seed = 1) {
  Checkpoint ck;
  ck.model = MultimodalModel(cfg, seed);
  return ck;
}

}  // namespace

TEST(FocalLoss, UnitValues) {
  EXPECT_EQ(focal_loss_value(1.0, 2.0, 0.5), 0.0);
  EXPECT_NEAR(focal_loss_value(0.5, 2.0, 0.5), 0.0866434, 1e-6);
  // Perfectly confident logits give an exact zero.
  EXPECT_EQ(focal_loss(logits_of({0.0, 1000.0, 0.0}), 1, 2.0, 0.5).loss, 0.0);
  const RowVec z = logits_of({0.0, 0.0});
  EXPECT_NEAR(focal_loss(z, 0, 2.0, 0.5).loss, 0.0866434, 1e-6);
}

TEST(FocalLoss, GammaZeroIsCrossEntropy) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(9);
    for (auto& x : v) x = rng.normal(0.0, 3.0);
    RowVec z(9);
    for (int k = 0; k < 9; ++k) z(k) = v[static_cast<std::size_t>(k)];
    const std::size_t gold = rng.below(9);
    const double ce = -std::log(softmax(z)(static_cast<Eigen::Index>(gold)));
    EXPECT_NEAR(focal_loss(z, gold, 0.0, 1.0).loss, ce, 1e-12);
    EXPECT_NEAR(focal_loss(z, gold, 2.0, 0.5).loss, oracle::focal_loss(v, gold, 2.0, 0.5), 1e-12);
  }
}

TEST(FocalLoss, GradientMatchesFiniteDifferences) {
  Rng rng(6);
  for (double gamma : {0.0, 0.5, 2.0, 5.0}) {
    RowVec z(9);
    for (int k = 0; k < 9; ++k) z(k) = rng.normal();
    const auto lg = focal_loss(z, 4, gamma, 0.5);
    for (int k = 0; k < 9; ++k) {
      RowVec zp = z, zm = z;
      zp(k) += 1e-6;
      zm(k) -= 1e-6;
      const double num = (focal_loss(zp, 4, gamma, 0.5).loss - focal_loss(zm, 4, gamma, 0.5).loss) / 2e-6;
      EXPECT_NEAR(lg.dlogits(k), num, 1e-7) << "gamma " << gamma << " k " << k;
    }
  }
}

TEST(AdamW, FirstStepMatchesHandDerivation) {
  ParamStore ps;
  ps.add("w", 1, 1);
  ps.mutable_value(0)(0, 0) = 1.0;
  Gradients g{Mat::Constant(1, 1, 0.1)};
  OptimizerState st = OptimizerState::for_params(ps);
  TrainConfig cfg;
  cfg.lr = 0.01;
  adamw_step(ps, g, st, cfg);
  EXPECT_NEAR(ps[0](0, 0), 0.989900, 1e-6);
  EXPECT_NEAR(ps[0](0, 0), oracle::adamw_first_step(1.0, 0.1, 0.01, 0.9, 0.999, 1e-8, 0.01), 1e-15);
  EXPECT_EQ(st.step, 1u);
}

TEST(AdamW, ZeroGradientZeroDecayLeavesWeights) {
  ParamStore ps;
  ps.add("w", 2, 3);
  ps.mutable_value(0).setConstant(0.7);
  OptimizerState st = OptimizerState::for_params(ps);
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  adamw_step(ps, ps.zeros_like(), st, cfg);
  EXPECT_TRUE(ps[0].isApproxToConstant(0.7, 0.0));
}

TEST(AdamW, FirstStepMagnitudeWithoutDecay) {
  Rng rng(4);
  ParamStore ps;
  ps.add("w", 1, 20);
  Gradients g{Mat(1, 20)};
  for (int k = 0; k < 20; ++k) g[0](0, k) = rng.normal() * std::pow(10.0, rng.uniform(-4.0, 1.0));
  OptimizerState st = OptimizerState::for_params(ps);
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  adamw_step(ps, g, st, cfg);
  for (int k = 0; k < 20; ++k) {
    const double gk = g[0](0, k);
    EXPECT_NEAR(ps[0](0, k), -cfg.lr * gk / (std::abs(gk) + cfg.eps), 1e-15);
  }
}

TEST(AdamW, ShapeMismatch) {
  ParamStore ps;
  ps.add("w", 2, 2);
  OptimizerState st = OptimizerState::for_params(ps);
  Gradients g{Mat::Zero(1, 2)};
  EXPECT_THROW(adamw_step(ps, g, st, TrainConfig{}), Error);
}

TEST(Finetune, OneStepLowersThatClipsLoss) {
  const ModelConfig cfg = fixture::tiny_config();
  const auto data = tiny_dataset(cfg, 1);
  Checkpoint ck = fresh_checkpoint(cfg);
  const std::vector<std::size_t> idx{0};
  const double before = batch_loss(ck.model, data, idx, ck.modalities, 2.0, 0.5, nullptr);
  TrainConfig tc;
  tc.lr = 1e-4;
  tc.max_steps = 1;
  tc.batch_size = 1;
  finetune(ck, data, tc);
  EXPECT_LT(batch_loss(ck.model, data, idx, ck.modalities, 2.0, 0.5, nullptr), before);
}

TEST(Batches, PureFunctionOfSeedAndStep) {
  const auto a = batch_indices(100, 16, 3, 7);
  EXPECT_EQ(a, batch_indices(100, 16, 3, 7));
  EXPECT_NE(a, batch_indices(100, 16, 3, 8));
  std::set<std::size_t> unique(a.begin(), a.end());
  EXPECT_EQ(unique.size(), 16u);
  EXPECT_EQ(batch_indices(5, 16, 3, 0).size(), 5u);
}

TEST(Alignment, GradientMatchesFiniteDifferences) {
  const ModelConfig cfg = fixture::tiny_config();
  MultimodalModel model(cfg, 2);
  std::vector<ClipFeatures> feats;
  for (int k = 0; k < 4; ++k) feats.push_back(fixture::tiny_features(cfg, 40 + static_cast<std::uint64_t>(k)));
  std::vector<const ClipFeatures*> batch;
  for (const auto& f : feats) batch.push_back(&f);
  Gradients g = model.params().zeros_like();
  const double l = alignment_loss(model, batch, ModalitySet::all(), 0.07, &g);
  EXPECT_GT(l, 0.0);
  auto loss = [&](const ParamStore&) { return alignment_loss(model, batch, ModalitySet::all(), 0.07, nullptr); };
  const auto rep = grad_check(model.params(), g, loss, 250, 1e-5, 3);
  EXPECT_LT(rep.max_rel_error, 1e-4) << rep.worst_param;
}

TEST(Alignment, NeedsTwoModalitiesAndTwoClips) {
  const ModelConfig cfg = fixture::tiny_config();
  const MultimodalModel model(cfg, 2);
  const auto f = fixture::tiny_features(cfg, 1);
  try {
    alignment_loss(model, {&f, &f}, ModalitySet::parse("T"), 0.07, nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlignmentNotApplicable);
  }
  EXPECT_THROW(alignment_loss(model, {&f}, ModalitySet::all(), 0.07, nullptr), Error);
}

TEST(Finetune, LossDecreasesAndLogs) {
  const ModelConfig cfg = fixture::tiny_config();
  const auto data = tiny_dataset(cfg, 18);
  Checkpoint ck = fresh_checkpoint(cfg);
  TrainConfig tc;
  tc.max_steps = 60;
  tc.batch_size = 18;
  tc.lr = 1e-2;
  std::size_t observed = 0;
  const auto res = finetune(ck, data, tc, [&](const StepLog&) { ++observed; });
  EXPECT_EQ(observed, 60u);
  EXPECT_EQ(res.final_step, 60u);
  EXPECT_LT(res.log.back().loss, 0.5 * res.log.front().loss);
  const std::string csv = format_loss_log(res.log);
  EXPECT_EQ(csv.rfind("step,loss,lr\n1,", 0), 0u);
}

TEST(Finetune, EarlyStopOnTrainAccuracy) {
  const ModelConfig cfg = fixture::tiny_config();
  const auto data = tiny_dataset(cfg, 9);
  Checkpoint ck = fresh_checkpoint(cfg);
  TrainConfig tc;
  tc.max_steps = 300;
  tc.batch_size = 9;
  tc.lr = 1e-2;
  tc.stop_train_accuracy = 1.0;
  tc.check_every = 5;
  const auto res = finetune(ck, data, tc);
  EXPECT_TRUE(res.stopped_early);
  EXPECT_EQ(res.final_step % 5, 0u);
  EXPECT_DOUBLE_EQ(accuracy(ck.model, data, ck.modalities), 1.0);
}

TEST(Finetune, ResumeMatchesUninterruptedRun) {
  const ModelConfig cfg = fixture::tiny_config();
  const auto data = tiny_dataset(cfg, 12);
  TrainConfig tc;
  tc.batch_size = 4;
  tc.max_steps = 8;
  Checkpoint full = fresh_checkpoint(cfg);
  finetune(full, data, tc);

  Checkpoint part = fresh_checkpoint(cfg);
  TrainConfig first = tc;
  first.max_steps = 3;
  finetune(part, data, first);
  Checkpoint resumed = decode_checkpoint(encode_checkpoint(part));
  finetune(resumed, data, tc);
  EXPECT_EQ(resumed.step, 8u);
  for (std::size_t k = 0; k < full.model.params().size(); ++k) {
    EXPECT_EQ(resumed.model.params()[k], full.model.params()[k]) << full.model.params().entry(k).name;
  }
}

TEST(Finetune, ThreadCountDoesNotChangeResults) {
  const ModelConfig cfg = fixture::tiny_config();
  const auto data = tiny_dataset(cfg, 8);
  std::vector<double> losses;
  Gradients g1 = MultimodalModel(cfg, 1).params().zeros_like();
  Gradients g4 = g1;
  const MultimodalModel model(cfg, 1);
  std::vector<std::size_t> idx{0, 1, 2, 3, 4, 5, 6, 7};
  setenv("MMW2S_THREADS", "1", 1);
  const double l1 = batch_loss(model, data, idx, ModalitySet::all(), 2.0, 0.5, &g1);
  setenv("MMW2S_THREADS", "4", 1);
  const double l4 = batch_loss(model, data, idx, ModalitySet::all(), 2.0, 0.5, &g4);
  unsetenv("MMW2S_THREADS");
  EXPECT_EQ(l1, l4);
  for (std::size_t k = 0; k < g1.size(); ++k) EXPECT_EQ(g1[k], g4[k]);
}

TEST(Checkpoint, RoundTripIsByteIdentical) {
  const ModelConfig cfg = fixture::tiny_config();
  Checkpoint ck = fresh_checkpoint(cfg);
  ck.modalities = ModalitySet::parse("A+T");
  ck.run_config = {{"seed", 3}};
  TrainConfig tc;
  tc.max_steps = 2;
  tc.batch_size = 2;
  finetune(ck, tiny_dataset(cfg, 4), tc);
  const std::string bytes = encode_checkpoint(ck);
  EXPECT_EQ(bytes.substr(0, 8), "MMW2SCK1");
  const Checkpoint back = decode_checkpoint(bytes);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  EXPECT_EQ(back.modalities, ck.modalities);
  EXPECT_EQ(back.step, 2u);
  ASSERT_TRUE(back.optimizer.has_value());
  EXPECT_EQ(back.optimizer->step, 2u);
  EXPECT_EQ(checkpoint_id(back), checkpoint_id(ck));
}

TEST(Checkpoint, CorruptionIsDetected) {
  const Checkpoint ck = fresh_checkpoint(fixture::tiny_config());
  std::string bytes = encode_checkpoint(ck);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(decode_checkpoint(bad_magic), Error);
  try {
    decode_checkpoint(bytes.substr(0, bytes.size() - 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.alpha = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = TrainConfig{};
  c.beta2 = 1.0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(nlohmann::json(TrainConfig::full_scale()).get<TrainConfig>().lr, 1e-5);
}
