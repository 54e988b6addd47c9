#pragma once

// Self-checks shared by `mmw2s verify` and the acceptance runner. Each one
// compares the library against an oracle from oracles.hpp or a hand-derived
// constant.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "mmw2s/corpus/synth.hpp"
#include "mmw2s/eval/metrics.hpp"
#include "mmw2s/model/features.hpp"
#include "mmw2s/model/model.hpp"
#include "mmw2s/train/adamw.hpp"
#include "mmw2s/train/focal_loss.hpp"
#include "mmw2s/train/grad_check.hpp"
#include "mmw2s/verify/oracles.hpp"

namespace mmw2s {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

namespace check_detail {

template <class... Args>
std::string format(const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

template <class Fn>
CheckResult timed(const std::string& name, Fn&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  CheckResult r{name, false, "", 0.0};
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace check_detail

/// window_count / clip_end_time against enumeration on 1000 random configs,
/// plus the 60 s / 10 s / 0.5 s case.
inline CheckResult check_windowing(std::uint64_t seed = 42) {
  return check_detail::timed("windowing", [&](CheckResult& r) {
    Rng rng(seed);
    for (int trial = 0; trial < 1000; ++trial) {
      WindowConfig cfg;
      cfg.window_s = trial % 2 ? rng.uniform(0.5, 20.0) : 0.5 * static_cast<double>(1 + rng.below(40));
      cfg.stride_s = trial % 3 ? rng.uniform(0.05, 3.0) : 0.1 * static_cast<double>(1 + rng.below(20));
      const double duration = trial % 4 ? rng.uniform(0.0, 120.0) : 0.5 * static_cast<double>(rng.below(200));
      const auto expected = oracle::enumerate_window_ends(duration, cfg.window_s, cfg.stride_s);
      if (window_count(duration, cfg) != expected.size()) {
        r.detail = check_detail::format("count mismatch at trial %d (duration %.6f)", trial, duration);
        return;
      }
      for (std::size_t i = 0; i < expected.size(); ++i) {
        if (clip_end_time(i + 1, cfg) != expected[i]) {
          r.detail = check_detail::format("t_%zu mismatch at trial %d", i + 1, trial);
          return;
        }
      }
    }
    const WindowConfig w;
    const std::size_t n = window_count(60.0, w);
    if (n != 101 || clip_end_time(1, w) != 10.0 || clip_end_time(101, w) != 60.0) {
      r.detail = check_detail::format("60 s timeline gave %zu clips", n);
      return;
    }
    r.passed = true;
    r.detail = "1000 random configs agree; 60 s gives 101 clips at 10.0..60.0";
  });
}

/// derive_action against the event-scan oracle on 1000 random dyads, 20
/// decision times each.
inline CheckResult check_labels(std::uint64_t seed = 2024) {
  return check_detail::timed("label derivation", [&](CheckResult& r) {
    Rng rng(seed);
    const LabelRuleConfig rules;
    std::size_t checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const auto events = oracle::random_dyad(rng, 60.0);
      const DiarizationTrack track(events);
      for (int k = 0; k < 20; ++k) {
        const double t_end = 0.1 * static_cast<double>(rng.below(600));
        if (derive_action(track, "B", t_end, rules).action != oracle::derive_action(events, "B", t_end, rules)) {
          r.detail = check_detail::format("disagreement at trial %d, t_end %.1f", trial, t_end);
          return;
        }
        ++checked;
      }
    }
    r.passed = true;
    r.detail = check_detail::format("%zu decisions over 1000 timelines agree", checked);
  });
}

/// Central differences on the default toy model over one synthetic clip.
inline CheckResult check_gradients(std::size_t coords = 200) {
  return check_detail::timed("gradient check", [&](CheckResult& r) {
    SynthConfig sc;
    sc.n_sources = 1;
    sc.min_duration_s = sc.max_duration_s = 30.0;
    sc.seed = 5;
    const Corpus corpus = synth_corpus(sc);
    const FrontendConfig fe;
    MultimodalModel model(model_config_for(fe), 1);
    const ClipFeatures f = extract_features(extract_clip(corpus.sources[0].timeline, 25, sc.window), fe, model.config());
    const ModalitySet mask = ModalitySet::all();
    const std::size_t gold = 4;
    MultimodalModel::ForwardCache cache;
    const Logits z = model.forward(f, mask, cache);
    Gradients g = model.params().zeros_like();
    model.backward(cache, focal_loss(z, gold, 2.0, 0.5).dlogits, g);
    auto loss = [&](const ParamStore&) { return focal_loss(model.forward(f, mask), gold, 2.0, 0.5).loss; };
    const GradCheckReport rep = grad_check(model.params(), g, loss, coords, 1e-5, 7);
    r.passed = rep.max_rel_error < 1e-4 && rep.coords_checked >= coords;
    r.detail = check_detail::format("max relative error %.3g over %zu coordinates (worst %s)", rep.max_rel_error,
                                    rep.coords_checked, rep.worst_param.c_str());
  });
}

inline CheckResult check_focal_values() {
  return check_detail::timed("focal loss values", [&](CheckResult& r) {
    const double at_one = focal_loss_value(1.0, 2.0, 0.5);
    // 9 logits with the gold one at log 8 gives p_t = 0.5
    RowVec z = RowVec::Zero(kNumLabels);
    z(2) = std::log(8.0);
    const double half = focal_loss(z, 2, 2.0, 0.5).loss;
    double worst_ce = 0.0;
    Rng rng(3);
    for (int k = 0; k < 200; ++k) {
      RowVec l(kNumLabels);
      std::vector<double> lv(kNumLabels);
      for (std::size_t c = 0; c < kNumLabels; ++c) lv[c] = l(static_cast<Eigen::Index>(c)) = 3.0 * rng.normal();
      const std::size_t gold = rng.below(kNumLabels);
      const double ce = oracle::focal_loss(lv, gold, 0.0, 1.0);
      worst_ce = std::max(worst_ce, std::abs(focal_loss(l, gold, 0.0, 1.0).loss - ce));
    }
    r.passed = at_one == 0.0 && worst_ce <= 1e-12 && std::abs(half - 0.0866434) <= 1e-6;
    r.detail = check_detail::format("FL(1)=%g, FL(0.5; 2, 0.5)=%.7f, max |FL(gamma 0, alpha 1) - CE| = %.2g", at_one,
                                    half, worst_ce);
  });
}

/// w = 1, g = 0.1, lr = 0.01, other hyperparameters at their defaults.
inline CheckResult check_adamw_step() {
  return check_detail::timed("AdamW first step", [&](CheckResult& r) {
    ParamStore ps;
    ps.add("w", 1, 1);
    ps.mutable_value(0)(0, 0) = 1.0;
    TrainConfig cfg;
    cfg.lr = 0.01;
    OptimizerState st = OptimizerState::for_params(ps);
    adamw_step(ps, Gradients{Mat::Constant(1, 1, 0.1)}, st, cfg);
    const double w = ps[0](0, 0);
    const double want = oracle::adamw_first_step(1.0, 0.1, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay);
    r.passed = std::abs(w - 0.989900) <= 1e-6 && std::abs(w - want) <= 1e-15;
    r.detail = check_detail::format("w = %.9f (hand-derived %.9f)", w, want);
  });
}

inline CheckResult check_metrics(std::uint64_t seed = 99) {
  return check_detail::timed("metrics", [&](CheckResult& r) {
    using L = ResponseLabel;
    auto confusion = [](const std::vector<L>& gold, const std::vector<L>& pred) {
      ConfusionMatrix cm;
      for (std::size_t k = 0; k < gold.size(); ++k) cm.accumulate(gold[k], pred[k]);
      return cm;
    };
    Rng rng(seed);
    double worst_row = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const std::size_t n = 1 + rng.below(200);
      const std::size_t span = 1 + rng.below(kNumLabels);
      std::vector<L> gold(n), pred(n);
      for (std::size_t k = 0; k < n; ++k) {
        gold[k] = label_at(rng.below(span));
        pred[k] = rng.below(3) == 0 ? gold[k] : label_at(rng.below(kNumLabels));
      }
      const ConfusionMatrix cm = confusion(gold, pred);
      const auto got = class_metrics(cm);
      const auto want = oracle::class_metrics(gold, pred);
      for (std::size_t c = 0; c < kNumLabels; ++c) {
        if (got[c].precision != want[c].precision || got[c].recall != want[c].recall || got[c].f1 != want[c].f1) {
          r.detail = check_detail::format("class %zu differs at trial %d", c, trial);
          return;
        }
      }
      const auto norm = row_normalize(cm);
      for (std::size_t row = 0; row < kNumLabels; ++row) {
        double s = 0.0;
        for (double v : norm[row]) s += v;
        if (s != 0.0) worst_row = std::max(worst_row, std::abs(s - 1.0));
      }
    }
    const auto m = class_metrics(
        confusion({L::kAffirmation, L::kSilence, L::kSilence}, {L::kAffirmation, L::kAffirmation, L::kSilence}));
    const auto a = m[index_of(L::kAffirmation)], s = m[index_of(L::kSilence)];
    const bool worked = a.precision == 0.5 && a.recall == 1.0 && s.precision == 1.0 && s.recall == 0.5;
    r.passed = worked && worst_row <= 1e-9;
    r.detail = check_detail::format(
        "1000 sequences agree; affm. P=%.2f R=%.2f, slnc. P=%.2f R=%.2f; max |row sum - 1| = %.2g", a.precision,
        a.recall, s.precision, s.recall, worst_row);
  });
}

/// Everything above, in a fixed order.
inline std::vector<CheckResult> run_all_checks() {
  return {check_windowing(), check_labels(), check_gradients(), check_focal_values(), check_adamw_step(),
          check_metrics()};
}

}  // namespace mmw2s
