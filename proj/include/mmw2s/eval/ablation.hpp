#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mmw2s/eval/evaluate.hpp"

namespace mmw2s {

/// Modality sets compared in the ablation table: T, A+T, V+T, V+A+T.
inline const std::array<ModalitySet, 4>& ablation_modalities() {
  static const std::array<ModalitySet, 4> sets = {
      ModalitySet::of({Modality::kText}), ModalitySet::of({Modality::kAudio, Modality::kText}),
      ModalitySet::of({Modality::kVideo, Modality::kText}), ModalitySet::all()};
  return sets;
}

struct AblationCell {
  ModalitySet modalities;
  bool attention = true;
  std::uint64_t seed = 0;
  EvalReport report;
  std::uint64_t steps = 0;
};

struct AblationResult {
  std::vector<AblationCell> cells;

  /// Median macro-F1 over the seeds of one (modalities, attention) cell.
  double median_macro_f1(ModalitySet m, bool attention) const {
    std::vector<double> v;
    for (const auto& c : cells) {
      if (c.modalities == m && c.attention == attention) v.push_back(c.report.macro_f1);
    }
    require(!v.empty(), ErrorCode::kInvalidConfig, "no ablation runs for " + m.short_name());
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  }
};

/// Trains one model (seeded init and batches) and scores it on `test`.
inline AblationCell run_ablation_cell(const std::vector<TrainExample>& train, const std::vector<TrainExample>& test,
                                      const FrontendConfig& fe, ModelConfig model_cfg, TrainConfig train_cfg,
                                      ModalitySet mask, bool attention, std::uint64_t seed) {
  model_cfg.attention = attention;
  train_cfg.seed = seed;
  Checkpoint ck;
  ck.model = MultimodalModel(model_cfg, seed);
  ck.frontend = fe;
  ck.modalities = mask;
  if (train_cfg.align_steps > 0 && mask.size() >= 2) align_pretrain(ck, train, train_cfg);
  const TrainResult tr = finetune(ck, train, train_cfg);
  AblationCell cell{mask, attention, seed, {}, tr.final_step};
  cell.report = evaluate_examples(ck.model, test, mask,
                                  {{"modalities", mask.to_string()}, {"attention", attention}, {"seed", seed}});
  return cell;
}

using AblationProgress = std::function<void(const AblationCell&)>;

/// Every modality set x {attention on, off} x seed.
inline AblationResult ablation_suite(const std::vector<TrainExample>& train, const std::vector<TrainExample>& test,
                                     const FrontendConfig& fe, const ModelConfig& model_cfg,
                                     const TrainConfig& train_cfg, const std::vector<std::uint64_t>& seeds,
                                     const AblationProgress& progress = {}) {
  AblationResult out;
  for (const auto& m : ablation_modalities()) {
    for (bool attention : {true, false}) {
      for (auto seed : seeds) {
        out.cells.push_back(run_ablation_cell(train, test, fe, model_cfg, train_cfg, m, attention, seed));
        if (progress) progress(out.cells.back());
      }
    }
  }
  return out;
}

/// One row per (variant, attention, seed, class), like a per-class table
/// repeated for every variant.
inline std::string ablation_table_csv(const AblationResult& r) {
  std::string out = "variant,attention,seed,class,precision,recall,f1\n";
  char buf[200];
  for (const auto& c : r.cells) {
    for (std::size_t k = 0; k <= kNumLabels; ++k) {
      const bool macro = k == kNumLabels;
      const double p = macro ? c.report.macro_precision : c.report.per_class[k].precision;
      const double rc = macro ? c.report.macro_recall : c.report.per_class[k].recall;
      const double f = macro ? c.report.macro_f1 : c.report.per_class[k].f1;
      std::snprintf(buf, sizeof(buf), "%s,%s,%llu,%s,%.6f,%.6f,%.6f\n", c.modalities.short_name().c_str(),
                    c.attention ? "on" : "off", static_cast<unsigned long long>(c.seed),
                    macro ? "macro" : kLabelAbbrev[k].data(), p, rc, f);
      out += buf;
    }
  }
  return out;
}

inline nlohmann::json ablation_to_json(const AblationResult& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    cells.push_back({{"modalities", c.modalities.short_name()},
                     {"attention", c.attention},
                     {"seed", c.seed},
                     {"steps", c.steps},
                     {"report", report_to_json(c.report)}});
  }
  nlohmann::json medians = nlohmann::json::object();
  for (const auto& m : ablation_modalities()) {
    for (bool a : {true, false}) {
      bool any = false;
      for (const auto& c : r.cells) any = any || (c.modalities == m && c.attention == a);
      if (any) medians[m.short_name() + (a ? "/attn" : "/no-attn")] = r.median_macro_f1(m, a);
    }
  }
  return {{"cells", cells}, {"median_macro_f1", medians}};
}

}  // namespace mmw2s
