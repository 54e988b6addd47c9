#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmw2s/corpus/builder.hpp"
#include "mmw2s/corpus/synth.hpp"
#include "mmw2s/model/config.hpp"
#include "mmw2s/train/config.hpp"

namespace mmw2s {

struct BuildConfig {
  /// "short_clips" or "full_videos".
  std::string mode = "short_clips";
  ClipQuota quota = ClipQuota::full_scale();
  double split_ratio = 0.7;
};

struct EvalConfig {
  /// "short_clips" or "full_videos".
  std::string mode = "short_clips";
  std::vector<std::uint64_t> ablation_seeds = {1, 2, 3};
};

/// Config file + flags, resolved once before a subcommand runs. The single
/// seed drives synthesis, clip sampling, model init and batch order.
struct RunConfig {
  std::uint64_t seed = 0;
  /// Used for training, evaluation and streaming.
  ModalitySet modalities = ModalitySet::all();
  WindowConfig window;
  SynthConfig synth;
  LabelRuleConfig rules;
  BuildConfig build;
  FrontendConfig frontend;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  /// Set when the rules section names horizon_s; otherwise it follows the stride.
  bool explicit_horizon = false;

  /// Copies shared values into the sections and checks every section.
  /// Contradictions and invalid values are usage errors.
  void resolve() {
    synth.window = window;
    synth.seed = seed;
    train.seed = seed;
    if (!explicit_horizon) rules.horizon_s = window.stride_s;
    require(model.n_mels == 0 || model.n_mels == frontend.mel.n_mels, ErrorCode::kUsage,
            "model.n_mels contradicts frontend.mel.n_mels");
    require(model.max_text_tokens == 0 || model.max_text_tokens == frontend.max_text_tokens, ErrorCode::kUsage,
            "model.max_text_tokens contradicts frontend.max_text_tokens");
    model = model_config_for(frontend, model);
    require(build.mode == "short_clips" || build.mode == "full_videos", ErrorCode::kUsage,
            "build.mode must be short_clips or full_videos");
    require(eval.mode == "short_clips" || eval.mode == "full_videos", ErrorCode::kUsage,
            "eval.mode must be short_clips or full_videos");
    require(build.split_ratio > 0.0 && build.split_ratio <= 1.0, ErrorCode::kUsage, "split_ratio must be in (0, 1]");
    require(!eval.ablation_seeds.empty(), ErrorCode::kUsage, "ablation needs at least one seed");
    try {
      window.validate();
      synth.validate();
      rules.validate();
      frontend.validate();
      model.validate();
      train.validate();
    } catch (const Error& e) {
      fail(ErrorCode::kUsage, e.what());
    }
  }
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"seed", c.seed},
                     {"modalities", c.modalities.to_string()},
                     {"window", c.window},
                     {"synth", c.synth},
                     {"rules", c.rules},
                     {"build",
                      {{"mode", c.build.mode}, {"quota", c.build.quota.groups}, {"split_ratio", c.build.split_ratio}}},
                     {"frontend", c.frontend},
                     {"model", c.model},
                     {"train", c.train},
                     {"eval",
                      {{"mode", c.eval.mode},
                       {"ablation_seeds", c.eval.ablation_seeds}}}};
}

/// Missing keys keep their defaults; unknown top-level keys are rejected so
/// typos do not pass silently.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
  require(j.is_object(), ErrorCode::kUsage, "config must be a JSON object");
  static const std::vector<std::string> known = {"seed",  "modalities", "window", "synth", "rules",
                                                 "build", "frontend",   "model",  "train", "eval"};
  for (const auto& [key, _] : j.items()) {
    require(std::find(known.begin(), known.end(), key) != known.end(), ErrorCode::kUsage,
            "unknown config section '" + key + "'");
  }
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("modalities")) c.modalities = ModalitySet::parse(j["modalities"].get<std::string>());
    if (j.contains("window")) c.window = j["window"].get<WindowConfig>();
    if (j.contains("synth")) c.synth = j["synth"].get<SynthConfig>();
    if (j.contains("rules")) {
      c.rules = j["rules"].get<LabelRuleConfig>();
      c.explicit_horizon = j["rules"].contains("horizon_s");
    }
    if (j.contains("build")) {
      const auto& b = j["build"];
      c.build.mode = b.value("mode", c.build.mode);
      if (b.contains("quota")) c.build.quota.groups = b["quota"].get<std::vector<QuotaGroup>>();
      c.build.split_ratio = b.value("split_ratio", c.build.split_ratio);
    }
    if (j.contains("frontend")) c.frontend = j["frontend"].get<FrontendConfig>();
    if (j.contains("model")) {
      const auto& m = j["model"];
      c.model = m.get<ModelConfig>();
      // zero means "take it from the frontend"
      if (!m.contains("n_mels")) c.model.n_mels = 0;
      if (!m.contains("max_text_tokens")) c.model.max_text_tokens = 0;
    } else {
      c.model.n_mels = 0;
      c.model.max_text_tokens = 0;
    }
    if (j.contains("train")) c.train = j["train"].get<TrainConfig>();
    if (j.contains("eval")) {
      const auto& e = j["eval"];
      c.eval.mode = e.value("mode", c.eval.mode);
      c.eval.ablation_seeds = e.value("ablation_seeds", c.eval.ablation_seeds);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kUsage, std::string("bad config: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::kUsage, std::string("bad config: ") + e.what());
  }
  return c;
}

}  // namespace mmw2s
