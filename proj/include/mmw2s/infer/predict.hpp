#pragma once

#include <array>
#include <string>

#include "json.hpp"
#include "mmw2s/train/checkpoint.hpp"
#include "mmw2s/train/finetune.hpp"

namespace mmw2s {

struct Prediction {
  ResponseLabel label = ResponseLabel::kSilence;
  std::array<double, kNumLabels> probs{};
};

inline Prediction prediction_from_logits(const Logits& z) {
  const RowVec p = softmax(z);
  Prediction out;
  for (std::size_t k = 0; k < kNumLabels; ++k) out.probs[k] = p(static_cast<Eigen::Index>(k));
  out.label = label_at(argmax_label(p));
  return out;
}

inline Prediction predict_features(const MultimodalModel& model, const ClipFeatures& f, ModalitySet mask) {
  return prediction_from_logits(model.forward(f, mask));
}

/// Throws kIncompatible when the caller's frontend differs from the one the
/// checkpoint was trained with.
inline void require_compatible(const Checkpoint& ck, const FrontendConfig& fe) {
  if (!(ck.frontend == fe)) {
    fail(ErrorCode::kIncompatible, "frontend config " + nlohmann::json(fe).dump() +
                                       " does not match checkpoint frontend " + nlohmann::json(ck.frontend).dump());
  }
}

inline void require_compatible_rate(const Checkpoint& ck, double sample_rate) {
  require(sample_rate == ck.frontend.mel.sample_rate, ErrorCode::kIncompatible,
          "audio sample rate " + std::to_string(sample_rate) + " does not match checkpoint rate " +
              std::to_string(ck.frontend.mel.sample_rate));
}

inline Prediction predict_clip(const Clip& clip, const Checkpoint& ck, const FrontendConfig& fe, ModalitySet mask) {
  require_compatible(ck, fe);
  return predict_features(ck.model, extract_features(clip, fe, ck.model.config()), mask);
}

inline Prediction predict_clip(const Clip& clip, const Checkpoint& ck, ModalitySet mask) {
  return predict_clip(clip, ck, ck.frontend, mask);
}

}  // namespace mmw2s
