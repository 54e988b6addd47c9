#pragma once

// Independent reference implementations, used by the unit tests and by
// `mmw2s verify`. They favour exhaustive scans over anything clever.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mmw2s/common/rng.hpp"
#include "mmw2s/corpus/diarization.hpp"
#include "mmw2s/labels.hpp"

namespace oracle {

/// Window end times by stepping i = 1, 2, ... and keeping t <= duration.
/// Times come from the same closed form so the comparison is exact.
inline std::vector<double> enumerate_window_ends(double duration, double window, double stride) {
  std::vector<double> out;
  for (std::size_t i = 1;; ++i) {
    const double t = window + static_cast<double>(i - 1) * stride;
    if (t > duration) break;
    out.push_back(t);
  }
  return out;
}

/// Scans every event for the anchor and for the other speaker's activity.
inline mmw2s::ListenerAction derive_action(const std::vector<mmw2s::DiarizationEvent>& events,
                                           const std::string& listener, double t_end,
                                           const mmw2s::LabelRuleConfig& rules) {
  const mmw2s::DiarizationEvent* anchor = nullptr;
  for (const auto& e : events) {
    if (e.speaker_id != listener) continue;
    if (!(e.onset_s > t_end && e.onset_s <= t_end + rules.horizon_s)) continue;
    if (anchor == nullptr || e.onset_s < anchor->onset_s) anchor = &e;
  }
  if (anchor == nullptr) return mmw2s::ListenerAction::kSilence;
  if (anchor->offset_s - anchor->onset_s > rules.brief_max_s) return mmw2s::ListenerAction::kFullResponse;
  for (const auto& e : events) {
    if (e.speaker_id == listener) continue;
    const bool speaking = e.onset_s <= anchor->onset_s && anchor->onset_s < e.offset_s;
    const bool resumes = e.onset_s > anchor->onset_s && e.onset_s <= anchor->offset_s + rules.resume_gap_s;
    if (speaking || resumes) return mmw2s::ListenerAction::kReaction;
  }
  return mmw2s::ListenerAction::kFullResponse;
}

/// Random two-speaker timeline on a coarse time grid so that boundary
/// coincidences (onset == t_end, gaps exactly resume_gap) actually occur.
inline std::vector<mmw2s::DiarizationEvent> random_dyad(mmw2s::Rng& rng, double duration) {
  std::vector<mmw2s::DiarizationEvent> events;
  const char* speakers[2] = {"A", "B"};
  for (int s = 0; s < 2; ++s) {
    double t = 0.1 * static_cast<double>(rng.below(30));
    while (t < duration) {
      const double len = 0.1 * static_cast<double>(1 + rng.below(s == 0 ? 80 : 35));
      events.push_back({speakers[s], t, t + len, ""});
      t += len + 0.1 * static_cast<double>(rng.below(30));
    }
  }
  return events;
}

struct Counts {
  double precision, recall, f1;
};

/// Per-class precision / recall / F1 by counting pairs directly.
inline std::array<Counts, mmw2s::kNumLabels> class_metrics(const std::vector<mmw2s::ResponseLabel>& gold,
                                                           const std::vector<mmw2s::ResponseLabel>& pred) {
  std::array<Counts, mmw2s::kNumLabels> out{};
  for (std::size_t c = 0; c < mmw2s::kNumLabels; ++c) {
    const auto label = static_cast<mmw2s::ResponseLabel>(c);
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t k = 0; k < gold.size(); ++k) {
      if (pred[k] == label && gold[k] == label) tp += 1;
      if (pred[k] == label && gold[k] != label) fp += 1;
      if (pred[k] != label && gold[k] == label) fn += 1;
    }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    out[c] = {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
  }
  return out;
}

/// First AdamW step for a scalar, written out term by term.
inline double adamw_first_step(double w, double g, double lr, double beta1, double beta2, double eps, double wd) {
  const double m = (1 - beta1) * g;
  const double v = (1 - beta2) * g * g;
  const double m_hat = m / (1 - beta1);
  const double v_hat = v / (1 - beta2);
  return w - lr * (m_hat / (std::sqrt(v_hat) + eps) + wd * w);
}

/// Focal loss from the unnormalized softmax, no shortcuts.
inline double focal_loss(const std::vector<double>& logits, std::size_t gold, double gamma, double alpha) {
  double denom = 0.0;
  for (double z : logits) denom += std::exp(z);
  const double pt = std::exp(logits[gold]) / denom;
  return -alpha * std::pow(1.0 - pt, gamma) * std::log(pt);
}

}  // namespace oracle
