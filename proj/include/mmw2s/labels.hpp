#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "mmw2s/common/error.hpp"

namespace mmw2s {

/// Response taxonomy. The numeric values are the canonical axis order of
/// every probability vector and confusion matrix in the library.
enum class ResponseLabel : std::uint8_t {
  kAffirmation = 0,
  kGratitude = 1,
  kFarewell = 2,
  kGreeting = 3,
  kQuestion = 4,
  kSurprise = 5,
  kPondering = 6,
  kFullResponse = 7,
  kSilence = 8,
};

inline constexpr std::size_t kNumLabels = 9;
inline constexpr std::size_t kNumReactions = 7;

inline constexpr std::array<std::string_view, kNumLabels> kLabelNames = {
    "affirmation", "gratitude", "farewell", "greeting",     "question",
    "surprise",    "pondering", "full_response", "silence"};

/// Short column headers used in report tables.
inline constexpr std::array<std::string_view, kNumLabels> kLabelAbbrev = {
    "Affm.", "Grat.", "Fare.", "Grtn.", "Qstn.", "Surp.", "Pndr.", "FR.", "slnc."};

constexpr std::size_t index_of(ResponseLabel label) { return static_cast<std::size_t>(label); }

constexpr ResponseLabel label_at(std::size_t index) {
  if (index >= kNumLabels) fail(ErrorCode::kInvalidIndex, "label index out of range");
  return static_cast<ResponseLabel>(index);
}

constexpr std::string_view label_name(ResponseLabel label) { return kLabelNames[index_of(label)]; }

constexpr bool is_reaction(ResponseLabel label) { return index_of(label) < kNumReactions; }

inline std::optional<ResponseLabel> parse_label(std::string_view name) {
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (kLabelNames[i] == name) return static_cast<ResponseLabel>(i);
  }
  return std::nullopt;
}

inline ResponseLabel label_from_name(std::string_view name) {
  auto label = parse_label(name);
  if (!label) fail(ErrorCode::kFormat, "unknown response label '" + std::string(name) + "'");
  return *label;
}

/// Coarse decision category produced by diarization labeling before reaction
/// subtyping.
enum class ListenerAction { kReaction, kFullResponse, kSilence };

constexpr std::string_view action_name(ListenerAction action) {
  switch (action) {
    case ListenerAction::kReaction: return "reaction";
    case ListenerAction::kFullResponse: return "full_response";
    case ListenerAction::kSilence: return "silence";
  }
  return "silence";
}

}  // namespace mmw2s
