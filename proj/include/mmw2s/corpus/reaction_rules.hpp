#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mmw2s/frontend/tokenizer.hpp"
#include "mmw2s/labels.hpp"

namespace mmw2s {

struct ReactionCategory {
  ResponseLabel label = ResponseLabel::kAffirmation;
  /// Set when the input text was empty and the default was applied.
  bool empty_text = false;
};

/// Maps the transcript of a brief listener utterance to one of the seven
/// reaction labels. Implementations must be deterministic.
class ReactionCategorizer {
 public:
  virtual ~ReactionCategorizer() = default;
  virtual ReactionCategory categorize(std::string_view text) const = 0;
};

struct ReactionRule {
  ResponseLabel label;
  /// Contiguous token sequences, e.g. {"thank", "you"}.
  std::vector<std::vector<std::string>> phrases;
  /// Words that trigger the rule when they open the utterance.
  std::vector<std::string> leading_words;
};

/// Rules in precedence order; the first match wins, affirmation otherwise.
struct ReactionRuleTable {
  std::vector<ReactionRule> rules;
};

inline const ReactionRuleTable& default_reaction_rules() {
  using P = std::vector<std::vector<std::string>>;
  static const ReactionRuleTable table{{
      {ResponseLabel::kGratitude,
       P{{"thank"}, {"thanks"}, {"thx"}, {"appreciate"}, {"grateful"}, {"cheers"}}, {}},
      {ResponseLabel::kFarewell,
       P{{"bye"}, {"goodbye"}, {"farewell"}, {"see", "you"}, {"see", "ya"}, {"take", "care"},
         {"good", "night"}, {"goodnight"}, {"later"}},
       {}},
      {ResponseLabel::kGreeting,
       P{{"hello"}, {"hi"}, {"hey"}, {"welcome"}, {"good", "morning"}, {"good", "afternoon"},
         {"good", "evening"}, {"nice", "to", "meet"}},
       {}},
      {ResponseLabel::kQuestion,
       P{{"?"}},
       {"what", "why", "how", "when", "where", "who", "which", "do", "does", "did", "is", "are", "can",
        "could", "would", "will"}},
      {ResponseLabel::kSurprise,
       P{{"wow"}, {"whoa"}, {"no", "way"}, {"oh", "my"}, {"omg"}, {"seriously"}, {"unbelievable"},
         {"amazing"}, {"incredible"}},
       {}},
      {ResponseLabel::kPondering,
       P{{"hmm"}, {"hm"}, {"hmmm"}, {"um"}, {"umm"}, {"erm"}, {"let", "me", "think"}, {"let", "me", "see"},
         {"i", "wonder"}},
       {}},
  }};
  return table;
}

inline bool contains_phrase(const std::vector<std::string>& words, const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > words.size()) return false;
  for (std::size_t start = 0; start + phrase.size() <= words.size(); ++start) {
    bool match = true;
    for (std::size_t k = 0; k < phrase.size() && match; ++k) match = words[start + k] == phrase[k];
    if (match) return true;
  }
  return false;
}

/// Case-insensitive keyword lookup over the tokenized utterance.
inline ReactionCategory classify_reaction(std::string_view text, const ReactionRuleTable& table) {
  const auto words = split_words(text);
  if (words.empty()) return {ResponseLabel::kAffirmation, true};
  for (const auto& rule : table.rules) {
    for (const auto& phrase : rule.phrases) {
      if (contains_phrase(words, phrase)) return {rule.label, false};
    }
    for (const auto& lead : rule.leading_words) {
      if (words.front() == lead) return {rule.label, false};
    }
  }
  return {ResponseLabel::kAffirmation, false};
}

class RuleTableCategorizer final : public ReactionCategorizer {
 public:
  explicit RuleTableCategorizer(ReactionRuleTable table = default_reaction_rules()) : table_(std::move(table)) {}

  ReactionCategory categorize(std::string_view text) const override { return classify_reaction(text, table_); }

 private:
  ReactionRuleTable table_;
};

}  // namespace mmw2s
