#pragma once

#include <cctype>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mmw2s/common/error.hpp"
#include "mmw2s/common/rng.hpp"
#include "mmw2s/timeline.hpp"

namespace mmw2s {

inline constexpr std::size_t kOovBuckets = 256;
inline constexpr std::size_t kDefaultMaxTextTokens = 64;

/// Lowercases and splits on whitespace; every punctuation character becomes
/// its own token.
inline std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char raw : text) {
    const auto c = static_cast<unsigned char>(raw);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c)) {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

/// Known words get ids [0, words); anything else hashes into one of
/// kOovBuckets ids after them.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
    for (std::size_t i = 0; i < words_.size(); ++i) {
      const bool inserted = index_.emplace(words_[i], static_cast<std::uint32_t>(i)).second;
      require(inserted, ErrorCode::kInvalidConfig, "duplicate vocabulary word '" + words_[i] + "'");
    }
  }

  std::size_t known_size() const { return words_.size(); }
  std::size_t size() const { return words_.size() + kOovBuckets; }

  std::uint32_t id_of(const std::string& token) const {
    if (auto it = index_.find(token); it != index_.end()) return it->second;
    return static_cast<std::uint32_t>(words_.size() + fnv1a64(token) % kOovBuckets);
  }

  bool is_oov(std::uint32_t id) const { return id >= words_.size(); }

  std::string word_of(std::uint32_t id) const {
    if (id < words_.size()) return words_[id];
    return "<oov" + std::to_string(id - words_.size()) + ">";
  }

  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

inline const Vocabulary& default_vocabulary() {
  static const Vocabulary vocab(std::vector<std::string>{
      ",", ".", "?", "!", "'", "-",
      // continuation and function words
      "and", "so", "then", "because", "also", "the", "a", "an", "was", "we", "it", "i", "you",
      "he", "she", "they", "is", "are", "to", "of", "in", "on", "that", "this", "with", "but",
      "like", "just", "really", "well", "oh", "my", "me", "there", "do", "did", "can", "how",
      "why", "when", "where", "who", "come", "go", "see", "good", "nice", "morning", "night",
      // listener reactions
      "yeah", "yes", "right", "okay", "sure", "exactly", "uh", "huh", "mm", "hmm", "um", "thank",
      "thanks", "much", "appreciate", "bye", "goodbye", "later", "take", "care", "hello", "hi",
      "hey", "wow", "no", "way", "god", "let", "think", "wait", "what",
      // speaker cue words
      "agree", "obviously", "know", "gift", "helped", "favor", "brought", "leave", "late",
      "goodnight", "going", "arrived", "meet", "welcome", "guess", "secret", "happened", "wonder",
      "won", "lottery", "unbelievable", "promoted", "puzzle", "riddle", "tricky", "choose",
      "opinion", "your"});
  return vocab;
}

struct TokenSequence {
  std::vector<std::uint32_t> ids;
  std::vector<std::string> tokens;
  std::size_t max_length = kDefaultMaxTextTokens;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
};

inline TokenSequence make_token_sequence(std::vector<std::string> words, const Vocabulary& vocab,
                                         std::size_t max_length) {
  TokenSequence seq;
  seq.max_length = max_length;
  if (words.size() > max_length) {
    words.erase(words.begin(), words.end() - static_cast<std::ptrdiff_t>(max_length));
  }
  seq.ids.reserve(words.size());
  for (const auto& w : words) seq.ids.push_back(vocab.id_of(w));
  seq.tokens = std::move(words);
  return seq;
}

/// Keeps the most recent `max_length` tokens.
inline TokenSequence tokenize(std::string_view text, const Vocabulary& vocab,
                              std::size_t max_length = kDefaultMaxTextTokens) {
  return make_token_sequence(split_words(text), vocab, max_length);
}

/// Tokenizes each timed word in order and applies the same suffix cap.
inline TokenSequence tokenize_timed(std::span<const TimedToken> words, const Vocabulary& vocab,
                                    std::size_t max_length = kDefaultMaxTextTokens) {
  std::vector<std::string> pieces;
  for (const auto& w : words) {
    auto split = split_words(w.token);
    pieces.insert(pieces.end(), std::make_move_iterator(split.begin()), std::make_move_iterator(split.end()));
  }
  return make_token_sequence(std::move(pieces), vocab, max_length);
}

inline std::string detokenize(const TokenSequence& seq, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t k = 0; k < seq.ids.size(); ++k) {
    if (k) out.push_back(' ');
    out += vocab.word_of(seq.ids[k]);
  }
  return out;
}

}  // namespace mmw2s
