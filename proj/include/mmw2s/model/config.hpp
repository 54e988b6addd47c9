#pragma once

#include <array>
#include <cctype>
#include <initializer_list>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mmw2s/common/error.hpp"
#include "mmw2s/frontend/log_mel.hpp"
#include "mmw2s/frontend/tokenizer.hpp"

namespace mmw2s {

enum class Modality : std::uint8_t { kVideo = 0, kAudio = 1, kText = 2 };
inline constexpr std::size_t kNumModalities = 3;
inline constexpr std::array<Modality, kNumModalities> kAllModalities = {Modality::kVideo, Modality::kAudio,
                                                                        Modality::kText};

inline const char* modality_name(Modality m) {
  switch (m) {
    case Modality::kVideo: return "video";
    case Modality::kAudio: return "audio";
    case Modality::kText: return "text";
  }
  return "?";
}

/// Bit set over {video, audio, text}.
class ModalitySet {
 public:
  constexpr ModalitySet() = default;
  static constexpr ModalitySet all() { return ModalitySet(0b111); }
  static constexpr ModalitySet none() { return ModalitySet(0); }
  static constexpr ModalitySet of(std::initializer_list<Modality> ms) {
    std::uint8_t bits = 0;
    for (auto m : ms) bits |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(m));
    return ModalitySet(bits);
  }

  constexpr bool has(Modality m) const { return (bits_ >> static_cast<unsigned>(m)) & 1u; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::size_t size() const { return (bits_ & 1u) + ((bits_ >> 1) & 1u) + ((bits_ >> 2) & 1u); }
  constexpr ModalitySet with(Modality m) const {
    return ModalitySet(static_cast<std::uint8_t>(bits_ | (1u << static_cast<unsigned>(m))));
  }
  constexpr ModalitySet intersect(ModalitySet o) const { return ModalitySet(bits_ & o.bits_); }
  constexpr bool operator==(const ModalitySet&) const = default;

  /// "V+A+T" style, in video/audio/text order.
  std::string short_name() const {
    std::string out;
    for (auto m : kAllModalities) {
      if (!has(m)) continue;
      if (!out.empty()) out += '+';
      out += static_cast<char>(modality_name(m)[0] - 'a' + 'A');
    }
    return out.empty() ? "none" : out;
  }

  /// "video,audio,text" style.
  std::string to_string() const {
    std::string out;
    for (auto m : kAllModalities) {
      if (!has(m)) continue;
      if (!out.empty()) out += ',';
      out += modality_name(m);
    }
    return out;
  }

  /// Accepts comma or plus separated names, full ("audio") or initial ("A").
  static ModalitySet parse(std::string_view text) {
    ModalitySet out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find_first_of(",+", pos);
      if (end == std::string_view::npos) end = text.size();
      std::string item(text.substr(pos, end - pos));
      for (auto& c : item) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (item == "video" || item == "v") {
        out = out.with(Modality::kVideo);
      } else if (item == "audio" || item == "a") {
        out = out.with(Modality::kAudio);
      } else if (item == "text" || item == "t") {
        out = out.with(Modality::kText);
      } else if (!item.empty()) {
        fail(ErrorCode::kUsage, "unknown modality '" + item + "'");
      }
      pos = end + 1;
    }
    require(!out.empty(), ErrorCode::kUsage, "modality list is empty");
    return out;
  }

 private:
  constexpr explicit ModalitySet(std::uint8_t bits) : bits_(bits) {}
  std::uint8_t bits_ = 0;
};

/// Feature extraction settings that a checkpoint depends on.
struct FrontendConfig {
  MelConfig mel;
  double video_fps = 2.0;
  std::size_t max_text_tokens = kDefaultMaxTextTokens;

  void validate() const {
    mel.validate();
    require(video_fps > 0.0, ErrorCode::kInvalidConfig, "video fps must be positive");
    require(max_text_tokens >= 1, ErrorCode::kInvalidConfig, "max_text_tokens must be positive");
  }
  bool operator==(const FrontendConfig& o) const {
    return nlohmann::json(*this) == nlohmann::json(o);
  }

  friend void to_json(nlohmann::json& j, const FrontendConfig& c) {
    j = nlohmann::json{{"mel", c.mel}, {"video_fps", c.video_fps}, {"max_text_tokens", c.max_text_tokens}};
  }
  friend void from_json(const nlohmann::json& j, FrontendConfig& c) {
    FrontendConfig d;
    c.mel = j.value("mel", d.mel);
    c.video_fps = j.value("video_fps", d.video_fps);
    c.max_text_tokens = j.value("max_text_tokens", d.max_text_tokens);
  }
};

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_fusion_blocks = 2;
  std::size_t n_audio_blocks = 2;
  std::vector<std::size_t> audio_strides = {1, 2, 1, 2};
  std::size_t n_mels = 40;
  /// Patches per frame; must be a perfect square.
  std::size_t video_tokens_per_frame = 4;
  /// Mean-pool grid inside each patch (pool x pool cells per channel).
  std::size_t video_pool = 2;
  std::size_t video_channels = 3;
  std::size_t vocab_size = 0;
  std::size_t max_text_tokens = kDefaultMaxTextTokens;
  std::size_t mlp_ratio = 2;
  /// Self-attention fusion blocks on/off; off concatenates adapted tokens.
  bool attention = true;

  std::size_t video_grid() const {
    std::size_t g = 1;
    while (g * g < video_tokens_per_frame) ++g;
    return g;
  }
  std::size_t video_patch_dim() const { return video_pool * video_pool * video_channels; }

  void validate() const {
    require(d_model >= 1 && n_heads >= 1 && d_model % n_heads == 0, ErrorCode::kInvalidConfig,
            "d_model must be divisible by n_heads");
    std::size_t product = 1;
    for (auto s : audio_strides) {
      require(s >= 1, ErrorCode::kInvalidConfig, "audio strides must be positive");
      product *= s;
    }
    require(product == 4, ErrorCode::kInvalidConfig, "audio stride product must be 4");
    require(video_grid() * video_grid() == video_tokens_per_frame, ErrorCode::kInvalidConfig,
            "video tokens per frame must be a perfect square");
    require(video_pool >= 1 && video_channels >= 1, ErrorCode::kInvalidConfig, "bad video pooling config");
    require(vocab_size >= 1, ErrorCode::kInvalidConfig, "vocab_size must be positive");
    require(max_text_tokens >= 1 && n_mels >= 1 && mlp_ratio >= 1, ErrorCode::kInvalidConfig, "bad model sizes");
  }

  /// Dimensions named in the source architecture, kept for documentation;
  /// not trainable on a desk machine.
  static ModelConfig full_scale() {
    ModelConfig c;
    c.d_model = 4096;
    c.n_heads = 32;
    c.n_audio_blocks = 24;
    c.video_tokens_per_frame = 256;
    c.vocab_size = default_vocabulary().size();
    return c;
  }

  bool operator==(const ModelConfig& o) const { return nlohmann::json(*this) == nlohmann::json(o); }

  friend void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"d_model", c.d_model},
                       {"n_heads", c.n_heads},
                       {"n_fusion_blocks", c.n_fusion_blocks},
                       {"n_audio_blocks", c.n_audio_blocks},
                       {"audio_strides", c.audio_strides},
                       {"n_mels", c.n_mels},
                       {"video_tokens_per_frame", c.video_tokens_per_frame},
                       {"video_pool", c.video_pool},
                       {"video_channels", c.video_channels},
                       {"vocab_size", c.vocab_size},
                       {"max_text_tokens", c.max_text_tokens},
                       {"mlp_ratio", c.mlp_ratio},
                       {"attention", c.attention}};
  }
  friend void from_json(const nlohmann::json& j, ModelConfig& c) {
    ModelConfig d;
    c.d_model = j.value("d_model", d.d_model);
    c.n_heads = j.value("n_heads", d.n_heads);
    c.n_fusion_blocks = j.value("n_fusion_blocks", d.n_fusion_blocks);
    c.n_audio_blocks = j.value("n_audio_blocks", d.n_audio_blocks);
    c.audio_strides = j.value("audio_strides", d.audio_strides);
    c.n_mels = j.value("n_mels", d.n_mels);
    c.video_tokens_per_frame = j.value("video_tokens_per_frame", d.video_tokens_per_frame);
    c.video_pool = j.value("video_pool", d.video_pool);
    c.video_channels = j.value("video_channels", d.video_channels);
    c.vocab_size = j.value("vocab_size", d.vocab_size);
    c.max_text_tokens = j.value("max_text_tokens", d.max_text_tokens);
    c.mlp_ratio = j.value("mlp_ratio", d.mlp_ratio);
    c.attention = j.value("attention", d.attention);
  }
};

/// Model config consistent with a frontend and the default vocabulary.
inline ModelConfig model_config_for(const FrontendConfig& fe, ModelConfig base = {}) {
  base.n_mels = fe.mel.n_mels;
  base.max_text_tokens = fe.max_text_tokens;
  if (base.vocab_size == 0) base.vocab_size = default_vocabulary().size();
  return base;
}

}  // namespace mmw2s
