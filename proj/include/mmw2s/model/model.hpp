#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mmw2s/labels.hpp"
#include "mmw2s/model/config.hpp"
#include "mmw2s/model/features.hpp"
#include "mmw2s/model/layers.hpp"

namespace mmw2s {

using Logits = RowVec;

/// Tokens from several modalities, concatenated. Masked rows take no part
/// in attention or pooling.
struct TokenBatch {
  Mat tokens;
  std::vector<Modality> tags;
  std::vector<bool> mask;  // true = token participates

  std::size_t size() const { return tags.size(); }
  std::size_t active() const {
    std::size_t n = 0;
    for (bool m : mask) n += m ? 1 : 0;
    return n;
  }
};

/// Encoder -> adaptor -> self-attention fusion -> classifier, with explicit
/// reverse-mode gradients.
class MultimodalModel {
 public:
  struct AudioCache {
    LayerNorm::Cache in_ln;
    std::vector<Conv1d::Cache> conv;
    std::vector<Mat> conv_pre;
    std::vector<TransformerBlock::Cache> blocks;
    LayerNorm::Cache out_ln;
  };
  struct AdaptorCache {
    Mat x, u, gu;
  };
  struct ModalityCache {
    bool present = false;
    Mat video_in;
    AudioCache audio;
    std::vector<std::uint32_t> text_ids;
    AdaptorCache adaptor;
    Mat adapted;
  };
  struct FusionCache {
    std::vector<Modality> tags;
    Mat x0;
    std::vector<TransformerBlock::Cache> blocks;
    LayerNorm::Cache out_ln;
    Mat fused;
  };
  struct ForwardCache {
    std::array<ModalityCache, kNumModalities> modality;
    FusionCache fusion;
    RowVec pooled;
  };

  MultimodalModel() = default;

  /// Builds the parameter layout and draws initial values from the seed.
  MultimodalModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(mix_seed(seed, fnv1a64("model-init")));
    const auto d = static_cast<Eigen::Index>(cfg_.d_model);

    video_proj_ = Linear::create(ps_, "video.proj", static_cast<Eigen::Index>(cfg_.video_patch_dim()), d, true, rng);

    audio_in_ln_ = LayerNorm::create(ps_, "audio.in_ln", static_cast<Eigen::Index>(cfg_.n_mels));
    Eigen::Index ch = static_cast<Eigen::Index>(cfg_.n_mels);
    for (std::size_t l = 0; l < cfg_.audio_strides.size(); ++l) {
      audio_conv_.push_back(Conv1d::create(ps_, "audio.conv" + std::to_string(l), ch, d, 3,
                                           static_cast<Eigen::Index>(cfg_.audio_strides[l]), rng));
      ch = d;
    }
    for (std::size_t b = 0; b < cfg_.n_audio_blocks; ++b) {
      audio_blocks_.push_back(
          TransformerBlock::create(ps_, "audio.block" + std::to_string(b), d, cfg_.n_heads, cfg_.mlp_ratio, rng));
    }
    audio_out_ln_ = LayerNorm::create(ps_, "audio.out_ln", d);

    text_embed_ = ps_.add("text.embed", static_cast<Eigen::Index>(cfg_.vocab_size), d);
    init_normal(ps_.mutable_value(text_embed_), 1.0 / std::sqrt(static_cast<double>(d)), rng);
    text_pos_ = ps_.add("text.pos", static_cast<Eigen::Index>(cfg_.max_text_tokens), d);
    init_normal(ps_.mutable_value(text_pos_), 0.02, rng);

    for (auto m : kAllModalities) {
      const std::string name = std::string("adaptor.") + modality_name(m);
      auto& a = adaptors_[static_cast<std::size_t>(m)];
      a[0] = Linear::create(ps_, name + ".fc1", d, d, true, rng);
      a[1] = Linear::create(ps_, name + ".fc2", d, d, true, rng);
    }

    type_embed_ = ps_.add("fusion.type", static_cast<Eigen::Index>(kNumModalities), d);
    init_normal(ps_.mutable_value(type_embed_), 0.02, rng);
    for (std::size_t b = 0; b < cfg_.n_fusion_blocks; ++b) {
      fusion_blocks_.push_back(
          TransformerBlock::create(ps_, "fusion.block" + std::to_string(b), d, cfg_.n_heads, cfg_.mlp_ratio, rng));
    }
    fusion_out_ln_ = LayerNorm::create(ps_, "fusion.out_ln", d);
    head_ = Linear::create(ps_, "head", d, static_cast<Eigen::Index>(kNumLabels), true, rng);
  }

  const ModelConfig& config() const { return cfg_; }
  const ParamStore& params() const { return ps_; }
  ParamStore& params() { return ps_; }

  // Encoders -----------------------------------------------------------------

  /// patches: (frames * k) x patch_dim, as produced by video_patch_features.
  /// Every patch of frame f gets the sinusoidal position of f.
  Mat encode_video(const Mat& patches, ModalityCache& c) const {
    const auto k = static_cast<Eigen::Index>(cfg_.video_tokens_per_frame);
    require(patches.cols() == static_cast<Eigen::Index>(cfg_.video_patch_dim()) && patches.rows() % k == 0,
            ErrorCode::kIncompatible, "video patch matrix does not match the model");
    c.video_in = patches;
    Mat x = video_proj_.forward(ps_, patches);
    const Mat pe = sinusoidal_positions(patches.rows() / k, x.cols());
    for (Eigen::Index r = 0; r < x.rows(); ++r) x.row(r) += pe.row(r / k);
    return x;
  }

  /// Fewer than 4 spectrogram frames gives no tokens.
  Mat encode_audio(const Mat& log_mel, ModalityCache& c) const {
    require(log_mel.cols() == static_cast<Eigen::Index>(cfg_.n_mels), ErrorCode::kIncompatible,
            "spectrogram has " + std::to_string(log_mel.cols()) + " mel bins, model expects " +
                std::to_string(cfg_.n_mels));
    if (log_mel.rows() < 4) return Mat(0, static_cast<Eigen::Index>(cfg_.d_model));
    AudioCache& a = c.audio;
    Mat x = audio_in_ln_.forward(ps_, log_mel, a.in_ln);
    a.conv.resize(audio_conv_.size());
    a.conv_pre.resize(audio_conv_.size());
    for (std::size_t l = 0; l < audio_conv_.size(); ++l) {
      a.conv_pre[l] = audio_conv_[l].forward(ps_, x, a.conv[l]);
      x = gelu(a.conv_pre[l]);
    }
    x += sinusoidal_positions(x.rows(), x.cols());
    a.blocks.resize(audio_blocks_.size());
    for (std::size_t b = 0; b < audio_blocks_.size(); ++b) x = audio_blocks_[b].forward(ps_, x, a.blocks[b]);
    return audio_out_ln_.forward(ps_, x, a.out_ln);
  }

  /// Row r gets position n - 1 - r: the most recent token is position 0.
  Mat encode_text(const std::vector<std::uint32_t>& ids, ModalityCache& c) const {
    require(ids.size() <= cfg_.max_text_tokens, ErrorCode::kIncompatible, "text longer than max_text_tokens");
    c.text_ids = ids;
    const auto n = static_cast<Eigen::Index>(ids.size());
    Mat out(n, static_cast<Eigen::Index>(cfg_.d_model));
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto id = ids[static_cast<std::size_t>(r)];
      require(id < cfg_.vocab_size, ErrorCode::kIncompatible, "token id outside the model vocabulary");
      out.row(r) = ps_[text_embed_].row(id) + ps_[text_pos_].row(n - 1 - r);
    }
    return out;
  }

  /// Linear -> GELU -> Linear, row-wise.
  Mat adapt(Modality m, const Mat& tokens, AdaptorCache& c) const {
    const auto& a = adaptors_[static_cast<std::size_t>(m)];
    c.x = tokens;
    c.u = a[0].forward(ps_, tokens);
    c.gu = gelu(c.u);
    return a[1].forward(ps_, c.gu);
  }

  /// Encodes and adapts every enabled modality that has input.
  void encode_modalities(const ClipFeatures& f, ModalitySet mask, ForwardCache& c) const {
    for (auto m : kAllModalities) {
      auto& mc = c.modality[static_cast<std::size_t>(m)];
      mc = ModalityCache{};
      if (!mask.has(m) || !f.has(m)) continue;
      Mat tokens;
      switch (m) {
        case Modality::kVideo: tokens = encode_video(*f.video_patches, mc); break;
        case Modality::kAudio: tokens = encode_audio(*f.log_mel, mc); break;
        case Modality::kText: tokens = encode_text(*f.text_ids, mc); break;
      }
      if (tokens.rows() == 0) continue;
      mc.present = true;
      mc.adapted = adapt(m, tokens, mc.adaptor);
    }
  }

  // Fusion and head ----------------------------------------------------------

  /// All rows of `tokens` participate. Adds the type embedding, then the
  /// attention blocks (when enabled) and a final LayerNorm.
  Mat fuse_rows(const Mat& tokens, const std::vector<Modality>& tags, FusionCache& c) const {
    require(tokens.rows() > 0, ErrorCode::kNoModality, "no tokens to fuse");
    c.tags = tags;
    c.x0 = tokens;
    for (Eigen::Index r = 0; r < tokens.rows(); ++r) {
      c.x0.row(r) += ps_[type_embed_].row(static_cast<Eigen::Index>(tags[static_cast<std::size_t>(r)]));
    }
    Mat x = c.x0;
    c.blocks.clear();
    if (cfg_.attention) {
      c.blocks.resize(fusion_blocks_.size());
      for (std::size_t b = 0; b < fusion_blocks_.size(); ++b) x = fusion_blocks_[b].forward(ps_, x, c.blocks[b]);
    }
    c.fused = fusion_out_ln_.forward(ps_, x, c.out_ln);
    return c.fused;
  }

  /// Masked rows are carried through unchanged.
  TokenBatch fuse(const TokenBatch& batch, FusionCache* cache = nullptr) const {
    require(batch.tags.size() == static_cast<std::size_t>(batch.tokens.rows()) && batch.mask.size() == batch.tags.size(),
            ErrorCode::kShapeMismatch, "token batch fields disagree in length");
    std::vector<Eigen::Index> rows;
    std::vector<Modality> tags;
    for (std::size_t r = 0; r < batch.size(); ++r) {
      if (batch.mask[r]) {
        rows.push_back(static_cast<Eigen::Index>(r));
        tags.push_back(batch.tags[r]);
      }
    }
    require(!rows.empty(), ErrorCode::kNoModality, "every token is masked");
    Mat active(static_cast<Eigen::Index>(rows.size()), batch.tokens.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) active.row(static_cast<Eigen::Index>(k)) = batch.tokens.row(rows[k]);
    FusionCache local;
    FusionCache& c = cache ? *cache : local;
    const Mat fused = fuse_rows(active, tags, c);
    TokenBatch out = batch;
    for (std::size_t k = 0; k < rows.size(); ++k) out.tokens.row(rows[k]) = fused.row(static_cast<Eigen::Index>(k));
    return out;
  }

  /// Mean over unmasked rows, then affine to 9 logits.
  Logits classify(const TokenBatch& fused) const {
    RowVec pooled = RowVec::Zero(fused.tokens.cols());
    std::size_t n = 0;
    for (std::size_t r = 0; r < fused.size(); ++r) {
      if (!fused.mask[r]) continue;
      pooled += fused.tokens.row(static_cast<Eigen::Index>(r));
      ++n;
    }
    require(n > 0, ErrorCode::kNoModality, "every token is masked");
    pooled /= static_cast<double>(n);
    return head_.forward(ps_, pooled);
  }

  // Full pass ------------------------------------------------------------------

  Logits forward(const ClipFeatures& f, ModalitySet mask, ForwardCache& c) const {
    require(!mask.empty(), ErrorCode::kNoModality, "all modalities are disabled");
    encode_modalities(f, mask, c);
    Eigen::Index n = 0;
    for (const auto& mc : c.modality) n += mc.present ? mc.adapted.rows() : 0;
    require(n > 0, ErrorCode::kNoModality, "no enabled modality has input for this clip");
    Mat tokens(n, static_cast<Eigen::Index>(cfg_.d_model));
    std::vector<Modality> tags;
    Eigen::Index row = 0;
    for (auto m : kAllModalities) {
      const auto& mc = c.modality[static_cast<std::size_t>(m)];
      if (!mc.present) continue;
      tokens.middleRows(row, mc.adapted.rows()) = mc.adapted;
      tags.insert(tags.end(), static_cast<std::size_t>(mc.adapted.rows()), m);
      row += mc.adapted.rows();
    }
    const Mat fused = fuse_rows(tokens, tags, c.fusion);
    c.pooled = fused.colwise().mean();
    return head_.forward(ps_, c.pooled);
  }

  Logits forward(const ClipFeatures& f, ModalitySet mask) const {
    ForwardCache c;
    return forward(f, mask, c);
  }

  /// Accumulates d(loss)/d(params) into g given d(loss)/d(logits).
  void backward(const ForwardCache& c, const Logits& dlogits, Gradients& g) const {
    const Mat dpooled = head_.backward(ps_, c.pooled, dlogits, g);
    const Eigen::Index n = c.fusion.fused.rows();
    Mat dfused = dpooled.replicate(n, 1) / static_cast<double>(n);
    Mat dx = fusion_out_ln_.backward(ps_, c.fusion.out_ln, dfused, g);
    for (std::size_t b = c.fusion.blocks.size(); b-- > 0;) dx = fusion_blocks_[b].backward(ps_, c.fusion.blocks[b], dx, g);
    for (Eigen::Index r = 0; r < n; ++r) {
      g[type_embed_].row(static_cast<Eigen::Index>(c.fusion.tags[static_cast<std::size_t>(r)])) += dx.row(r);
    }
    Eigen::Index row = 0;
    for (auto m : kAllModalities) {
      const auto& mc = c.modality[static_cast<std::size_t>(m)];
      if (!mc.present) continue;
      backward_modality(m, c, dx.middleRows(row, mc.adapted.rows()), g);
      row += mc.adapted.rows();
    }
  }

  /// Backpropagates d(loss)/d(adapted tokens) of one modality through its
  /// adaptor and encoder.
  void backward_modality(Modality m, const ForwardCache& c, const Mat& d_adapted, Gradients& g) const {
    const auto& mc = c.modality[static_cast<std::size_t>(m)];
    const auto& a = adaptors_[static_cast<std::size_t>(m)];
    const Mat dgu = a[1].backward(ps_, mc.adaptor.gu, d_adapted, g);
    const Mat dtok = a[0].backward(ps_, mc.adaptor.x, gelu_backward(mc.adaptor.u, dgu), g);
    switch (m) {
      case Modality::kVideo:
        video_proj_.backward(ps_, mc.video_in, dtok, g);
        break;
      case Modality::kAudio: {
        const AudioCache& ac = mc.audio;
        Mat dx = audio_out_ln_.backward(ps_, ac.out_ln, dtok, g);
        for (std::size_t b = audio_blocks_.size(); b-- > 0;) dx = audio_blocks_[b].backward(ps_, ac.blocks[b], dx, g);
        for (std::size_t l = audio_conv_.size(); l-- > 0;) {
          dx = audio_conv_[l].backward(ps_, ac.conv[l], gelu_backward(ac.conv_pre[l], dx), g);
        }
        audio_in_ln_.backward(ps_, ac.in_ln, dx, g);
        break;
      }
      case Modality::kText: {
        const auto n = static_cast<Eigen::Index>(mc.text_ids.size());
        for (Eigen::Index r = 0; r < n; ++r) {
          g[text_embed_].row(mc.text_ids[static_cast<std::size_t>(r)]) += dtok.row(r);
          g[text_pos_].row(n - 1 - r) += dtok.row(r);
        }
        break;
      }
    }
  }

 private:
  ModelConfig cfg_;
  ParamStore ps_;
  Linear video_proj_;
  LayerNorm audio_in_ln_;
  std::vector<Conv1d> audio_conv_;
  std::vector<TransformerBlock> audio_blocks_;
  LayerNorm audio_out_ln_;
  std::size_t text_embed_ = 0;
  std::size_t text_pos_ = 0;
  std::array<std::array<Linear, 2>, kNumModalities> adaptors_{};
  std::size_t type_embed_ = 0;
  std::vector<TransformerBlock> fusion_blocks_;
  LayerNorm fusion_out_ln_;
  Linear head_;
};

}  // namespace mmw2s
