#pragma once

// Small models and hand-built features shared by the unit tests.

#include <cstdint>
#include <vector>

#include "mmw2s/common/rng.hpp"
#include "mmw2s/model/features.hpp"
#include "mmw2s/model/model.hpp"

namespace fixture {

inline mmw2s::ModelConfig tiny_config() {
  mmw2s::ModelConfig c;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_fusion_blocks = 1;
  c.n_audio_blocks = 1;
  c.n_mels = 6;
  c.vocab_size = 50;
  c.max_text_tokens = 8;
  return c;
}

inline mmw2s::Mat random_mat(Eigen::Index r, Eigen::Index c, mmw2s::Rng& rng) {
  mmw2s::Mat m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.normal();
  return m;
}

inline mmw2s::ClipFeatures tiny_features(const mmw2s::ModelConfig& cfg, std::uint64_t seed) {
  mmw2s::Rng rng(seed);
  mmw2s::ClipFeatures f;
  f.log_mel = random_mat(13, static_cast<Eigen::Index>(cfg.n_mels), rng);
  f.video_patches = random_mat(2 * 4, static_cast<Eigen::Index>(cfg.video_patch_dim()), rng);
  std::vector<std::uint32_t> ids;
  for (int k = 0; k < 5; ++k) ids.push_back(static_cast<std::uint32_t>(rng.below(cfg.vocab_size)));
  f.text_ids = ids;
  return f;
}

}  // namespace fixture
