#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "mmw2s/common/binary_io.hpp"
#include "mmw2s/model/model.hpp"
#include "mmw2s/train/adamw.hpp"
#include "mmw2s/train/config.hpp"

namespace mmw2s {

inline constexpr std::string_view kCheckpointMagic = "MMW2SCK1";
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::uint8_t kDtypeF64 = 1;

struct Checkpoint {
  MultimodalModel model;
  FrontendConfig frontend;
  TrainConfig train;
  ModalitySet modalities = ModalitySet::all();
  std::uint64_t step = 0;
  std::optional<OptimizerState> optimizer;
  /// Resolved run configuration of the process that wrote the file.
  nlohmann::json run_config = nlohmann::json::object();
};

namespace checkpoint_detail {

inline void put_array(std::string& out, const std::string& name, const Mat& m) {
  binary::put_u32(out, static_cast<std::uint32_t>(name.size()));
  binary::put_bytes(out, name);
  binary::put_u8(out, kDtypeF64);
  binary::put_u32(out, 2);
  binary::put_u32(out, static_cast<std::uint32_t>(m.rows()));
  binary::put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index k = 0; k < m.size(); ++k) binary::put_f64(out, m.data()[k]);
}

}  // namespace checkpoint_detail

/// Layout: magic, u32 version, u32 length + JSON config, then named arrays
/// until the end (u32 name length, name, u8 dtype, u32 rank, u32 dims, LE
/// payload). Optimizer moments are stored as "adam.m/<name>", "adam.v/<name>".
inline std::string encode_checkpoint(const Checkpoint& ck) {
  nlohmann::json cfg = {{"version", kCheckpointVersion},
                        {"model", ck.model.config()},
                        {"frontend", ck.frontend},
                        {"train", ck.train},
                        {"modalities", ck.modalities.to_string()},
                        {"step", ck.step},
                        {"run_config", ck.run_config}};
  if (ck.optimizer) cfg["optimizer_step"] = ck.optimizer->step;
  const std::string cfg_text = cfg.dump();
  std::string out;
  binary::put_bytes(out, kCheckpointMagic);
  binary::put_u32(out, kCheckpointVersion);
  binary::put_u32(out, static_cast<std::uint32_t>(cfg_text.size()));
  binary::put_bytes(out, cfg_text);
  const ParamStore& ps = ck.model.params();
  for (std::size_t k = 0; k < ps.size(); ++k) checkpoint_detail::put_array(out, ps.entry(k).name, ps[k]);
  if (ck.optimizer) {
    for (std::size_t k = 0; k < ps.size(); ++k) {
      checkpoint_detail::put_array(out, "adam.m/" + ps.entry(k).name, ck.optimizer->m[k]);
    }
    for (std::size_t k = 0; k < ps.size(); ++k) {
      checkpoint_detail::put_array(out, "adam.v/" + ps.entry(k).name, ck.optimizer->v[k]);
    }
  }
  return out;
}

inline Checkpoint decode_checkpoint(std::string_view bytes) {
  binary::Reader in(bytes);
  require(in.remaining() >= kCheckpointMagic.size() && in.bytes(kCheckpointMagic.size()) == kCheckpointMagic,
          ErrorCode::kFormat, "not a checkpoint file (bad magic)");
  const std::uint32_t version = in.u32();
  require(version == kCheckpointVersion, ErrorCode::kFormat,
          "unsupported checkpoint version " + std::to_string(version));
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(in.bytes(in.u32()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("checkpoint config block: ") + e.what());
  }
  Checkpoint ck;
  ck.model = MultimodalModel(cfg.at("model").get<ModelConfig>(), 0);
  ck.frontend = cfg.at("frontend").get<FrontendConfig>();
  ck.train = cfg.at("train").get<TrainConfig>();
  ck.modalities = ModalitySet::parse(cfg.at("modalities").get<std::string>());
  ck.step = cfg.at("step").get<std::uint64_t>();
  ck.run_config = cfg.value("run_config", nlohmann::json::object());
  ParamStore& ps = ck.model.params();
  if (cfg.contains("optimizer_step")) {
    ck.optimizer = OptimizerState::for_params(ps);
    ck.optimizer->step = cfg.at("optimizer_step").get<std::uint64_t>();
  }

  std::vector<bool> seen(ps.size() * 3, false);
  while (!in.at_end()) {
    const std::string name(in.bytes(in.u32()));
    require(in.u8() == kDtypeF64, ErrorCode::kFormat, "array " + name + " has an unsupported dtype");
    const std::uint32_t rank = in.u32();
    require(rank == 2, ErrorCode::kFormat, "array " + name + " must be rank 2");
    const auto rows = static_cast<Eigen::Index>(in.u32());
    const auto cols = static_cast<Eigen::Index>(in.u32());
    Mat m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = in.f64();
    std::size_t slot = 0;
    std::string base = name;
    if (name.rfind("adam.m/", 0) == 0) {
      slot = 1;
      base = name.substr(7);
    } else if (name.rfind("adam.v/", 0) == 0) {
      slot = 2;
      base = name.substr(7);
    }
    require(ps.contains(base), ErrorCode::kIncompatible, "checkpoint array " + name + " is not part of the model");
    require(slot == 0 || ck.optimizer.has_value(), ErrorCode::kFormat, "optimizer array without optimizer state");
    const std::size_t k = ps.index_of(base);
    require(rows == ps[k].rows() && cols == ps[k].cols(), ErrorCode::kShapeMismatch, "array " + name + " has the wrong shape");
    if (slot == 0) ps.assign(k, m);
    if (slot == 1) ck.optimizer->m[k] = std::move(m);
    if (slot == 2) ck.optimizer->v[k] = std::move(m);
    seen[k * 3 + slot] = true;
  }
  for (std::size_t k = 0; k < ps.size(); ++k) {
    require(seen[k * 3], ErrorCode::kFormat, "checkpoint is missing parameter " + ps.entry(k).name);
    if (ck.optimizer) {
      require(seen[k * 3 + 1] && seen[k * 3 + 2], ErrorCode::kFormat,
              "checkpoint is missing optimizer moments for " + ps.entry(k).name);
    }
  }
  return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  binary::write_file(path, encode_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(binary::read_file(path)); }

/// Short content hash used to identify a checkpoint in reports.
inline std::string checkpoint_id(const Checkpoint& ck) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(encode_checkpoint(ck))));
  return buf;
}

}  // namespace mmw2s
