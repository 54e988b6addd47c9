#pragma once

#include <cmath>
#include <cstdint>

#include "mmw2s/model/params.hpp"
#include "mmw2s/train/config.hpp"

namespace mmw2s {

struct OptimizerState {
  std::vector<Mat> m;
  std::vector<Mat> v;
  std::uint64_t step = 0;

  static OptimizerState for_params(const ParamStore& ps) { return {ps.zeros_like(), ps.zeros_like(), 0}; }
};

/// Adam moments with bias correction and decoupled weight decay:
/// w <- w - lr (m_hat / (sqrt(v_hat) + eps) + wd w).
inline void adamw_step(ParamStore& ps, const Gradients& g, OptimizerState& st, const TrainConfig& cfg) {
  require(ps.same_shapes(g) && ps.same_shapes(st.m) && ps.same_shapes(st.v), ErrorCode::kShapeMismatch,
          "optimizer arrays do not match the parameter shapes");
  ++st.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
  for (std::size_t k = 0; k < ps.size(); ++k) {
    Mat& w = ps.mutable_value(k);
    st.m[k] = cfg.beta1 * st.m[k] + (1.0 - cfg.beta1) * g[k];
    st.v[k] = cfg.beta2 * st.v[k] + (1.0 - cfg.beta2) * g[k].cwiseProduct(g[k]);
    const auto m_hat = st.m[k].array() / c1;
    const auto v_hat = st.v[k].array() / c2;
    w.array() -= cfg.lr * (m_hat / (v_hat.sqrt() + cfg.eps) + cfg.weight_decay * w.array());
  }
}

}  // namespace mmw2s
