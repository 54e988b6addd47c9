#pragma once

#include <cmath>

#include "mmw2s/labels.hpp"
#include "mmw2s/model/params.hpp"

namespace mmw2s {

/// Max-subtracted softmax.
inline RowVec softmax(const RowVec& z) {
  const double mx = z.maxCoeff();
  RowVec e = (z.array() - mx).exp();
  return e / e.sum();
}

struct LossAndGrad {
  double loss = 0.0;
  RowVec dlogits;
};

/// FL = -alpha (1 - p_t)^gamma log p_t with p_t the softmax probability of
/// the gold class; gamma = 0, alpha = 1 is cross-entropy.
inline LossAndGrad focal_loss(const RowVec& logits, std::size_t gold, double gamma, double alpha) {
  const double mx = logits.maxCoeff();
  const RowVec e = (logits.array() - mx).exp();
  const double sum = e.sum();
  const RowVec p = e / sum;
  const double log_pt = logits(static_cast<Eigen::Index>(gold)) - mx - std::log(sum);
  const double pt = p(static_cast<Eigen::Index>(gold));
  // 1 - p_t from the other classes keeps precision when p_t is close to 1.
  const double q = p.sum() - pt;
  const double q_gamma = gamma == 0.0 ? 1.0 : std::pow(q, gamma);
  LossAndGrad out;
  out.loss = -alpha * q_gamma * log_pt;
  if (out.loss == 0.0) out.loss = 0.0;  // drop the sign of -0
  double focus = 0.0;
  if (gamma != 0.0 && q > 0.0) focus = gamma * std::pow(q, gamma - 1.0) * pt * log_pt;
  const double coeff = alpha * (focus - q_gamma);
  out.dlogits = -coeff * p;
  out.dlogits(static_cast<Eigen::Index>(gold)) += coeff;
  return out;
}

inline LossAndGrad focal_loss(const RowVec& logits, ResponseLabel gold, double gamma, double alpha) {
  return focal_loss(logits, index_of(gold), gamma, alpha);
}

/// Focal loss as a function of p_t alone.
inline double focal_loss_value(double pt, double gamma, double alpha) {
  if (pt >= 1.0) return 0.0;
  return -alpha * std::pow(1.0 - pt, gamma) * std::log(pt);
}

}  // namespace mmw2s
