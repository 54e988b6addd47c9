#pragma once

#include <cmath>
#include <vector>

#include "mmw2s/model/model.hpp"
#include "mmw2s/train/focal_loss.hpp"

namespace mmw2s {

/// Symmetric in-batch contrastive loss between L2-normalized per-modality
/// summaries (mean of adapted tokens) of the same clip, averaged over
/// modality pairs. Only modalities present in every clip take part.
/// Accumulates gradients into `g` when given.
inline double alignment_loss(const MultimodalModel& model, const std::vector<const ClipFeatures*>& batch,
                             ModalitySet mask, double temperature, Gradients* g) {
  const std::size_t B = batch.size();
  require(B >= 2, ErrorCode::kAlignmentNotApplicable, "alignment needs a batch of at least 2 clips");
  std::vector<MultimodalModel::ForwardCache> caches(B);
  for (std::size_t b = 0; b < B; ++b) model.encode_modalities(*batch[b], mask, caches[b]);
  std::vector<Modality> mods;
  for (auto m : kAllModalities) {
    bool everywhere = true;
    for (const auto& c : caches) everywhere = everywhere && c.modality[static_cast<std::size_t>(m)].present;
    if (everywhere) mods.push_back(m);
  }
  require(mods.size() >= 2, ErrorCode::kAlignmentNotApplicable,
          "alignment needs at least two modalities present in every clip");

  const auto d = static_cast<Eigen::Index>(model.config().d_model);
  // summaries[m] is B x d, normalized rows in z[m].
  std::vector<Mat> summary(mods.size(), Mat(static_cast<Eigen::Index>(B), d));
  std::vector<Mat> z(mods.size(), Mat(static_cast<Eigen::Index>(B), d));
  std::vector<Eigen::VectorXd> norm(mods.size(), Eigen::VectorXd(static_cast<Eigen::Index>(B)));
  for (std::size_t k = 0; k < mods.size(); ++k) {
    for (std::size_t b = 0; b < B; ++b) {
      const auto r = static_cast<Eigen::Index>(b);
      summary[k].row(r) = caches[b].modality[static_cast<std::size_t>(mods[k])].adapted.colwise().mean();
      norm[k](r) = std::max(summary[k].row(r).norm(), 1e-12);
      z[k].row(r) = summary[k].row(r) / norm[k](r);
    }
  }

  std::vector<Mat> dz(mods.size(), Mat::Zero(static_cast<Eigen::Index>(B), d));
  double loss = 0.0;
  std::size_t pairs = 0;
  const double inv_b = 1.0 / static_cast<double>(B);
  for (std::size_t a = 0; a < mods.size(); ++a) {
    for (std::size_t c = a + 1; c < mods.size(); ++c) {
      ++pairs;
      const Mat L = (z[a] * z[c].transpose()) / temperature;
      Mat dL = Mat::Zero(L.rows(), L.cols());
      for (Eigen::Index i = 0; i < L.rows(); ++i) {
        const RowVec p = softmax(L.row(i));
        loss += -0.5 * inv_b * std::log(std::max(p(i), 1e-300));
        dL.row(i) += 0.5 * inv_b * p;
        dL(i, i) -= 0.5 * inv_b;
      }
      for (Eigen::Index j = 0; j < L.cols(); ++j) {
        const RowVec p = softmax(L.col(j).transpose());
        loss += -0.5 * inv_b * std::log(std::max(p(j), 1e-300));
        dL.col(j) += 0.5 * inv_b * p.transpose();
        dL(j, j) -= 0.5 * inv_b;
      }
      dz[a] += dL * z[c] / temperature;
      dz[c] += dL.transpose() * z[a] / temperature;
    }
  }
  const double inv_pairs = 1.0 / static_cast<double>(pairs);
  loss *= inv_pairs;
  if (!g) return loss;

  for (std::size_t k = 0; k < mods.size(); ++k) {
    for (std::size_t b = 0; b < B; ++b) {
      const auto r = static_cast<Eigen::Index>(b);
      const RowVec dzr = dz[k].row(r) * inv_pairs;
      const RowVec ds = (dzr - z[k].row(r) * z[k].row(r).dot(dzr)) / norm[k](r);
      const auto& mc = caches[b].modality[static_cast<std::size_t>(mods[k])];
      const Mat d_adapted = ds.replicate(mc.adapted.rows(), 1) / static_cast<double>(mc.adapted.rows());
      model.backward_modality(mods[k], caches[b], d_adapted, *g);
    }
  }
  return loss;
}

}  // namespace mmw2s
