#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mmw2s/common/rng.hpp"
#include "mmw2s/model/params.hpp"

namespace mmw2s {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  Eigen::Index worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
};

/// The 1e-6 floor sits above central-difference roundoff (about 1e-16 |loss| / eps),
/// so near-zero gradients are judged on absolute error.
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

/// Compares `analytic` with central differences of loss(ps) on a seeded
/// sample of coordinates: at least two per array, the rest uniform over all
/// scalars. Parameters are restored exactly afterwards.
template <class LossFn>
GradCheckReport grad_check(ParamStore& ps, const Gradients& analytic, LossFn&& loss, std::size_t n_coords = 200,
                           double epsilon = 1e-5, std::uint64_t seed = 0) {
  require(ps.same_shapes(analytic), ErrorCode::kShapeMismatch, "gradient arrays do not match the parameters");
  Rng rng(mix_seed(seed, fnv1a64("grad-check")));
  std::vector<std::pair<std::size_t, Eigen::Index>> coords;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const auto n = static_cast<std::uint64_t>(ps[k].size());
    for (int r = 0; r < 2 && n > 0; ++r) coords.emplace_back(k, static_cast<Eigen::Index>(rng.below(n)));
  }
  const std::size_t total = ps.scalar_count();
  while (coords.size() < n_coords && total > 0) {
    std::uint64_t flat = rng.below(total);
    std::size_t k = 0;
    while (flat >= static_cast<std::uint64_t>(ps[k].size())) flat -= static_cast<std::uint64_t>(ps[k++].size());
    coords.emplace_back(k, static_cast<Eigen::Index>(flat));
  }

  GradCheckReport rep;
  for (const auto& [k, idx] : coords) {
    double& w = ps.mutable_value(k).data()[idx];
    const double saved = w;
    w = saved + epsilon;
    const double up = loss(static_cast<const ParamStore&>(ps));
    w = saved - epsilon;
    const double down = loss(static_cast<const ParamStore&>(ps));
    w = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = analytic[k].data()[idx];
    const double err = relative_error(a, numeric);
    ++rep.coords_checked;
    if (err >= rep.max_rel_error) {
      rep.max_rel_error = err;
      rep.worst_param = ps.entry(k).name;
      rep.worst_index = idx;
      rep.worst_analytic = a;
      rep.worst_numeric = numeric;
    }
  }
  return rep;
}

}  // namespace mmw2s
