#pragma once

// Pieces shared by the accelerated and the dense EM drivers. Keeping them in
// one place is what makes the two routes consume randomness identically.

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "copp/decluster.hpp"
#include "copp/error.hpp"

namespace copp::detail {

struct Candidate {
  Index parent;
  double probability;
};

/// Inverts the cumulative distribution: background first, then candidates in
/// the given order (callers sort them by parent index).
inline Index draw_parent(double u, double p_background, std::span<const Candidate> candidates) {
  double cumulative = p_background;
  if (u < cumulative) return kNoIndex;
  Index last = kNoIndex;
  for (const auto& c : candidates) {
    if (c.probability <= 0.0) continue;
    cumulative += c.probability;
    last = c.parent;
    if (u < cumulative) return c.parent;
  }
  // u landed past the rounded row total; take the last category with mass.
  return last;
}

/// Weighted column moments for the trigger kernel. Columns with zero spread
/// fall back to `fallback_scales` and bump `fallbacks`.
inline WeightedMoments trigger_moments(const Matrix& points, std::span<const double> weights,
                                       std::span<const double> fallback_scales,
                                       std::size_t& fallbacks) {
  const std::size_t p = points.cols();
  WeightedMoments m{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  double total = 0.0;
  for (std::size_t r = 0; r < points.rows(); ++r) {
    if (weights[r] == 0.0) continue;
    total += weights[r];
    for (std::size_t k = 0; k < p; ++k) m.mean[k] += weights[r] * points(r, k);
  }
  for (std::size_t k = 0; k < p; ++k) m.mean[k] /= total;
  for (std::size_t r = 0; r < points.rows(); ++r) {
    if (weights[r] == 0.0) continue;
    for (std::size_t k = 0; k < p; ++k) {
      const double z = points(r, k) - m.mean[k];
      m.sd[k] += weights[r] * z * z;
    }
  }
  for (std::size_t k = 0; k < p; ++k) {
    m.sd[k] = std::sqrt(m.sd[k] / total);
    if (!(m.sd[k] > 0.0)) {
      m.sd[k] = fallback_scales[k];
      ++fallbacks;
    }
  }
  return m;
}

inline std::size_t resolve_k(const std::optional<std::size_t>& fixed, double mass, std::size_t p,
                             std::size_t cap) {
  cap = std::max<std::size_t>(cap, 2);
  if (fixed) return std::clamp<std::size_t>(*fixed, 2, cap);
  if (!(mass > 0.0)) return 2;
  return kde::optimal_k(mass, p, 2, cap);
}

}  // namespace copp::detail
