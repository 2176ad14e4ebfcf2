// Dense stochastic declustering over every candidate parent. Shares the
// random-stream layout with run_em (one uniform per event per forest, parents
// visited in index order) but none of its event-space truncation.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "copp/decluster.hpp"
#include "copp/error.hpp"
#include "copp/parallel.hpp"
#include "decluster_internal.hpp"

namespace copp {

std::size_t exact_memory_estimate(std::size_t n, std::size_t p, std::size_t delta_neighbors) {
  const double n2 = double(n) * double(n);
  const double dl = double(std::min<std::size_t>(delta_neighbors, n * n));
  // Delta coordinates plus the tree's reordered copy and slot index, two dense
  // N x N responsibility matrices, per-causal-pair (about N^2 / 2) weights,
  // trigger values, bandwidths and gamma lists, and the fitted trigger mixture.
  const double bytes = n2 * (16.0 * double(p) + 7.0) + n2 * 16.0 +
                       0.5 * n2 * (24.0 + 4.0 * dl) + 0.5 * n2 * (8.0 * double(p) + 16.0);
  return static_cast<std::size_t>(bytes);
}

namespace {

struct DenseProblem {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<std::size_t> earlier;  // events strictly before i are 0 .. earlier[i]-1
  std::vector<std::size_t> offset;   // compact index of causal pair (i, 0)
  std::size_t causal_pairs = 0;
  std::vector<std::size_t> bg_columns;
  Matrix bg_points;
  std::vector<double> bg_scales;
  double bg_divisor = 1.0;
  std::vector<double> delta_scales;
  std::size_t delta_L = 0;
  std::vector<Index> gamma;  // causal_pairs x delta_L rows of the N*N Delta array

  double delta(const EventCatalog& c, std::size_t i, std::size_t j, std::size_t k) const {
    return c.point(i)[k] - c.point(j)[k];
  }
  // Compact index of Delta row r = i * n + j, or npos when the pair is not causal.
  std::size_t compact(std::size_t r) const {
    const std::size_t i = r / n, j = r % n;
    return j < earlier[i] ? offset[i] + j : std::size_t(-1);
  }
};

DenseProblem make_problem(const EventCatalog& catalog, const EmConfig& config, BackgroundMode mode) {
  DenseProblem dp;
  dp.n = catalog.size();
  dp.p = catalog.dimension();
  const std::size_t n = dp.n, p = dp.p;
  dp.earlier.resize(n);
  dp.offset.resize(n);
  for (std::size_t i = 0, j = 0; i < n; ++i) {
    while (catalog.time(j) < catalog.time(i)) ++j;
    dp.earlier[i] = j;
    dp.offset[i] = dp.causal_pairs;
    dp.causal_pairs += j;
  }
  if (mode == BackgroundMode::kTimeIndependent) {
    if (p < 2) throw ValidationError("time-independent background needs at least one covariate");
    for (std::size_t k = 1; k < p; ++k) dp.bg_columns.push_back(k);
    dp.bg_divisor = catalog.window().duration();
  } else {
    for (std::size_t k = 0; k < p; ++k) dp.bg_columns.push_back(k);
  }
  dp.bg_points = select_columns(catalog.events(), dp.bg_columns);
  for (auto k : dp.bg_columns) dp.bg_scales.push_back(catalog.scales()[k]);

  // Every ordered pair, self-differences and acausal pairs included, as the
  // untruncated Delta set.
  Matrix all(n * n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < p; ++k) all(i * n + j, k) = dp.delta(catalog, i, j, k);
  dp.delta_scales = unweighted_scales(all);
  dp.delta_L = std::min(config.resolved_delta_neighbors(), n * n);
  const KdTree tree(all, dp.delta_scales);
  all = Matrix();

  const std::size_t dL = dp.delta_L;
  dp.gamma.resize(dp.causal_pairs * dL);
  parallel_for(n, config.threads, [&](std::size_t i) {
    std::vector<Neighbor> found;
    std::vector<double> y(p);
    for (std::size_t j = 0; j < dp.earlier[i]; ++j) {
      const std::size_t r = i * n + j;
      for (std::size_t k = 0; k < p; ++k) y[k] = dp.delta(catalog, i, j, k);
      tree.knn(y, dL - 1, found, static_cast<Index>(r));
      Index* row = dp.gamma.data() + (dp.offset[i] + j) * dL;
      row[0] = static_cast<Index>(r);
      for (std::size_t m = 0; m < found.size(); ++m) row[m + 1] = found[m].index;
    }
  });
  return dp;
}

Index draw_dense(const DenseBranching& P, std::size_t i, std::size_t earlier, double u,
                 std::vector<detail::Candidate>& candidates) {
  candidates.clear();
  for (std::size_t j = 0; j < earlier; ++j)
    if (P.trigger(i, j) > 0.0) candidates.push_back({static_cast<Index>(j), P.trigger(i, j)});
  return detail::draw_parent(u, P.background[i], candidates);
}

}  // namespace

Forest sample_forest(const DenseBranching& P, Rng& rng) {
  const std::size_t n = P.background.size();
  Forest forest{std::vector<Index>(n, kNoIndex)};
  std::vector<detail::Candidate> candidates;
  for (std::size_t i = 0; i < n; ++i)
    forest.parent[i] = draw_dense(P, i, n, uniform01(rng), candidates);
  return forest;
}

ExactEmResult run_em_exact(const EventCatalog& catalog, const EmConfig& config,
                           const DenseIterationObserver& observer) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = catalog.size();
  const std::size_t p = catalog.dimension();
  const std::size_t needed = exact_memory_estimate(n, p, config.resolved_delta_neighbors());
  if (needed > config.exact_memory_limit_bytes)
    throw ResourceGuardError("dense EM for N=" + std::to_string(n) + " needs about " +
                             std::to_string(needed >> 20) + " MiB, above the limit of " +
                             std::to_string(config.exact_memory_limit_bytes >> 20) + " MiB");
  if (n * n >= kNoIndex) throw ResourceGuardError("N^2 exceeds the 32-bit index range");

  const BackgroundMode mode = config.background_mode.value_or(
      catalog.time_independent_background() ? BackgroundMode::kTimeIndependent
                                            : BackgroundMode::kSpaceTime);
  const DenseProblem dp = make_problem(catalog, config, mode);
  const std::size_t dL = dp.delta_L;
  Rng rng(config.seed);

  ExactEmResult result;
  auto& diag = result.diagnostics;
  diag.L = n;
  diag.delta_L = dL;

  DenseBranching P{std::vector<double>(n), Matrix(n, n, 0.0)};
  const double share = 1.0 / (2.0 * double(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double total = 0.5 + double(dp.earlier[i]) * share;
    P.background[i] = 0.5 / total;
    for (std::size_t j = 0; j < dp.earlier[i]; ++j) P.trigger(i, j) = share / total;
  }

  auto make_mu_model = [&](std::vector<double> weights, std::vector<double> factors,
                           std::vector<double> scales) {
    IntensityModel model;
    model.background_mode = mode;
    model.window_length = catalog.window().duration();
    model.background_columns = dp.bg_columns;
    model.mu_divisor = dp.bg_divisor > 0.0 ? dp.bg_divisor : 1.0;
    model.mu = kde::GaussianMixture{dp.bg_points, std::move(weights), std::move(factors),
                                    std::move(scales), config.bandwidth_reading};
    model.g = kde::GaussianMixture{Matrix(0, p), {}, {}, dp.delta_scales, config.bandwidth_reading};
    return model;
  };

  if (dp.causal_pairs == 0) {
    result.model = make_mu_model(P.background, std::vector<double>(n, 1.0), dp.bg_scales);
    diag.tv.push_back(0.0);
    diag.background_mass.push_back(double(n));
    diag.iterations = 1;
    diag.converged = true;
    if (observer) observer(1, P);
    result.P = std::move(P);
    diag.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  }
  if (!(dp.bg_divisor > 0.0))
    throw DegenerateError("time-independent background needs a window of positive length");

  std::vector<detail::Candidate> candidates;
  std::vector<double> q(dp.causal_pairs), dx(n), dy(dp.causal_pairs), g(dp.causal_pairs),
      mu(n);
  std::vector<double> y(p);
  std::vector<double> last_bg_sd, last_tscales;
  double last_norm = 1.0;
  std::vector<double> last_background;

  for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
    // Background moments and adaptive rank.
    const double bg_mass = std::accumulate(P.background.begin(), P.background.end(), 0.0);
    const WeightedMoments bg = background_stats(dp.bg_points, P.background);
    const std::size_t K1 = detail::resolve_k(config.K1, bg_mass, dp.bg_columns.size(), n);

    // Trigger weights and moments over the causal pairs.
    double q_mass = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < dp.earlier[i]; ++j) {
        q[dp.offset[i] + j] = P.trigger(i, j);
        q_mass += P.trigger(i, j);
      }
    const bool has_trigger = q_mass > 0.0;
    std::vector<double> tscales = dp.delta_scales;
    std::size_t K2 = 0;
    std::size_t scale_fallbacks = 0;
    if (has_trigger) {
      std::vector<double> mean(p, 0.0), var(p, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dp.earlier[i]; ++j) {
          const double w = P.trigger(i, j);
          if (w == 0.0) continue;
          for (std::size_t k = 0; k < p; ++k) mean[k] += w * dp.delta(catalog, i, j, k);
        }
      for (auto& v : mean) v /= q_mass;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dp.earlier[i]; ++j) {
          const double w = P.trigger(i, j);
          if (w == 0.0) continue;
          for (std::size_t k = 0; k < p; ++k) {
            const double z = dp.delta(catalog, i, j, k) - mean[k];
            var[k] += w * z * z;
          }
        }
      for (std::size_t k = 0; k < p; ++k) {
        const double sd = std::sqrt(var[k] / q_mass);
        if (sd > 0.0) tscales[k] = sd;
        else ++scale_fallbacks;
      }
      K2 = detail::resolve_k(config.K2, q_mass, p, n);
    }

    // Monte Carlo bandwidths from sampled forests.
    if (config.reuse_forest_draws) rng.seed(config.seed);
    std::fill(dx.begin(), dx.end(), 0.0);
    std::fill(dy.begin(), dy.end(), 0.0);
    for (std::size_t s = 0; s < config.forest_samples; ++s) {
      Forest forest{std::vector<Index>(n)};
      for (std::size_t i = 0; i < n; ++i)
        forest.parent[i] = draw_dense(P, i, dp.earlier[i], uniform01(rng), candidates);
      const auto d = nn_background_distance(dp.bg_points, forest, bg.sd, K1,
                                            &diag.background_fallbacks);
      for (std::size_t i = 0; i < n; ++i) dx[i] += d[i];
      if (!has_trigger) continue;
      std::vector<std::size_t> children;
      for (std::size_t i = 0; i < n; ++i)
        if (!forest.is_background(i)) children.push_back(i);
      if (children.empty()) {
        for (std::size_t c = 0; c < dp.causal_pairs; ++c)
          if (q[c] > 0.0) {
            dy[c] += 1.0;
            ++diag.delta_fallbacks;
          }
        continue;
      }
      Matrix realized(children.size(), p);
      for (std::size_t r = 0; r < children.size(); ++r)
        for (std::size_t k = 0; k < p; ++k)
          realized(r, k) = dp.delta(catalog, children[r], forest.parent[children[r]], k);
      const KdTree tree(realized, tscales);
      std::vector<Neighbor> found;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < dp.earlier[i]; ++j) {
          const std::size_t c = dp.offset[i] + j;
          if (q[c] == 0.0) continue;
          for (std::size_t k = 0; k < p; ++k) y[k] = dp.delta(catalog, i, j, k);
          tree.knn(y, K2, found);
          if (found.size() < K2) ++diag.delta_fallbacks;
          dy[c] += std::sqrt(found.back().sq_distance);
        }
    }
    const double inv_m = 1.0 / double(config.forest_samples);
    for (auto& v : dx) v = std::max(v * inv_m, config.min_bandwidth);
    for (std::size_t c = 0; c < dp.causal_pairs; ++c)
      dy[c] = q[c] > 0.0 ? std::max(dy[c] * inv_m, config.min_bandwidth) : 1.0;

    // Full background sums.
    parallel_for(n, config.threads, [&](std::size_t i) {
      const auto x = dp.bg_points.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (P.background[j] == 0.0) continue;
        s += P.background[j] * kde::gaussian_density_unchecked(x, dp.bg_points.row(j), dx[j],
                                                               bg.sd, config.bandwidth_reading);
      }
      mu[i] = s / dp.bg_divisor;
    });

    // Trigger KDE over the gamma-nearest Delta-events of each causal pair.
    const double norm =
        config.trigger_normalization == TriggerNormalization::kPerParent ? 1.0 / double(n) : 1.0;
    parallel_for(n, config.threads, [&](std::size_t i) {
      std::vector<double> yr(p), yc(p);
      for (std::size_t j = 0; j < dp.earlier[i]; ++j) {
        const std::size_t c = dp.offset[i] + j;
        double s = 0.0;
        if (has_trigger) {
          for (std::size_t k = 0; k < p; ++k) yr[k] = dp.delta(catalog, i, j, k);
          const Index* row = dp.gamma.data() + c * dL;
          for (std::size_t m = 0; m < dL; ++m) {
            const std::size_t cc = dp.compact(row[m]);
            if (cc == std::size_t(-1) || q[cc] == 0.0) continue;
            const std::size_t a = row[m] / n, b = row[m] % n;
            for (std::size_t k = 0; k < p; ++k) yc[k] = dp.delta(catalog, a, b, k);
            s += q[cc] * norm *
                 kde::gaussian_density_unchecked(yr, yc, dy[cc], tscales, config.bandwidth_reading);
          }
        }
        g[c] = s;
      }
    });

    // E-step over every earlier event.
    DenseBranching next{std::vector<double>(n), Matrix(n, n, 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
      double lambda = mu[i];
      for (std::size_t j = 0; j < dp.earlier[i]; ++j) lambda += g[dp.offset[i] + j];
      if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw DegenerateError("total intensity at event " + std::to_string(i + 1) +
                              " is zero or not finite");
      next.background[i] = mu[i] / lambda;
      for (std::size_t j = 0; j < dp.earlier[i]; ++j)
        next.trigger(i, j) = g[dp.offset[i] + j] / lambda;
    }

    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      change += std::abs(next.background[i] - P.background[i]);
      for (std::size_t j = 0; j < dp.earlier[i]; ++j)
        change += std::abs(next.trigger(i, j) - P.trigger(i, j));
    }
    change /= double(n);

    diag.tv.push_back(change);
    diag.background_mass.push_back(
        std::accumulate(next.background.begin(), next.background.end(), 0.0));
    diag.iterations = iter;
    diag.K1 = K1;
    diag.K2 = K2;
    diag.trigger_scale_fallbacks += scale_fallbacks;

    last_bg_sd = bg.sd;
    last_tscales = tscales;
    last_norm = norm;
    last_background = std::move(P.background);
    P = std::move(next);
    if (observer) observer(iter, P);
    if (change <= config.tv_tolerance) {
      diag.converged = true;
      break;
    }
  }

  // Model of the last M-step taken.
  result.model = make_mu_model(std::move(last_background), dx, last_bg_sd);
  {
    Matrix centers(dp.causal_pairs, p);
    std::vector<double> weights(dp.causal_pairs);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < dp.earlier[i]; ++j) {
        const std::size_t c = dp.offset[i] + j;
        for (std::size_t k = 0; k < p; ++k) centers(c, k) = dp.delta(catalog, i, j, k);
        weights[c] = q[c] * last_norm;
      }
    result.model.g = kde::GaussianMixture{std::move(centers), std::move(weights), dy,
                                          last_tscales, config.bandwidth_reading};
  }
  result.P = std::move(P);
  diag.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace copp
