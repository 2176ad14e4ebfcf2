#include "copp/decluster.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "copp/error.hpp"
#include "copp/parallel.hpp"
#include "decluster_internal.hpp"

namespace copp {

void EmConfig::validate() const {
  if (L < 2) throw ValidationError("L must be at least 2");
  if (K1 && (*K1 < 2 || *K1 > L)) throw ValidationError("K1 must lie in [2, L]");
  if (K2 && (*K2 < 2 || *K2 > L)) throw ValidationError("K2 must lie in [2, L]");
  if (!(tv_tolerance > 0.0)) throw ValidationError("tv_tolerance must be positive");
  if (max_iterations < 1) throw ValidationError("max_iterations must be at least 1");
  if (forest_samples < 1) throw ValidationError("forest_samples must be at least 1");
  if (!(min_bandwidth > 0.0)) throw ValidationError("min_bandwidth must be positive");
  if (threads < 1) throw ValidationError("threads must be at least 1");
}

std::vector<double> BranchingDistribution::Q() const {
  std::vector<double> q(P.rows() * P.cols(), 0.0);
  for (std::size_t i = 0; i < P.rows(); ++i)
    for (std::size_t l = 1; l < P.cols(); ++l) q[i * P.cols() + l] = P(i, l);
  return q;
}

double BranchingDistribution::background_mass() const noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < P.rows(); ++i) s += P(i, 0);
  return s;
}

double BranchingDistribution::triggered_mass() const noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < P.rows(); ++i)
    for (std::size_t l = 1; l < P.cols(); ++l) s += P(i, l);
  return s;
}

std::size_t Forest::background_count() const noexcept {
  return static_cast<std::size_t>(std::count(parent.begin(), parent.end(), kNoIndex));
}

double IntensityModel::background_at(std::span<const double> event) const {
  std::vector<double> x(background_columns.size());
  for (std::size_t c = 0; c < x.size(); ++c) x[c] = event[background_columns[c]];
  return kde::mixture_density(mu, x) / mu_divisor;
}

double IntensityModel::trigger_at(std::span<const double> delta) const {
  if (g.size() == 0 || !(delta[0] > 0.0)) return 0.0;
  return kde::mixture_density(g, delta);
}

std::vector<double> unweighted_scales(const Matrix& points) {
  const std::size_t p = points.cols();
  const std::size_t m = points.rows();
  std::vector<double> mean(p, 0.0), sd(p, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t k = 0; k < p; ++k) mean[k] += points(r, k);
  for (auto& v : mean) v /= double(m);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t k = 0; k < p; ++k) {
      const double z = points(r, k) - mean[k];
      sd[k] += z * z;
    }
  for (auto& v : sd) {
    v = std::sqrt(v / double(m));
    if (!(v > 0.0)) v = 1.0;
  }
  return sd;
}

DeclusterProblem::DeclusterProblem(const EventCatalog& catalog, const EmConfig& config)
    : catalog_(&catalog) {
  config.validate();
  const std::size_t n = catalog.size();
  const std::size_t p = catalog.dimension();
  const std::size_t L = std::min(config.L, n);
  if (n * L >= kNoIndex) throw ResourceGuardError("N * L exceeds the 32-bit index range");

  mode_ = config.background_mode.value_or(catalog.time_independent_background()
                                              ? BackgroundMode::kTimeIndependent
                                              : BackgroundMode::kSpaceTime);
  alpha_ = build_index(catalog.events(), catalog.scales(), L, config.threads);

  if (mode_ == BackgroundMode::kTimeIndependent) {
    if (p < 2) throw ValidationError("time-independent background needs at least one covariate");
    for (std::size_t k = 1; k < p; ++k) bg_columns_.push_back(k);
    bg_divisor_ = catalog.window().duration();
  } else {
    for (std::size_t k = 0; k < p; ++k) bg_columns_.push_back(k);
  }
  bg_points_ = select_columns(catalog.events(), bg_columns_);
  for (auto k : bg_columns_) bg_scales_.push_back(catalog.scales()[k]);
  if (mode_ == BackgroundMode::kTimeIndependent)
    spatial_alpha_ = build_index(bg_points_, bg_scales_, L, config.threads);

  causal_.assign(n * L, 0);
  delta_ = Matrix(n * L, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < L; ++l) {
      const Index j = alpha_.alpha(i, l);
      const bool c = catalog.time(i) > catalog.time(j);
      causal_[i * L + l] = c;
      any_causal_ = any_causal_ || c;
      for (std::size_t k = 0; k < p; ++k) delta_(i * L + l, k) = catalog.point(i)[k] - catalog.point(j)[k];
    }
  delta_scales_ = unweighted_scales(delta_);
  const std::size_t dL = std::min(config.resolved_delta_neighbors(), n * L);
  gamma_ = build_index(delta_, delta_scales_, dL, config.threads);
}

BranchingDistribution init_branching(const DeclusterProblem& problem) {
  const std::size_t n = problem.size();
  const std::size_t L = problem.L();
  BranchingDistribution bd{Matrix(n, L, 0.0), std::vector<Index>(n * L)};
  const double share = 1.0 / (2.0 * double(L));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t causal = 0;
    for (std::size_t l = 0; l < L; ++l) {
      bd.parents[i * L + l] = problem.alpha().alpha(i, l);
      if (l > 0 && problem.causal(i, l)) ++causal;
    }
    const double total = 0.5 + double(causal) * share;
    bd.P(i, 0) = 0.5 / total;
    for (std::size_t l = 1; l < L; ++l)
      if (problem.causal(i, l)) bd.P(i, l) = share / total;
  }
  return bd;
}

BranchingDistribution e_step(const DeclusterProblem& problem, const EventIntensities& values) {
  const std::size_t n = problem.size();
  const std::size_t L = problem.L();
  if (values.background.size() != n || values.trigger.rows() != n || values.trigger.cols() != L)
    throw ArgumentError("intensity arrays do not match the problem size");
  BranchingDistribution bd{Matrix(n, L, 0.0), std::vector<Index>(n * L)};
  for (std::size_t i = 0; i < n; ++i) {
    double lambda = values.background[i];
    for (std::size_t l = 1; l < L; ++l)
      if (problem.causal(i, l)) lambda += values.trigger(i, l);
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      throw DegenerateError("total intensity at event " + std::to_string(i + 1) +
                            " is zero or not finite");
    for (std::size_t l = 0; l < L; ++l) bd.parents[i * L + l] = problem.alpha().alpha(i, l);
    bd.P(i, 0) = values.background[i] / lambda;
    for (std::size_t l = 1; l < L; ++l)
      if (problem.causal(i, l)) bd.P(i, l) = values.trigger(i, l) / lambda;
  }
  return bd;
}

WeightedMoments background_stats(const Matrix& points, std::span<const double> weights) {
  if (weights.size() != points.rows()) throw ArgumentError("weight count does not match points");
  const std::size_t p = points.cols();
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw DegenerateError("background weights sum to zero");
  WeightedMoments m{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
  for (std::size_t i = 0; i < points.rows(); ++i)
    for (std::size_t k = 0; k < p; ++k) m.mean[k] += weights[i] * points(i, k);
  for (auto& v : m.mean) v /= total;
  for (std::size_t i = 0; i < points.rows(); ++i)
    for (std::size_t k = 0; k < p; ++k) {
      const double z = points(i, k) - m.mean[k];
      m.sd[k] += weights[i] * z * z;
    }
  for (std::size_t k = 0; k < p; ++k) {
    m.sd[k] = std::sqrt(m.sd[k] / total);
    if (!(m.sd[k] > 0.0))
      throw DegenerateError("background standard deviation of column " + std::to_string(k + 1) +
                            " is zero");
  }
  return m;
}

Forest sample_forest(const BranchingDistribution& P, Rng& rng) {
  const std::size_t n = P.size();
  const std::size_t L = P.L();
  Forest forest{std::vector<Index>(n, kNoIndex)};
  std::vector<detail::Candidate> candidates;
  candidates.reserve(L);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform01(rng);
    candidates.clear();
    for (std::size_t l = 1; l < L; ++l)
      if (P.P(i, l) > 0.0) candidates.push_back({P.parent(i, l), P.P(i, l)});
    std::sort(candidates.begin(), candidates.end(),
              [](const auto& a, const auto& b) { return a.parent < b.parent; });
    forest.parent[i] = detail::draw_parent(u, P.P(i, 0), candidates);
  }
  return forest;
}

std::vector<double> nn_background_distance(const Matrix& points, const Forest& forest,
                                           std::span<const double> scales, std::size_t K,
                                           std::size_t* fallbacks) {
  if (forest.size() != points.rows()) throw ArgumentError("forest size does not match points");
  if (K < 1) throw ArgumentError("K must be positive");
  std::vector<std::size_t> background;
  for (std::size_t i = 0; i < forest.size(); ++i)
    if (forest.is_background(i)) background.push_back(i);
  if (background.empty()) throw DegenerateError("sampled forest has no background events");
  const KdTree tree(select_rows(points, background), scales);
  std::vector<double> d(points.rows());
  std::vector<Neighbor> found;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    tree.knn(points.row(i), K, found);
    if (found.size() < K && fallbacks) ++*fallbacks;
    d[i] = std::sqrt(found.back().sq_distance);
  }
  return d;
}

namespace {

// K-th closest realized Delta-event (rows whose event picked that neighbour as
// parent) for every row with positive weight. Rows with zero weight keep 0.
void accumulate_delta_distances(const DeclusterProblem& problem, const Forest& forest,
                                std::span<const double> q, std::span<const double> scales,
                                std::size_t K, std::vector<double>& acc, std::size_t& fallbacks) {
  const std::size_t L = problem.L();
  std::vector<std::size_t> realized;
  for (std::size_t i = 0; i < forest.size(); ++i) {
    if (forest.is_background(i)) continue;
    for (std::size_t l = 1; l < L; ++l)
      if (problem.alpha().alpha(i, l) == forest.parent[i]) {
        realized.push_back(i * L + l);
        break;
      }
  }
  const Matrix& Y = problem.delta_events();
  if (realized.empty()) {
    for (std::size_t r = 0; r < q.size(); ++r)
      if (q[r] > 0.0) {
        acc[r] += 1.0;
        ++fallbacks;
      }
    return;
  }
  const KdTree tree(select_rows(Y, realized), scales);
  std::vector<Neighbor> found;
  for (std::size_t r = 0; r < q.size(); ++r) {
    if (q[r] == 0.0) continue;
    tree.knn(Y.row(r), K, found);
    if (found.size() < K) ++fallbacks;
    acc[r] += std::sqrt(found.back().sq_distance);
  }
}

IntensityModel trivial_background_model(const DeclusterProblem& problem,
                                        const BranchingDistribution& P, const EmConfig& config) {
  IntensityModel model;
  model.background_mode = problem.background_mode();
  model.window_length = problem.catalog().window().duration();
  model.background_columns = problem.background_columns();
  model.mu_divisor = problem.background_divisor() > 0.0 ? problem.background_divisor() : 1.0;
  std::vector<double> w(problem.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = P.P(i, 0);
  const auto scales = problem.background_scales();
  model.mu = kde::GaussianMixture{problem.background_points(), std::move(w),
                                  std::vector<double>(problem.size(), 1.0),
                                  std::vector<double>(scales.begin(), scales.end()),
                                  config.bandwidth_reading};
  model.g = kde::GaussianMixture{Matrix(0, problem.catalog().dimension()), {}, {},
                                 std::vector<double>(problem.delta_scales().begin(),
                                                     problem.delta_scales().end()),
                                 config.bandwidth_reading};
  return model;
}

}  // namespace

EventIntensities evaluate_at_events(const DeclusterProblem& problem, const IntensityModel& model,
                                    unsigned threads) {
  const std::size_t n = problem.size();
  const std::size_t L = problem.L();
  const std::size_t dL = problem.delta_L();
  EventIntensities values{std::vector<double>(n, 0.0), Matrix(n, L, 0.0)};
  const auto& bg_alpha = problem.background_alpha();
  const auto& gamma = problem.gamma();
  const Matrix& Y = problem.delta_events();
  const bool has_trigger = model.g.size() == Y.rows();
  parallel_for(n, threads, [&](std::size_t i) {
    const auto x = problem.background_points().row(i);
    double mu = 0.0;
    for (std::size_t l = 0; l < bg_alpha.L(); ++l) {
      const Index j = bg_alpha.alpha(i, l);
      const double w = model.mu.weights[j];
      if (w == 0.0) continue;
      mu += w * kde::gaussian_density_unchecked(x, model.mu.centers.row(j), model.mu.factors[j],
                                                model.mu.scales, model.mu.reading);
    }
    values.background[i] = mu / model.mu_divisor;
    if (!has_trigger) return;
    for (std::size_t l = 1; l < L; ++l) {
      if (!problem.causal(i, l)) continue;
      const std::size_t r = i * L + l;
      double g = 0.0;
      for (std::size_t m = 0; m < dL; ++m) {
        const Index c = gamma.alpha(r, m);
        const double w = model.g.weights[c];
        if (w == 0.0) continue;
        g += w * kde::gaussian_density_unchecked(Y.row(r), Y.row(c), model.g.factors[c],
                                                 model.g.scales, model.g.reading);
      }
      values.trigger(i, l) = g;
    }
  });
  return values;
}

MStepResult m_step(const DeclusterProblem& problem, const BranchingDistribution& P,
                   const EmConfig& config, Rng& rng) {
  const std::size_t n = problem.size();
  const std::size_t L = problem.L();
  if (P.size() != n || P.L() != L) throw ArgumentError("P does not match the problem shape");
  if (!(problem.background_divisor() > 0.0))
    throw DegenerateError("time-independent background needs a window of positive length");
  MStepResult out;
  auto& stats = out.stats;

  std::vector<double> p0(n);
  for (std::size_t i = 0; i < n; ++i) p0[i] = P.P(i, 0);
  const double bg_mass = std::accumulate(p0.begin(), p0.end(), 0.0);
  stats.background = background_stats(problem.background_points(), p0);
  stats.K1 = detail::resolve_k(config.K1, bg_mass, problem.background_columns().size(), L);

  const std::vector<double> q = P.Q();
  const double q_mass = std::accumulate(q.begin(), q.end(), 0.0);
  const bool has_trigger = q_mass > 0.0;
  const Matrix& Y = problem.delta_events();
  std::vector<double> trigger_scales(problem.delta_scales().begin(), problem.delta_scales().end());
  if (has_trigger) {
    stats.trigger = detail::trigger_moments(Y, q, problem.delta_scales(),
                                            stats.trigger_scale_fallbacks);
    trigger_scales = stats.trigger.sd;
    stats.K2 = detail::resolve_k(config.K2, q_mass, Y.cols(), L);
  }

  std::vector<double> dx(n, 0.0);
  std::vector<double> dy(Y.rows(), 0.0);
  for (std::size_t s = 0; s < config.forest_samples; ++s) {
    const Forest forest = sample_forest(P, rng);
    const auto d = nn_background_distance(problem.background_points(), forest,
                                          stats.background.sd, stats.K1,
                                          &stats.background_fallbacks);
    for (std::size_t i = 0; i < n; ++i) dx[i] += d[i];
    if (has_trigger)
      accumulate_delta_distances(problem, forest, q, trigger_scales, stats.K2, dy,
                                 stats.delta_fallbacks);
  }
  const double inv_m = 1.0 / double(config.forest_samples);
  for (auto& v : dx) v = std::max(v * inv_m, config.min_bandwidth);
  for (std::size_t r = 0; r < dy.size(); ++r)
    dy[r] = q[r] > 0.0 ? std::max(dy[r] * inv_m, config.min_bandwidth) : 1.0;

  IntensityModel& model = out.model;
  model.background_mode = problem.background_mode();
  model.window_length = problem.catalog().window().duration();
  model.background_columns = problem.background_columns();
  model.mu_divisor = problem.background_divisor();
  model.mu = kde::GaussianMixture{problem.background_points(), std::move(p0), std::move(dx),
                                  stats.background.sd, config.bandwidth_reading};
  std::vector<double> gw = q;
  if (config.trigger_normalization == TriggerNormalization::kPerParent)
    for (auto& w : gw) w /= double(n);
  model.g = kde::GaussianMixture{Y, std::move(gw), std::move(dy), std::move(trigger_scales),
                                 config.bandwidth_reading};
  out.values = evaluate_at_events(problem, model, config.threads);
  return out;
}

std::size_t accelerated_memory_estimate(std::size_t n, std::size_t p, std::size_t L,
                                        std::size_t delta_neighbors) {
  const double nl = double(n) * double(L);
  const double dl = double(delta_neighbors ? delta_neighbors : L);
  // Per Delta-event: coordinates (twice while the tree is built), gamma lists,
  // weights, bandwidths, trigger values, causality flag, alpha entry and P.
  const double per_pair = 16.0 * double(p) + 12.0 * dl + 8.0 * 4 + 1.0 + 12.0 + 8.0;
  // Per event: coordinates, background weights, bandwidths and values.
  const double per_event = 16.0 * double(p) + 32.0;
  return static_cast<std::size_t>(nl * per_pair + double(n) * per_event);
}

EmResult run_em(const EventCatalog& catalog, const EmConfig& config,
                const IterationObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  const DeclusterProblem problem(catalog, config);
  Rng rng(config.seed);
  EmResult result;
  auto& diag = result.diagnostics;
  diag.L = problem.L();
  diag.delta_L = problem.delta_L();
  BranchingDistribution P = init_branching(problem);

  if (!problem.has_causal_pairs()) {
    // Nothing can trigger anything: P is fixed at all-background.
    try {
      result.model = m_step(problem, P, config, rng).model;
    } catch (const DegenerateError&) {
      result.model = trivial_background_model(problem, P, config);
    }
    diag.tv.push_back(0.0);
    diag.background_mass.push_back(P.background_mass());
    diag.iterations = 1;
    diag.converged = true;
    if (observer) observer(1, P);
    result.P = std::move(P);
    diag.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  }

  for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
    if (config.reuse_forest_draws) rng.seed(config.seed);
    MStepResult ms = m_step(problem, P, config, rng);
    BranchingDistribution next = e_step(problem, ms.values);
    double change = 0.0;
    for (std::size_t e = 0; e < next.P.data().size(); ++e)
      change += std::abs(next.P.data()[e] - P.P.data()[e]);
    change /= double(problem.size());

    diag.tv.push_back(change);
    diag.background_mass.push_back(next.background_mass());
    diag.iterations = iter;
    diag.K1 = ms.stats.K1;
    diag.K2 = ms.stats.K2;
    diag.background_fallbacks += ms.stats.background_fallbacks;
    diag.delta_fallbacks += ms.stats.delta_fallbacks;
    diag.trigger_scale_fallbacks += ms.stats.trigger_scale_fallbacks;
    result.model = std::move(ms.model);
    P = std::move(next);
    if (observer) observer(iter, P);
    if (change <= config.tv_tolerance) {
      diag.converged = true;
      break;
    }
  }
  result.P = std::move(P);
  diag.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

DenseBranching to_dense(const BranchingDistribution& P) {
  const std::size_t n = P.size();
  DenseBranching dense{std::vector<double>(n), Matrix(n, n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    dense.background[i] = P.P(i, 0);
    for (std::size_t l = 1; l < P.L(); ++l) dense.trigger(i, P.parent(i, l)) = P.P(i, l);
  }
  return dense;
}

}  // namespace copp
