#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "copp/catalog.hpp"
#include "copp/kde.hpp"
#include "copp/matrix.hpp"
#include "copp/neighbors.hpp"

namespace copp {

enum class BackgroundMode { kSpaceTime, kTimeIndependent };

/// Scaling of the trigger mixture. kPerParent divides the Q-weighted KDE by N
/// so that g is an offspring intensity per parent event; kNone keeps the raw
/// Q weights.
enum class TriggerNormalization { kPerParent, kNone };

struct EmConfig {
  std::size_t L = 10;
  std::optional<std::size_t> K1;  // nullopt: optimal_k rule on the background mass
  std::optional<std::size_t> K2;  // nullopt: optimal_k rule on the triggered mass
  /// Neighbours per Delta-event in the trigger KDE; 0 means "same as L".
  std::size_t delta_neighbors = 0;
  double tv_tolerance = 1e-2;
  std::size_t max_iterations = 100;
  std::size_t forest_samples = 1;
  std::uint64_t seed = 1;
  /// Restart the forest-sampling stream from `seed` at every M-step, so that
  /// consecutive iterations draw forests with common random numbers and the
  /// Monte Carlo bandwidths settle as P settles. false: one continuing stream.
  bool reuse_forest_draws = true;
  unsigned threads = 1;
  /// nullopt: follow the catalog's time_independent_background flag.
  std::optional<BackgroundMode> background_mode;
  kde::BandwidthReading bandwidth_reading = kde::BandwidthReading::kStandardDeviation;
  TriggerNormalization trigger_normalization = TriggerNormalization::kPerParent;
  /// Lower bound on the standardized bandwidth factors d^X and d^Y.
  double min_bandwidth = 1e-6;
  /// Memory ceiling for the dense exact baseline.
  std::size_t exact_memory_limit_bytes = std::size_t{2} << 30;

  void validate() const;
  std::size_t resolved_delta_neighbors() const noexcept { return delta_neighbors ? delta_neighbors : L; }
};

using Rng = std::mt19937_64;

/// Uniform draw on [0, 1) with 53 random bits; identical on every platform.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// N x L responsibilities. Column 0 is the background probability, column l
/// the probability that parent(i, l) triggered event i.
struct BranchingDistribution {
  Matrix P;
  std::vector<Index> parents;  // N x L, parents[i * L + l] = alpha(i, l)

  std::size_t size() const noexcept { return P.rows(); }
  std::size_t L() const noexcept { return P.cols(); }
  Index parent(std::size_t i, std::size_t l) const noexcept { return parents[i * L() + l]; }

  /// Flattened NL trigger weights: Q[L*i + l] = P(i, l) for l >= 1, 0 for l = 0.
  std::vector<double> Q() const;
  double background_mass() const noexcept;
  double triggered_mass() const noexcept;
};

/// Parent of each event; kNoIndex marks a background event.
struct Forest {
  std::vector<Index> parent;

  std::size_t size() const noexcept { return parent.size(); }
  bool is_background(std::size_t i) const noexcept { return parent[i] == kNoIndex; }
  std::size_t background_count() const noexcept;
};

/// Evaluable background and trigger estimates.
struct IntensityModel {
  BackgroundMode background_mode = BackgroundMode::kSpaceTime;
  double window_length = 1.0;
  /// Event columns the background kernel runs over (all, or covariates only).
  std::vector<std::size_t> background_columns;
  /// Centres are events (restricted to background_columns), weights P(., 0).
  kde::GaussianMixture mu;
  /// Divisor applied to mu: the window length in time-independent mode, else 1.
  double mu_divisor = 1.0;
  /// Centres are Delta-events, weights Q scaled per TriggerNormalization.
  kde::GaussianMixture g;

  /// Full-mixture background intensity at an event coordinate (all p columns).
  double background_at(std::span<const double> event) const;
  /// Full-mixture trigger intensity for a Delta-event (child minus parent);
  /// zero unless the time lag is positive.
  double trigger_at(std::span<const double> delta) const;
};

/// Truncated intensity values at the data: background at each event and the
/// trigger contribution of each neighbour (0 for acausal neighbours).
struct EventIntensities {
  std::vector<double> background;  // N
  Matrix trigger;                  // N x L
};

/// Cached geometry for the accelerated EM: the event neighbour index alpha,
/// the Delta-events Y and their neighbour index gamma.
class DeclusterProblem {
 public:
  DeclusterProblem(const EventCatalog& catalog, const EmConfig& config);

  const EventCatalog& catalog() const noexcept { return *catalog_; }
  std::size_t size() const noexcept { return catalog_->size(); }
  std::size_t L() const noexcept { return alpha_.L(); }
  std::size_t delta_L() const noexcept { return gamma_.L(); }
  BackgroundMode background_mode() const noexcept { return mode_; }

  const NeighborIndex& alpha() const noexcept { return alpha_; }
  /// Neighbour index the truncated background sum runs over: alpha itself in
  /// space-time mode, a covariate-only index in time-independent mode.
  const NeighborIndex& background_alpha() const noexcept {
    return mode_ == BackgroundMode::kSpaceTime ? alpha_ : spatial_alpha_;
  }
  const std::vector<std::size_t>& background_columns() const noexcept { return bg_columns_; }
  /// Events restricted to background_columns().
  const Matrix& background_points() const noexcept { return bg_points_; }
  std::span<const double> background_scales() const noexcept { return bg_scales_; }
  double background_divisor() const noexcept { return bg_divisor_; }

  const Matrix& delta_events() const noexcept { return delta_; }
  const NeighborIndex& gamma() const noexcept { return gamma_; }
  /// Unweighted column standard deviations of Y (the metric for gamma).
  std::span<const double> delta_scales() const noexcept { return delta_scales_; }

  /// t_i > t_{alpha(i, l)}, strict.
  bool causal(std::size_t i, std::size_t l) const noexcept { return causal_[i * L() + l] != 0; }
  bool has_causal_pairs() const noexcept { return any_causal_; }

 private:
  const EventCatalog* catalog_;
  BackgroundMode mode_;
  NeighborIndex alpha_;
  NeighborIndex spatial_alpha_;
  std::vector<std::size_t> bg_columns_;
  Matrix bg_points_;
  std::vector<double> bg_scales_;
  double bg_divisor_ = 1.0;
  Matrix delta_;
  std::vector<double> delta_scales_;
  NeighborIndex gamma_;
  std::vector<std::uint8_t> causal_;
  bool any_causal_ = false;
};

/// Column standard deviations of the rows of `points` (population form), with
/// zero spreads replaced by 1.
std::vector<double> unweighted_scales(const Matrix& points);

/// Uniform start: background 1/2, each causal neighbour 1/(2L), rows renormalized.
BranchingDistribution init_branching(const DeclusterProblem& problem);

/// Responsibilities from truncated intensities. Throws DegenerateError when
/// the total intensity at an event is zero.
BranchingDistribution e_step(const DeclusterProblem& problem, const EventIntensities& values);

struct WeightedMoments {
  std::vector<double> mean;
  std::vector<double> sd;
};

/// Weighted mean and (population) standard deviation of each column.
/// Throws DegenerateError for zero total weight or a zero standard deviation.
WeightedMoments background_stats(const Matrix& points, std::span<const double> weights);

/// One categorical draw per event. Categories are visited background first,
/// then candidate parents in ascending event index, so the draw depends only
/// on the probabilities and not on neighbour order.
Forest sample_forest(const BranchingDistribution& P, Rng& rng);

/// Standardized distance from every row of `points` to its K-th closest
/// background event under `forest` (an event that is itself background counts
/// as its own first neighbour). With fewer than K background events the
/// farthest one is used and `fallbacks` is incremented per affected event.
std::vector<double> nn_background_distance(const Matrix& points, const Forest& forest,
                                           std::span<const double> scales, std::size_t K,
                                           std::size_t* fallbacks = nullptr);

struct MStepStats {
  std::size_t K1 = 0;
  std::size_t K2 = 0;
  WeightedMoments background;
  WeightedMoments trigger;
  std::size_t background_fallbacks = 0;  // events whose d^X used a short background set
  std::size_t delta_fallbacks = 0;       // Delta-events whose d^Y used a short realized set
  std::size_t trigger_scale_fallbacks = 0;
};

struct MStepResult {
  IntensityModel model;
  EventIntensities values;
  MStepStats stats;
};

MStepResult m_step(const DeclusterProblem& problem, const BranchingDistribution& P,
                   const EmConfig& config, Rng& rng);

/// Truncated background and trigger values at the data for a fitted model
/// whose centres are aligned with the problem's events and Delta-events.
EventIntensities evaluate_at_events(const DeclusterProblem& problem, const IntensityModel& model,
                                    unsigned threads = 1);

struct EmDiagnostics {
  std::vector<double> tv;               // per-iteration mean L1 change in P
  std::vector<double> background_mass;  // per-iteration sum_i P(i, 0)
  std::size_t iterations = 0;
  bool converged = false;
  double wall_seconds = 0.0;
  std::size_t L = 0;
  std::size_t delta_L = 0;
  std::size_t K1 = 0;
  std::size_t K2 = 0;
  std::size_t background_fallbacks = 0;
  std::size_t delta_fallbacks = 0;
  std::size_t trigger_scale_fallbacks = 0;
};

struct EmResult {
  IntensityModel model;
  BranchingDistribution P;
  EmDiagnostics diagnostics;
};

using IterationObserver = std::function<void(std::size_t iteration, const BranchingDistribution&)>;

/// Accelerated stochastic declustering: alternate m_step and e_step from
/// init_branching until the mean L1 change in P drops to tv_tolerance or
/// max_iterations is reached (diagnostics.converged = false).
EmResult run_em(const EventCatalog& catalog, const EmConfig& config,
                const IterationObserver& observer = {});

/// Dense responsibilities over all N candidate parents, indexed by event.
struct DenseBranching {
  std::vector<double> background;  // N
  Matrix trigger;                  // N x N, trigger(i, j) = P[j triggered i]
};

struct ExactEmResult {
  IntensityModel model;
  DenseBranching P;
  EmDiagnostics diagnostics;
};

using DenseIterationObserver = std::function<void(std::size_t iteration, const DenseBranching&)>;

/// Approximate peak bytes of run_em: O(N L) for the Delta-events, their
/// neighbour lists and the responsibilities.
std::size_t accelerated_memory_estimate(std::size_t n, std::size_t p, std::size_t L,
                                        std::size_t delta_neighbors);

/// Bytes the dense baseline would allocate for this catalog and config.
std::size_t exact_memory_estimate(std::size_t n, std::size_t p, std::size_t delta_neighbors);

/// Untruncated O(N^2) stochastic declustering over every candidate parent.
/// Uses the same random stream as run_em, so with L = N the two produce the
/// same P trajectory. Throws ResourceGuardError above exact_memory_limit_bytes.
ExactEmResult run_em_exact(const EventCatalog& catalog, const EmConfig& config,
                           const DenseIterationObserver& observer = {});

/// sample_forest over the dense layout, with the same draw order.
Forest sample_forest(const DenseBranching& P, Rng& rng);

/// Expand a truncated distribution to the dense event-indexed layout.
DenseBranching to_dense(const BranchingDistribution& P);

}  // namespace copp
