#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "copp/catalog.hpp"
#include "copp/decluster.hpp"
#include "copp/simulate.hpp"

namespace copp::eval {

/// Half-open space-time cell [t_begin, t_end) x prod_k [lower_k, upper_k).
struct Bin {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::vector<double> lower;
  std::vector<double> upper;

  bool contains(std::span<const double> event) const noexcept;
};

struct ForecastGrid {
  std::vector<Bin> bins;
  std::vector<double> rate;          // expected count per bin
  std::vector<std::uint64_t> count;  // observed count per bin

  std::size_t size() const noexcept { return bins.size(); }
  /// Throws ValidationError on shape mismatch, a negative or non-finite rate,
  /// or overlapping bins.
  void validate() const;
};

/// Throws ValidationError if any two bins overlap or a bin is empty.
void check_bins(const std::vector<Bin>& bins);

/// Cartesian product of a time interval and per-covariate edge lists.
std::vector<Bin> make_bins(double t_begin, double t_end,
                           const std::vector<std::vector<double>>& edges);

/// Expected counts: integral over each bin of mu plus, for every history
/// event h, the integral of g(. - h). Gaussian integrals are exact products of
/// univariate interval masses. History events must not be later than the
/// earliest bin start.
std::vector<double> predictive_rates(const IntensityModel& model, const Matrix& history,
                                     const std::vector<Bin>& bins, unsigned threads = 1);

ForecastGrid predictive_rates(const IntensityModel& model, const EventCatalog& history,
                              std::vector<Bin> bins, unsigned threads = 1);

/// Fills grid.count with the number of catalog events inside each bin.
void count_events(ForecastGrid& grid, const EventCatalog& observed);

struct LScore {
  double value = 0.0;                  // sum_b -rate + n ln rate - ln n!
  double without_factorial = 0.0;      // same sum without the ln n! term
  std::size_t impossible_bins = 0;     // rate 0 with a positive count
  bool impossible() const noexcept { return impossible_bins > 0; }
};

LScore l_score(const ForecastGrid& grid);

/// Log joint Poisson probability of the observed counts; -infinity when a
/// bin with zero rate holds events.
double log_l_score(const ForecastGrid& grid);

/// Expected fraction of triggered events: triggered mass over N.
double estimated_reproductive_ratio(const BranchingDistribution& P);
double estimated_reproductive_ratio(const DenseBranching& P);

struct Curve {
  std::vector<double> x;
  std::vector<double> y;
};

/// Marginal density of the trigger mixture along one coordinate.
Curve trigger_marginal(const IntensityModel& model, std::size_t axis, std::span<const double> grid);

struct ForestSummary {
  std::size_t background = 0;
  std::size_t triggered = 0;
  std::size_t max_generation = 0;      // 0 when every event is background
  std::size_t largest_cluster = 0;     // events sharing one background ancestor
  std::vector<std::size_t> generation;  // per event, 0 for background
};

/// Throws ValidationError when a parent is not strictly earlier than its child.
ForestSummary summarize_forest(const EventCatalog& catalog, const Forest& forest);

/// Daily forecasting: every day in [first_day, first_day + days) is split into
/// the spatial cells and scored against the catalog, conditioning on the
/// events from the preceding `lookback_days`.
struct DailySpec {
  double first_day = 0.0;
  std::size_t days = 1;
  double lookback_days = 7.0;
  std::vector<std::vector<double>> edges;  // per covariate
};

ForecastGrid daily_forecast(const IntensityModel& model, const EventCatalog& catalog,
                            const DailySpec& spec, unsigned threads = 1);

/// Parametric ETAS forecast with a homogeneous background.
struct EtasForecast {
  sim::EtasTrigger params;
  double background_density = 0.0;  // events per day per unit area
  /// Absolute error target of the spatial quadrature, as a fraction of the
  /// kernel's integral over the plane.
  double tolerance = 1e-6;
};

/// integral over [x0, x1] x [y0, y1] of (|x|^2 + d)^{-1-rho}, by nested
/// adaptive Simpson quadrature.
double etas_cell_integral(double x0, double x1, double y0, double y1, double d, double rho,
                          double tolerance);

std::vector<double> etas_rates(const EtasForecast& model, const Matrix& history,
                               std::span<const double> magnitudes, const std::vector<Bin>& bins);

ForecastGrid etas_daily_forecast(const EtasForecast& model, const EventCatalog& catalog,
                                 const DailySpec& spec);

}  // namespace copp::eval
