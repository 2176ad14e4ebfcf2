#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "copp/catalog.hpp"
#include "copp/decluster.hpp"

namespace copp::sim {

/// Uniform background: `rate` events per day spread evenly over the window box.
struct HomogeneousBackground {
  double rate = 1.0;
};

struct MixtureComponent {
  double weight = 1.0;
  std::vector<double> mean;  // one per covariate
  std::vector<double> sd;
};

/// Time-homogeneous background whose locations follow a Gaussian mixture;
/// `rate` is the total events per day.
struct GaussianMixtureBackground {
  double rate = 1.0;
  std::vector<MixtureComponent> components;
};

/// Poisson(R) children per event, exponential delay with rate `decay_rate`
/// per day, Gaussian displacement with per-covariate `spatial_sd`.
struct GaussianTrigger {
  double R = 0.5;
  double decay_rate = 1.0;
  std::vector<double> spatial_sd;
};

/// Gutenberg-Richter magnitudes: exponential with rate b * ln 10 above the
/// completeness magnitude, truncated at max_magnitude.
struct MagnitudeLaw {
  double b_value = 1.0;
  double max_magnitude = 8.0;
};

/// ETAS trigger K0 e^{a(m - M0)} / ((dt + c)^{1+omega} (|dx|^2 + d)^{1+rho})
/// over two spatial covariates.
struct EtasTrigger {
  double K0 = 0.0;
  double a = 0.0;
  double c = 0.01;
  double omega = 0.5;
  double d = 0.01;
  double rho = 0.5;
  double M0 = 3.0;
  MagnitudeLaw magnitudes;
};

struct SimSpec {
  std::variant<HomogeneousBackground, GaussianMixtureBackground> background;
  std::variant<GaussianTrigger, EtasTrigger> trigger;
  Window window;               // events are kept only inside this window
  std::vector<double> scales;  // characteristic lengths attached to the catalog
  std::uint64_t seed = 1;
  /// Refuse specs whose expected event count nu*T/(1-R) exceeds this.
  double max_expected_events = 5e6;

  void validate() const;
};

struct LabeledCatalog {
  EventCatalog catalog;
  /// Ground-truth parent per catalog event (kNoIndex for background).
  Forest truth;
  /// Events whose true parent fell outside the window; recorded as background.
  std::size_t orphans = 0;
  /// Generated events dropped for lying outside the window.
  std::size_t discarded = 0;
};

/// Cluster (branching) construction: Poisson background, then Poisson(expected
/// offspring) children with i.i.d. displacements, generation by generation.
LabeledCatalog simulate(const SimSpec& spec);

/// Fixed-density workload for timing: background 20 events per day on a
/// 10 x 10 box, Gaussian trigger with R = 0.5, decay rate 10 per day and
/// spatial sd 0.05, scales (1, 0.1, 0.1). Returns exactly the first n events,
/// so doubling n doubles the time span at constant density.
EventCatalog benchmark_catalog(std::size_t n, std::uint64_t seed);

/// Expected direct offspring per event.
double true_reproductive_ratio(const SimSpec& spec);

/// Expected background events over the window.
double expected_background_count(const SimSpec& spec);

/// integral_0^inf (t + c)^{-1-omega} dt = c^{-omega} / omega.
double etas_time_integral(double c, double omega);
/// integral over R^2 of (|x|^2 + d)^{-1-rho} dx = pi d^{-rho} / rho.
double etas_space_integral(double d, double rho);
/// E[exp(a (m - M0))] under the truncated exponential magnitude law.
double etas_productivity_mean(double a, const MagnitudeLaw& law);

}  // namespace copp::sim
