#pragma once

// Property checks over random EM instances, shared by the unit suite and the
// acceptance binary.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "copp/decluster.hpp"
#include "copp/simulate.hpp"

namespace invariants {

struct Tally {
  std::size_t instances = 0;
  std::size_t row_stochastic_failures = 0;
  std::size_t causality_failures = 0;
  std::size_t intensity_order_failures = 0;
  std::size_t mass_identity_failures = 0;
  std::size_t forest_order_failures = 0;
  double worst_row_error = 0.0;
  double worst_mass_error = 0.0;
};

// Random catalog: simulated with random rate, R and window, and every third
// instance snapped to integer times so that simultaneous events occur.
inline copp::EventCatalog random_instance(std::uint64_t seed, bool& time_independent) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  copp::sim::SimSpec s;
  s.background = copp::sim::HomogeneousBackground{2.0 + 6.0 * u(rng)};
  s.trigger = copp::sim::GaussianTrigger{0.7 * u(rng), 2.0 + 10.0 * u(rng), {0.03 + 0.1 * u(rng), 0.03 + 0.1 * u(rng)}};
  s.window = copp::Window{0.0, 8.0 + 12.0 * u(rng), {0.0, 0.0}, {1.0, 1.0}};
  s.scales = {1.0, 0.1, 0.1};
  s.seed = seed * 7919 + 1;
  auto lc = copp::sim::simulate(s);
  time_independent = seed % 2 == 1;
  copp::Matrix ev = lc.catalog.events();
  if (seed % 3 == 0)
    for (std::size_t i = 0; i < ev.rows(); ++i) ev(i, 0) = std::floor(ev(i, 0));
  return copp::EventCatalog(std::move(ev), s.scales, s.window, time_independent);
}

inline void check_distribution(const copp::DeclusterProblem& problem,
                               const copp::BranchingDistribution& bd, Tally& t) {
  const std::size_t n = bd.size(), L = bd.L();
  bool row_ok = true, causal_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      const double v = bd.P(i, l);
      if (!(v >= 0.0 && v <= 1.0)) row_ok = false;
      s += v;
      const bool earlier = problem.catalog().time(bd.parent(i, l)) < problem.catalog().time(i);
      if (l > 0 && !earlier && v != 0.0) causal_ok = false;
    }
    t.worst_row_error = std::max(t.worst_row_error, std::abs(s - 1.0));
    if (std::abs(s - 1.0) > 1e-12) row_ok = false;
  }
  const auto q = bd.Q();
  double qsum = 0.0;
  for (double v : q) qsum += v;
  const double err = std::abs(bd.background_mass() + qsum - double(n)) / double(n);
  t.worst_mass_error = std::max(t.worst_mass_error, err);
  if (err > 1e-12) ++t.mass_identity_failures;
  if (!row_ok) ++t.row_stochastic_failures;
  if (!causal_ok) ++t.causality_failures;
}

inline void check_intensities(const copp::DeclusterProblem& problem,
                              const copp::EventIntensities& v, Tally& t) {
  for (std::size_t i = 0; i < problem.size(); ++i) {
    double lambda = v.background[i];
    for (std::size_t l = 1; l < problem.L(); ++l)
      if (problem.causal(i, l)) lambda += v.trigger(i, l);
    if (!(v.background[i] >= 0.0) || !(lambda >= v.background[i])) {
      ++t.intensity_order_failures;
      return;
    }
  }
}

inline void check_forest(const copp::EventCatalog& cat, const copp::Forest& f, Tally& t) {
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!f.is_background(i) && !(cat.time(f.parent[i]) < cat.time(i))) {
      ++t.forest_order_failures;
      return;
    }
}

// Three EM iterations per instance, checking after every step.
inline Tally run(std::size_t instances, std::uint64_t first_seed) {
  Tally t;
  for (std::uint64_t seed = first_seed; t.instances < instances; ++seed) {
    bool ti = false;
    const auto cat = random_instance(seed, ti);
    copp::EmConfig c;
    c.L = 2 + seed % 14;
    c.seed = seed;
    const copp::DeclusterProblem problem(cat, c);
    auto bd = copp::init_branching(problem);
    check_distribution(problem, bd, t);
    copp::Rng rng(seed);
    for (int it = 0; it < 3; ++it) {
      const auto ms = copp::m_step(problem, bd, c, rng);
      check_intensities(problem, ms.values, t);
      bd = copp::e_step(problem, ms.values);
      check_distribution(problem, bd, t);
      check_forest(cat, copp::sample_forest(bd, rng), t);
    }
    ++t.instances;
  }
  return t;
}

}  // namespace invariants
