#include "copp/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "copp/error.hpp"

namespace copp::sim {

namespace {

// Uniform on the open interval (0, 1).
double uniform_open(Rng& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

std::size_t covariates(const SimSpec& spec) { return spec.window.lower.size(); }

double beta_of(const MagnitudeLaw& law) { return law.b_value * std::numbers::ln10; }

double sample_magnitude(const EtasTrigger& etas, Rng& rng) {
  const double beta = beta_of(etas.magnitudes);
  const double span = etas.magnitudes.max_magnitude - etas.M0;
  const double tail = std::isfinite(span) ? -std::expm1(-beta * span) : 1.0;
  return etas.M0 - std::log1p(-uniform_open(rng) * tail) / beta;
}

struct Generated {
  std::vector<double> coords;  // time then covariates
  double magnitude = 0.0;
  std::size_t parent = std::size_t(-1);
};

}  // namespace

double etas_time_integral(double c, double omega) {
  if (!(c > 0.0) || !(omega > 0.0)) throw ValidationError("ETAS time kernel needs c > 0 and omega > 0");
  return std::pow(c, -omega) / omega;
}

double etas_space_integral(double d, double rho) {
  if (!(d > 0.0) || !(rho > 0.0)) throw ValidationError("ETAS space kernel needs d > 0 and rho > 0");
  return std::numbers::pi * std::pow(d, -rho) / rho;
}

double etas_productivity_mean(double a, const MagnitudeLaw& law) {
  const double beta = beta_of(law);
  if (!(beta > 0.0)) throw ValidationError("b-value must be positive");
  if (a == 0.0) return 1.0;
  const double span = law.max_magnitude;  // relative to M0 by the caller
  if (!std::isfinite(span)) {
    if (a >= beta) throw ValidationError("E[exp(a(m - M0))] diverges for a >= b ln 10");
    return beta / (beta - a);
  }
  const double norm = -std::expm1(-beta * span);
  if (a == beta) return beta * span / norm;
  return beta / norm * std::expm1((a - beta) * span) / (a - beta);
}

void SimSpec::validate() const {
  const std::size_t q = window.lower.size();
  if (window.upper.size() != q) throw ValidationError("window bounds have different lengths");
  if (!(window.t_end > window.t_begin)) throw ValidationError("window must have positive duration");
  for (std::size_t k = 0; k < q; ++k)
    if (!(window.upper[k] > window.lower[k])) throw ValidationError("window box must be non-empty");
  if (scales.size() != q + 1) throw ValidationError("need one scale for time plus one per covariate");
  for (double s : scales)
    if (!(s > 0.0)) throw ValidationError("scales must be strictly positive");

  if (const auto* h = std::get_if<HomogeneousBackground>(&background)) {
    if (!(h->rate > 0.0)) throw ValidationError("background rate must be positive");
  } else {
    const auto& m = std::get<GaussianMixtureBackground>(background);
    if (!(m.rate > 0.0)) throw ValidationError("background rate must be positive");
    if (m.components.empty()) throw ValidationError("mixture background needs components");
    for (const auto& c : m.components) {
      if (!(c.weight > 0.0)) throw ValidationError("mixture weights must be positive");
      if (c.mean.size() != q || c.sd.size() != q)
        throw ValidationError("mixture component dimension does not match the window");
      for (double s : c.sd)
        if (!(s > 0.0)) throw ValidationError("mixture sds must be positive");
    }
  }

  if (const auto* g = std::get_if<GaussianTrigger>(&trigger)) {
    if (!(g->R >= 0.0)) throw ValidationError("reproductive ratio must be >= 0");
    if (!(g->decay_rate > 0.0)) throw ValidationError("trigger decay rate must be positive");
    if (g->spatial_sd.size() != q) throw ValidationError("trigger sd vector must match covariates");
    for (double s : g->spatial_sd)
      if (!(s > 0.0)) throw ValidationError("trigger sds must be positive");
  } else {
    const auto& e = std::get<EtasTrigger>(trigger);
    if (q != 2) throw ValidationError("ETAS trigger needs exactly two spatial covariates");
    if (!(e.K0 >= 0.0)) throw ValidationError("ETAS K0 must be >= 0");
    if (!(e.omega > 0.0) || !(e.rho > 0.0))
      throw ValidationError("ETAS kernel diverges unless omega > 0 and rho > 0");
    if (!(e.c > 0.0) || !(e.d > 0.0)) throw ValidationError("ETAS c and d must be positive");
    if (!(e.magnitudes.max_magnitude > e.M0)) throw ValidationError("max magnitude must exceed M0");
  }

  const double R = true_reproductive_ratio(*this);
  if (!(R < 1.0))
    throw ValidationError("supercritical specification: reproductive ratio " + std::to_string(R) +
                          " >= 1");
  const double expected = expected_background_count(*this) / (1.0 - R);
  if (expected > max_expected_events)
    throw ResourceGuardError("expected event count " + std::to_string(expected) +
                             " exceeds the guard " + std::to_string(max_expected_events));
}

double true_reproductive_ratio(const SimSpec& spec) {
  if (const auto* g = std::get_if<GaussianTrigger>(&spec.trigger)) return g->R;
  const auto& e = std::get<EtasTrigger>(spec.trigger);
  MagnitudeLaw relative = e.magnitudes;
  relative.max_magnitude -= e.M0;
  return e.K0 * etas_productivity_mean(e.a, relative) * etas_time_integral(e.c, e.omega) *
         etas_space_integral(e.d, e.rho);
}

double expected_background_count(const SimSpec& spec) {
  const double rate = std::visit([](const auto& b) { return b.rate; }, spec.background);
  return rate * spec.window.duration();
}

LabeledCatalog simulate(const SimSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t q = covariates(spec);
  const Window& w = spec.window;
  const auto* etas = std::get_if<EtasTrigger>(&spec.trigger);
  const auto* gauss = std::get_if<GaussianTrigger>(&spec.trigger);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Generated> events;
  const std::size_t hard_cap = static_cast<std::size_t>(4.0 * spec.max_expected_events) + 1000;

  // Background.
  std::poisson_distribution<long long> bg_count(expected_background_count(spec));
  const long long n_bg = bg_count(rng);
  std::vector<double> mixture_cdf;
  if (const auto* m = std::get_if<GaussianMixtureBackground>(&spec.background)) {
    double total = 0.0;
    for (const auto& c : m->components) mixture_cdf.push_back(total += c.weight);
    for (auto& v : mixture_cdf) v /= total;
  }
  for (long long b = 0; b < n_bg; ++b) {
    Generated e;
    e.coords.resize(q + 1);
    e.coords[0] = w.t_begin + uniform_open(rng) * w.duration();
    if (mixture_cdf.empty()) {
      for (std::size_t k = 0; k < q; ++k)
        e.coords[k + 1] = w.lower[k] + uniform_open(rng) * (w.upper[k] - w.lower[k]);
    } else {
      const auto& comps = std::get<GaussianMixtureBackground>(spec.background).components;
      const double u = uniform_open(rng);
      const std::size_t c = std::min<std::size_t>(
          std::lower_bound(mixture_cdf.begin(), mixture_cdf.end(), u) - mixture_cdf.begin(),
          comps.size() - 1);
      for (std::size_t k = 0; k < q; ++k)
        e.coords[k + 1] = comps[c].mean[k] + comps[c].sd[k] * normal(rng);
    }
    if (etas) e.magnitude = sample_magnitude(*etas, rng);
    events.push_back(std::move(e));
  }

  // Offspring, generation by generation (breadth first).
  double space_integral = 0.0, time_integral = 0.0;
  if (etas) {
    space_integral = etas_space_integral(etas->d, etas->rho);
    time_integral = etas_time_integral(etas->c, etas->omega);
  }
  for (std::size_t idx = 0; idx < events.size(); ++idx) {
    const double expected =
        gauss ? gauss->R
              : etas->K0 * std::exp(etas->a * (events[idx].magnitude - etas->M0)) *
                    time_integral * space_integral;
    if (expected <= 0.0) continue;
    std::poisson_distribution<long long> children(expected);
    const long long count = children(rng);
    for (long long c = 0; c < count; ++c) {
      Generated child;
      child.parent = idx;
      child.coords = events[idx].coords;
      if (gauss) {
        child.coords[0] += -std::log(uniform_open(rng)) / gauss->decay_rate;
        for (std::size_t k = 0; k < q; ++k) child.coords[k + 1] += gauss->spatial_sd[k] * normal(rng);
      } else {
        child.coords[0] += etas->c * (std::pow(uniform_open(rng), -1.0 / etas->omega) - 1.0);
        // |dx|^2 has CDF 1 - (d / (s + d))^rho.
        const double s = etas->d * (std::pow(uniform_open(rng), -1.0 / etas->rho) - 1.0);
        const double r = std::sqrt(s);
        const double theta = 2.0 * std::numbers::pi * uniform_open(rng);
        child.coords[1] += r * std::cos(theta);
        child.coords[2] += r * std::sin(theta);
        child.magnitude = sample_magnitude(*etas, rng);
      }
      // Later descendants would be later still; nothing past the horizon matters.
      if (child.coords[0] > w.t_end) continue;
      events.push_back(std::move(child));
      if (events.size() > hard_cap)
        throw ResourceGuardError("simulation exceeded " + std::to_string(hard_cap) + " events");
    }
  }

  // Keep what lies inside the window.
  std::vector<std::size_t> kept_slot(events.size(), std::size_t(-1));
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < events.size(); ++i)
    if (w.contains(events[i].coords)) {
      kept_slot[i] = kept.size();
      kept.push_back(i);
    }
  if (kept.empty()) throw ValidationError("simulation produced no events inside the window");

  Matrix coords(kept.size(), q + 1);
  std::vector<double> magnitudes;
  for (std::size_t r = 0; r < kept.size(); ++r) {
    std::copy(events[kept[r]].coords.begin(), events[kept[r]].coords.end(), coords.row(r).begin());
    if (etas) magnitudes.push_back(events[kept[r]].magnitude);
  }
  std::vector<std::string> names{"time"};
  for (std::size_t k = 1; k <= q; ++k) names.push_back("x" + std::to_string(k));
  if (etas) names.push_back("magnitude");
  EventCatalog catalog(std::move(coords), spec.scales, spec.window, false, std::move(magnitudes),
                       std::move(names));

  // Map generated parents onto sorted catalog rows.
  std::vector<std::size_t> catalog_row(kept.size());
  for (std::size_t i = 0; i < catalog.size(); ++i) catalog_row[catalog.source_row(i)] = i;
  LabeledCatalog out{std::move(catalog), Forest{std::vector<Index>(kept.size(), kNoIndex)}, 0,
                     events.size() - kept.size()};
  for (std::size_t r = 0; r < kept.size(); ++r) {
    const std::size_t parent = events[kept[r]].parent;
    if (parent == std::size_t(-1)) continue;
    const std::size_t slot = kept_slot[parent];
    if (slot == std::size_t(-1)) {
      ++out.orphans;
      continue;
    }
    out.truth.parent[catalog_row[r]] = static_cast<Index>(catalog_row[slot]);
  }
  return out;
}

EventCatalog benchmark_catalog(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ValidationError("benchmark catalog needs at least one event");
  SimSpec spec;
  spec.background = HomogeneousBackground{20.0};
  spec.trigger = GaussianTrigger{0.5, 10.0, {0.05, 0.05}};
  spec.scales = {1.0, 0.1, 0.1};
  spec.seed = seed;
  // Expected density is 40 events per day; start with 30% headroom.
  double span = 1.3 * double(n) / 40.0 + 5.0;
  for (;;) {
    spec.window = Window{0.0, span, {0.0, 0.0}, {10.0, 10.0}};
    spec.max_expected_events = std::max(5e6, 4.0 * double(n));
    LabeledCatalog lc = simulate(spec);
    if (lc.catalog.size() >= n) {
      std::vector<std::size_t> rows(n);
      for (std::size_t i = 0; i < n; ++i) rows[i] = i;
      Window w = spec.window;
      w.t_end = lc.catalog.time(n - 1);
      return EventCatalog(select_rows(lc.catalog.events(), rows), spec.scales, w, false, {},
                          lc.catalog.column_names());
    }
    span *= 1.5;
  }
}

}  // namespace copp::sim
