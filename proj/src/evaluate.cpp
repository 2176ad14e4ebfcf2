#include "copp/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "copp/error.hpp"
#include "copp/parallel.hpp"

namespace copp::eval {

namespace {

constexpr std::size_t kHistoryChunk = 32;

bool overlap(const Bin& a, const Bin& b) noexcept {
  if (!(a.t_begin < b.t_end && b.t_begin < a.t_end)) return false;
  for (std::size_t k = 0; k < a.lower.size(); ++k)
    if (!(a.lower[k] < b.upper[k] && b.lower[k] < a.upper[k])) return false;
  return true;
}

// Column c of an event row: 0 is time, c >= 1 covariate c - 1.
std::pair<double, double> bin_interval(const Bin& bin, std::size_t column) noexcept {
  if (column == 0) return {bin.t_begin, bin.t_end};
  return {bin.lower[column - 1], bin.upper[column - 1]};
}

struct PreparedMixture {
  std::vector<std::size_t> active;  // centres with positive weight
  std::vector<double> sd;           // active.size() x dim
};

PreparedMixture prepare(const kde::GaussianMixture& m) {
  PreparedMixture out;
  const std::size_t dim = m.dimension();
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (!(m.weights[r] > 0.0)) continue;
    out.active.push_back(r);
    for (std::size_t k = 0; k < dim; ++k)
      out.sd.push_back(kde::kernel_sd(m.factors[r], m.scales[k], m.reading));
  }
  return out;
}

double background_integral(const IntensityModel& model, const PreparedMixture& prep,
                           const Bin& bin) {
  const auto& cols = model.background_columns;
  const std::size_t dim = cols.size();
  double total = 0.0;
  for (std::size_t a = 0; a < prep.active.size(); ++a) {
    const std::size_t j = prep.active[a];
    double mass = model.mu.weights[j];
    for (std::size_t c = 0; c < dim && mass > 0.0; ++c) {
      const auto [lo, hi] = bin_interval(bin, cols[c]);
      mass *= kde::normal_interval_mass(lo, hi, model.mu.centers(j, c), prep.sd[a * dim + c]);
    }
    total += mass;
  }
  const bool has_time = std::find(cols.begin(), cols.end(), std::size_t{0}) != cols.end();
  if (!has_time) total *= bin.t_end - bin.t_begin;
  return total / model.mu_divisor;
}

void check_history(const Matrix& history, const std::vector<Bin>& bins, std::size_t p) {
  if (history.rows() > 0 && history.cols() != p)
    throw ValidationError("history events have the wrong number of columns");
  if (bins.empty() || history.rows() == 0) return;
  double first = std::numeric_limits<double>::infinity();
  for (const auto& b : bins) first = std::min(first, b.t_begin);
  for (std::size_t h = 0; h < history.rows(); ++h)
    if (history(h, 0) > first)
      throw ValidationError("history event at t=" + std::to_string(history(h, 0)) +
                            " is later than the forecast start " + std::to_string(first));
}

// Half-open index range of catalog events with time in [t0, t1).
std::pair<std::size_t, std::size_t> time_range(const EventCatalog& catalog, double t0, double t1) {
  auto first_at_or_after = [&](double t) {
    std::size_t lo = 0, hi = catalog.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (catalog.time(mid) < t) lo = mid + 1; else hi = mid;
    }
    return lo;
  };
  return {first_at_or_after(t0), first_at_or_after(t1)};
}

void count_range(ForecastGrid& grid, const EventCatalog& catalog, std::size_t begin,
                 std::size_t end, std::size_t first_bin) {
  for (std::size_t i = begin; i < end; ++i)
    for (std::size_t b = first_bin; b < grid.bins.size(); ++b)
      if (grid.bins[b].contains(catalog.point(i))) {
        ++grid.count[b];
        break;
      }
}

template <class RateFn>
ForecastGrid daily_grid(const EventCatalog& catalog, const DailySpec& spec, RateFn&& rates_for) {
  if (spec.days == 0) throw ValidationError("daily forecast needs at least one day");
  if (!(spec.lookback_days >= 0.0)) throw ValidationError("lookback must be non-negative");
  if (spec.edges.size() != catalog.covariate_count())
    throw ValidationError("need one edge list per covariate");
  ForecastGrid grid;
  for (std::size_t day = 0; day < spec.days; ++day) {
    const double t0 = spec.first_day + double(day);
    const double t1 = t0 + 1.0;
    auto bins = make_bins(t0, t1, spec.edges);
    const auto [h0, h1] = time_range(catalog, t0 - spec.lookback_days, t0);
    std::vector<std::size_t> rows(h1 - h0);
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = h0 + r;
    const std::vector<double> rates = rates_for(rows, bins);
    const std::size_t first_bin = grid.bins.size();
    grid.bins.insert(grid.bins.end(), bins.begin(), bins.end());
    grid.rate.insert(grid.rate.end(), rates.begin(), rates.end());
    grid.count.resize(grid.bins.size(), 0);
    const auto [e0, e1] = time_range(catalog, t0, t1);
    count_range(grid, catalog, e0, e1, first_bin);
  }
  return grid;
}

// Adaptive Simpson on [a, b] given f at a, midpoint, b.
template <class F>
double simpson(F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
               int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (depth <= 0 || (depth < 46 && std::abs(diff) <= 15.0 * tol))
    return left + right + diff / 15.0;
  return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

// Integrates a function peaked at 0 over [a, b], splitting at the peak.
template <class F>
double integrate_peaked(F&& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  auto piece = [&](double lo, double hi, double t) {
    const double fa = f(lo), fb = f(hi), fm = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(f, lo, hi, fa, fm, fb, whole, t, 50);
  };
  if (a < 0.0 && b > 0.0) return piece(a, 0.0, 0.5 * tol) + piece(0.0, b, 0.5 * tol);
  return piece(a, b, tol);
}

}  // namespace

bool Bin::contains(std::span<const double> event) const noexcept {
  if (!(event[0] >= t_begin && event[0] < t_end)) return false;
  for (std::size_t k = 0; k < lower.size(); ++k)
    if (!(event[k + 1] >= lower[k] && event[k + 1] < upper[k])) return false;
  return true;
}

void check_bins(const std::vector<Bin>& bins) {
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const Bin& bin = bins[b];
    if (bin.lower.size() != bin.upper.size() || (b > 0 && bin.lower.size() != bins[0].lower.size()))
      throw ValidationError("bin " + std::to_string(b) + " has inconsistent dimensions");
    if (!(bin.t_end > bin.t_begin)) throw ValidationError("bin " + std::to_string(b) + " is empty");
    for (std::size_t k = 0; k < bin.lower.size(); ++k)
      if (!(bin.upper[k] > bin.lower[k]))
        throw ValidationError("bin " + std::to_string(b) + " is empty");
  }
  // Sweep in start-time order; only bins whose time spans intersect can overlap.
  std::vector<std::size_t> order(bins.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return bins[a].t_begin < bins[b].t_begin; });
  for (std::size_t a = 0; a < order.size(); ++a)
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      if (bins[order[b]].t_begin >= bins[order[a]].t_end) break;
      if (overlap(bins[order[a]], bins[order[b]]))
        throw ValidationError("bins " + std::to_string(order[a]) + " and " +
                              std::to_string(order[b]) + " overlap");
    }
}

void ForecastGrid::validate() const {
  if (rate.size() != bins.size() || count.size() != bins.size())
    throw ValidationError("forecast grid arrays have different lengths");
  for (double r : rate)
    if (!std::isfinite(r) || r < 0.0) throw ValidationError("forecast rates must be finite and >= 0");
  check_bins(bins);
}

std::vector<Bin> make_bins(double t_begin, double t_end,
                           const std::vector<std::vector<double>>& edges) {
  for (const auto& e : edges) {
    if (e.size() < 2) throw ValidationError("each covariate needs at least two edges");
    if (!std::is_sorted(e.begin(), e.end()) || std::adjacent_find(e.begin(), e.end()) != e.end())
      throw ValidationError("bin edges must be strictly increasing");
  }
  std::vector<Bin> bins;
  std::vector<std::size_t> cell(edges.size(), 0);
  while (true) {
    Bin b{t_begin, t_end, {}, {}};
    for (std::size_t k = 0; k < edges.size(); ++k) {
      b.lower.push_back(edges[k][cell[k]]);
      b.upper.push_back(edges[k][cell[k] + 1]);
    }
    bins.push_back(std::move(b));
    std::size_t k = edges.size();
    while (k > 0) {
      --k;
      if (++cell[k] + 1 < edges[k].size()) break;
      cell[k] = 0;
      if (k == 0) return bins;
    }
    if (edges.empty()) return bins;
  }
}

std::vector<double> predictive_rates(const IntensityModel& model, const Matrix& history,
                                     const std::vector<Bin>& bins, unsigned threads) {
  check_bins(bins);
  if (bins.empty()) return {};
  const std::size_t p = bins[0].lower.size() + 1;
  if (model.g.size() > 0 && model.g.dimension() != p)
    throw ValidationError("bins do not match the trigger dimension");
  for (std::size_t c : model.background_columns)
    if (c >= p) throw ValidationError("bins do not match the background dimension");
  check_history(history, bins, p);

  const PreparedMixture mu = prepare(model.mu);
  std::vector<double> rates(bins.size());
  parallel_for(bins.size(), threads,
               [&](std::size_t b) { rates[b] = background_integral(model, mu, bins[b]); });
  if (model.g.size() == 0 || history.rows() == 0) return rates;

  // Bins sharing a time interval share the time factor of every (event, centre) pair.
  std::map<std::pair<double, double>, std::vector<std::size_t>> groups;
  for (std::size_t b = 0; b < bins.size(); ++b) groups[{bins[b].t_begin, bins[b].t_end}].push_back(b);

  const PreparedMixture g = prepare(model.g);
  const std::size_t chunks = (history.rows() + kHistoryChunk - 1) / kHistoryChunk;
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(bins.size(), 0.0));
  parallel_for(chunks, threads, [&](std::size_t c) {
    auto& acc = partial[c];
    const std::size_t h_end = std::min(history.rows(), (c + 1) * kHistoryChunk);
    for (const auto& [interval, members] : groups) {
      for (std::size_t h = c * kHistoryChunk; h < h_end; ++h) {
        const auto event = history.row(h);
        for (std::size_t a = 0; a < g.active.size(); ++a) {
          const std::size_t r = g.active[a];
          const double* sd = g.sd.data() + a * p;
          const double tm = kde::normal_interval_mass(interval.first - event[0],
                                                      interval.second - event[0],
                                                      model.g.centers(r, 0), sd[0]);
          if (tm == 0.0) continue;
          const double wt = model.g.weights[r] * tm;
          for (std::size_t b : members) {
            double mass = wt;
            for (std::size_t k = 1; k < p && mass > 0.0; ++k)
              mass *= kde::normal_interval_mass(bins[b].lower[k - 1] - event[k],
                                                bins[b].upper[k - 1] - event[k],
                                                model.g.centers(r, k), sd[k]);
            acc[b] += mass;
          }
        }
      }
    }
  });
  for (const auto& acc : partial)
    for (std::size_t b = 0; b < bins.size(); ++b) rates[b] += acc[b];
  return rates;
}

ForecastGrid predictive_rates(const IntensityModel& model, const EventCatalog& history,
                              std::vector<Bin> bins, unsigned threads) {
  ForecastGrid grid;
  grid.rate = predictive_rates(model, history.events(), bins, threads);
  grid.count.assign(bins.size(), 0);
  grid.bins = std::move(bins);
  return grid;
}

void count_events(ForecastGrid& grid, const EventCatalog& observed) {
  grid.count.assign(grid.bins.size(), 0);
  count_range(grid, observed, 0, observed.size(), 0);
}

LScore l_score(const ForecastGrid& grid) {
  if (grid.rate.size() != grid.bins.size() || grid.count.size() != grid.bins.size())
    throw ValidationError("forecast grid arrays have different lengths");
  LScore s;
  for (std::size_t b = 0; b < grid.bins.size(); ++b) {
    const double rate = grid.rate[b];
    const double n = double(grid.count[b]);
    if (rate == 0.0) {
      if (grid.count[b] > 0) ++s.impossible_bins;
      continue;
    }
    const double term = -rate + n * std::log(rate);
    s.without_factorial += term;
    s.value += term - std::lgamma(n + 1.0);
  }
  if (s.impossible()) {
    s.value = -std::numeric_limits<double>::infinity();
    s.without_factorial = -std::numeric_limits<double>::infinity();
  }
  return s;
}

double log_l_score(const ForecastGrid& grid) { return l_score(grid).value; }

double estimated_reproductive_ratio(const BranchingDistribution& P) {
  if (P.size() == 0) return 0.0;
  return P.triggered_mass() / double(P.size());
}

double estimated_reproductive_ratio(const DenseBranching& P) {
  const std::size_t n = P.background.size();
  if (n == 0) return 0.0;
  double total = 0.0;
  for (double v : P.trigger.data()) total += v;
  return total / double(n);
}

Curve trigger_marginal(const IntensityModel& model, std::size_t axis,
                       std::span<const double> grid) {
  Curve out{{grid.begin(), grid.end()}, std::vector<double>(grid.size(), 0.0)};
  if (model.g.size() == 0) return out;
  if (axis >= model.g.dimension())
    throw ArgumentError("axis " + std::to_string(axis) + " outside the trigger dimension");
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t r = 0; r < model.g.size(); ++r) {
    const double w = model.g.weights[r];
    if (!(w > 0.0)) continue;
    const double sd = kde::kernel_sd(model.g.factors[r], model.g.scales[axis], model.g.reading);
    const double c = model.g.centers(r, axis);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double z = (grid[k] - c) / sd;
      out.y[k] += w * inv_sqrt_2pi / sd * std::exp(-0.5 * z * z);
    }
  }
  return out;
}

ForestSummary summarize_forest(const EventCatalog& catalog, const Forest& forest) {
  const std::size_t n = catalog.size();
  if (forest.size() != n) throw ValidationError("forest size does not match the catalog");
  ForestSummary s;
  s.generation.assign(n, 0);
  std::vector<std::size_t> root(n), cluster(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (forest.is_background(i)) {
      ++s.background;
      root[i] = i;
    } else {
      const std::size_t parent = forest.parent[i];
      if (parent >= n || !(catalog.time(parent) < catalog.time(i)))
        throw ValidationError("event " + std::to_string(i + 1) + " has a parent that is not earlier");
      ++s.triggered;
      s.generation[i] = s.generation[parent] + 1;
      root[i] = root[parent];
      s.max_generation = std::max(s.max_generation, s.generation[i]);
    }
    s.largest_cluster = std::max(s.largest_cluster, ++cluster[root[i]]);
  }
  return s;
}

ForecastGrid daily_forecast(const IntensityModel& model, const EventCatalog& catalog,
                            const DailySpec& spec, unsigned threads) {
  return daily_grid(catalog, spec, [&](const std::vector<std::size_t>& rows, const std::vector<Bin>& bins) {
    return predictive_rates(model, select_rows(catalog.events(), rows), bins, threads);
  });
}

double etas_cell_integral(double x0, double x1, double y0, double y1, double d, double rho,
                          double tolerance) {
  if (!(d > 0.0) || !(rho > 0.0)) throw ValidationError("ETAS kernel needs d > 0 and rho > 0");
  if (!(tolerance > 0.0)) throw ValidationError("quadrature tolerance must be positive");
  const double width = std::max(x1 - x0, 1e-300);
  auto inner = [&](double x) {
    auto f = [&](double y) { return std::pow(x * x + y * y + d, -1.0 - rho); };
    return integrate_peaked(f, y0, y1, tolerance / width);
  };
  return integrate_peaked(inner, x0, x1, tolerance);
}

std::vector<double> etas_rates(const EtasForecast& model, const Matrix& history,
                               std::span<const double> magnitudes, const std::vector<Bin>& bins) {
  check_bins(bins);
  const auto& e = model.params;
  if (!(e.omega > 0.0) || !(e.rho > 0.0) || !(e.c > 0.0) || !(e.d > 0.0))
    throw ValidationError("ETAS parameters need c, d, omega, rho > 0");
  if (!(model.background_density >= 0.0)) throw ValidationError("background density must be >= 0");
  for (const auto& b : bins)
    if (b.lower.size() != 2) throw ValidationError("ETAS forecasting needs two spatial covariates");
  if (history.rows() > 0 && magnitudes.size() != history.rows())
    throw ValidationError("ETAS forecasting needs a magnitude for every history event");
  check_history(history, bins, 3);
  const double abs_tol = model.tolerance * std::numbers::pi * std::pow(e.d, -e.rho) / e.rho;

  std::vector<double> rates(bins.size());
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const Bin& bin = bins[b];
    double rate = model.background_density * (bin.t_end - bin.t_begin) *
                  (bin.upper[0] - bin.lower[0]) * (bin.upper[1] - bin.lower[1]);
    for (std::size_t h = 0; h < history.rows(); ++h) {
      const double lo = bin.t_begin - history(h, 0), hi = bin.t_end - history(h, 0);
      const double time = (std::pow(lo + e.c, -e.omega) - std::pow(hi + e.c, -e.omega)) / e.omega;
      if (!(time > 0.0)) continue;
      const double space = etas_cell_integral(bin.lower[0] - history(h, 1), bin.upper[0] - history(h, 1),
                                              bin.lower[1] - history(h, 2), bin.upper[1] - history(h, 2),
                                              e.d, e.rho, abs_tol);
      rate += e.K0 * std::exp(e.a * (magnitudes[h] - e.M0)) * time * space;
    }
    rates[b] = rate;
  }
  return rates;
}

ForecastGrid etas_daily_forecast(const EtasForecast& model, const EventCatalog& catalog,
                                 const DailySpec& spec) {
  if (!catalog.has_magnitudes()) throw ValidationError("ETAS forecasting needs magnitudes");
  return daily_grid(catalog, spec, [&](const std::vector<std::size_t>& rows, const std::vector<Bin>& bins) {
    std::vector<double> mags(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) mags[r] = catalog.magnitudes()[rows[r]];
    return etas_rates(model, select_rows(catalog.events(), rows), mags, bins);
  });
}

}  // namespace copp::eval
