#include "copp/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <string>
#include <string_view>

#include "copp/csv.hpp"
#include "copp/error.hpp"

namespace copp::io {

namespace {

constexpr std::string_view kModelFormat = "copp-intensity-model";
constexpr int kModelVersion = 1;

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
  if (!j.is_object()) throw ValidationError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ValidationError("unknown key '" + key + "' in " + std::string(what));
}

template <class T>
T get(const Json& j, const char* key, std::string_view what) {
  if (!j.contains(key)) throw ValidationError(std::string(what) + " is missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("'" + std::string(key) + "' in " + std::string(what) + " has the wrong type");
  }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback, std::string_view what) {
  return j.contains(key) ? get<T>(j, key, what) : fallback;
}

std::optional<std::size_t> rank_from_json(const Json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  const Json& v = j.at(key);
  if (v.is_string() && v.get<std::string>() == "auto") return std::nullopt;
  if (!v.is_number_unsigned()) throw ValidationError(std::string(key) + " must be \"auto\" or a positive integer");
  return v.get<std::size_t>();
}

Json rank_to_json(const std::optional<std::size_t>& k) { return k ? Json(*k) : Json("auto"); }

std::string mode_name(BackgroundMode m) {
  return m == BackgroundMode::kSpaceTime ? "space-time" : "time-independent";
}

BackgroundMode parse_mode(const std::string& s) {
  if (s == "space-time") return BackgroundMode::kSpaceTime;
  if (s == "time-independent") return BackgroundMode::kTimeIndependent;
  throw ValidationError("background mode must be space-time or time-independent, got '" + s + "'");
}

std::string reading_name(kde::BandwidthReading r) {
  return r == kde::BandwidthReading::kStandardDeviation ? "standard-deviation" : "variance";
}

kde::BandwidthReading parse_reading(const std::string& s) {
  if (s == "standard-deviation") return kde::BandwidthReading::kStandardDeviation;
  if (s == "variance") return kde::BandwidthReading::kVariance;
  throw ValidationError("bandwidth reading must be standard-deviation or variance, got '" + s + "'");
}

Json window_to_json(const Window& w) {
  return Json{{"t_begin", w.t_begin}, {"t_end", w.t_end}, {"lower", w.lower}, {"upper", w.upper}};
}

Window window_from_json(const Json& j) {
  check_keys(j, {"t_begin", "t_end", "lower", "upper"}, "window");
  return Window{get_or<double>(j, "t_begin", 0.0, "window"), get<double>(j, "t_end", "window"),
                get<std::vector<double>>(j, "lower", "window"),
                get<std::vector<double>>(j, "upper", "window")};
}

Json bin_to_json(const eval::Bin& b) {
  return Json{{"t_begin", b.t_begin}, {"t_end", b.t_end}, {"lower", b.lower}, {"upper", b.upper}};
}

Json mixture_to_json(const kde::GaussianMixture& m) {
  Json centers = Json::array(), weights = Json::array(), factors = Json::array();
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (!(m.weights[r] > 0.0)) continue;
    const auto row = m.centers.row(r);
    centers.push_back(std::vector<double>(row.begin(), row.end()));
    weights.push_back(m.weights[r]);
    factors.push_back(m.factors[r]);
  }
  return Json{{"dimension", m.dimension()}, {"scales", m.scales}, {"centers", std::move(centers)},
              {"weights", std::move(weights)}, {"factors", std::move(factors)}};
}

kde::GaussianMixture mixture_from_json(const Json& j, kde::BandwidthReading reading,
                                       std::string_view what) {
  const auto dim = get<std::size_t>(j, "dimension", what);
  const auto centers = get<std::vector<std::vector<double>>>(j, "centers", what);
  kde::GaussianMixture m;
  m.centers = Matrix(centers.size(), dim);
  for (std::size_t r = 0; r < centers.size(); ++r) {
    if (centers[r].size() != dim) throw ValidationError(std::string(what) + " centre has the wrong dimension");
    std::copy(centers[r].begin(), centers[r].end(), m.centers.row(r).begin());
  }
  m.weights = get<std::vector<double>>(j, "weights", what);
  m.factors = get<std::vector<double>>(j, "factors", what);
  m.scales = get<std::vector<double>>(j, "scales", what);
  m.reading = reading;
  m.validate();
  return m;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path.string() + "'");
  return out;
}

std::string fmt(double v) { return csv::format_double(v); }

}  // namespace

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot read '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestionError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& value) {
  auto out = open_out(path);
  out << value.dump(2) << '\n';
}

EmConfig em_config_from_json(const Json& j, EmConfig c) {
  constexpr std::string_view what = "decluster config";
  check_keys(j, {"L", "K1", "K2", "delta_neighbors", "tv_tolerance", "max_iterations",
                 "forest_samples", "seed", "reuse_forest_draws", "threads", "background_mode", "bandwidth_reading",
                 "trigger_normalization", "min_bandwidth", "exact_memory_limit_bytes"},
             what);
  c.L = get_or<std::size_t>(j, "L", c.L, what);
  if (j.contains("K1")) c.K1 = rank_from_json(j, "K1");
  if (j.contains("K2")) c.K2 = rank_from_json(j, "K2");
  c.delta_neighbors = get_or<std::size_t>(j, "delta_neighbors", c.delta_neighbors, what);
  c.tv_tolerance = get_or<double>(j, "tv_tolerance", c.tv_tolerance, what);
  c.max_iterations = get_or<std::size_t>(j, "max_iterations", c.max_iterations, what);
  c.forest_samples = get_or<std::size_t>(j, "forest_samples", c.forest_samples, what);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed, what);
  c.reuse_forest_draws = get_or<bool>(j, "reuse_forest_draws", c.reuse_forest_draws, what);
  c.threads = get_or<unsigned>(j, "threads", c.threads, what);
  if (j.contains("background_mode")) {
    const auto s = get<std::string>(j, "background_mode", what);
    c.background_mode = s == "catalog" ? std::nullopt : std::optional(parse_mode(s));
  }
  if (j.contains("bandwidth_reading"))
    c.bandwidth_reading = parse_reading(get<std::string>(j, "bandwidth_reading", what));
  if (j.contains("trigger_normalization")) {
    const auto s = get<std::string>(j, "trigger_normalization", what);
    if (s == "per-parent") c.trigger_normalization = TriggerNormalization::kPerParent;
    else if (s == "none") c.trigger_normalization = TriggerNormalization::kNone;
    else throw ValidationError("trigger_normalization must be per-parent or none");
  }
  c.min_bandwidth = get_or<double>(j, "min_bandwidth", c.min_bandwidth, what);
  c.exact_memory_limit_bytes =
      get_or<std::size_t>(j, "exact_memory_limit_bytes", c.exact_memory_limit_bytes, what);
  c.validate();
  return c;
}

Json to_json(const EmConfig& c) {
  return Json{{"L", c.L},
              {"K1", rank_to_json(c.K1)},
              {"K2", rank_to_json(c.K2)},
              {"delta_neighbors", c.delta_neighbors},
              {"tv_tolerance", c.tv_tolerance},
              {"max_iterations", c.max_iterations},
              {"forest_samples", c.forest_samples},
              {"seed", c.seed},
              {"reuse_forest_draws", c.reuse_forest_draws},
              {"threads", c.threads},
              {"background_mode", c.background_mode ? mode_name(*c.background_mode) : "catalog"},
              {"bandwidth_reading", reading_name(c.bandwidth_reading)},
              {"trigger_normalization",
               c.trigger_normalization == TriggerNormalization::kPerParent ? "per-parent" : "none"},
              {"min_bandwidth", c.min_bandwidth},
              {"exact_memory_limit_bytes", c.exact_memory_limit_bytes}};
}

Json to_json(const EmDiagnostics& d) {
  return Json{{"iterations", d.iterations},
              {"converged", d.converged},
              {"wall_seconds", d.wall_seconds},
              {"L", d.L},
              {"delta_L", d.delta_L},
              {"K1", d.K1},
              {"K2", d.K2},
              {"tv", d.tv},
              {"background_mass", d.background_mass},
              {"background_fallbacks", d.background_fallbacks},
              {"delta_fallbacks", d.delta_fallbacks},
              {"trigger_scale_fallbacks", d.trigger_scale_fallbacks}};
}

sim::SimSpec sim_spec_from_json(const Json& j) {
  constexpr std::string_view what = "simulation spec";
  check_keys(j, {"seed", "window", "scales", "background", "trigger", "max_expected_events"}, what);
  sim::SimSpec s;
  s.seed = get_or<std::uint64_t>(j, "seed", s.seed, what);
  s.window = window_from_json(get<Json>(j, "window", what));
  s.scales = get_or<std::vector<double>>(j, "scales", {}, what);
  if (s.scales.empty()) s.scales.assign(s.window.lower.size() + 1, 1.0);
  s.max_expected_events = get_or<double>(j, "max_expected_events", s.max_expected_events, what);

  const Json bg = get<Json>(j, "background", what);
  const auto bg_type = get<std::string>(bg, "type", "background");
  if (bg_type == "homogeneous") {
    check_keys(bg, {"type", "rate"}, "background");
    s.background = sim::HomogeneousBackground{get<double>(bg, "rate", "background")};
  } else if (bg_type == "gaussian-mixture") {
    check_keys(bg, {"type", "rate", "components"}, "background");
    sim::GaussianMixtureBackground m{get<double>(bg, "rate", "background"), {}};
    for (const auto& c : get<Json>(bg, "components", "background")) {
      check_keys(c, {"weight", "mean", "sd"}, "mixture component");
      m.components.push_back({get_or<double>(c, "weight", 1.0, "mixture component"),
                              get<std::vector<double>>(c, "mean", "mixture component"),
                              get<std::vector<double>>(c, "sd", "mixture component")});
    }
    s.background = std::move(m);
  } else {
    throw ValidationError("background type must be homogeneous or gaussian-mixture");
  }

  const Json tr = get<Json>(j, "trigger", what);
  const auto tr_type = get<std::string>(tr, "type", "trigger");
  if (tr_type == "gaussian") {
    check_keys(tr, {"type", "R", "decay_rate", "spatial_sd"}, "trigger");
    s.trigger = sim::GaussianTrigger{get<double>(tr, "R", "trigger"),
                                     get<double>(tr, "decay_rate", "trigger"),
                                     get<std::vector<double>>(tr, "spatial_sd", "trigger")};
  } else if (tr_type == "etas") {
    check_keys(tr, {"type", "K0", "a", "c", "omega", "d", "rho", "M0", "magnitudes"}, "trigger");
    sim::EtasTrigger e;
    e.K0 = get<double>(tr, "K0", "trigger");
    e.a = get_or<double>(tr, "a", e.a, "trigger");
    e.c = get_or<double>(tr, "c", e.c, "trigger");
    e.omega = get_or<double>(tr, "omega", e.omega, "trigger");
    e.d = get_or<double>(tr, "d", e.d, "trigger");
    e.rho = get_or<double>(tr, "rho", e.rho, "trigger");
    e.M0 = get_or<double>(tr, "M0", e.M0, "trigger");
    if (tr.contains("magnitudes")) {
      const Json& m = tr.at("magnitudes");
      check_keys(m, {"b_value", "max_magnitude"}, "magnitude law");
      e.magnitudes.b_value = get_or<double>(m, "b_value", e.magnitudes.b_value, "magnitude law");
      if (m.contains("max_magnitude") && m.at("max_magnitude").is_null())
        e.magnitudes.max_magnitude = std::numeric_limits<double>::infinity();
      else
        e.magnitudes.max_magnitude =
            get_or<double>(m, "max_magnitude", e.magnitudes.max_magnitude, "magnitude law");
    }
    s.trigger = e;
  } else {
    throw ValidationError("trigger type must be gaussian or etas");
  }
  return s;
}

Json to_json(const sim::SimSpec& s) {
  Json j{{"seed", s.seed}, {"window", window_to_json(s.window)}, {"scales", s.scales},
         {"max_expected_events", s.max_expected_events}};
  if (const auto* h = std::get_if<sim::HomogeneousBackground>(&s.background)) {
    j["background"] = Json{{"type", "homogeneous"}, {"rate", h->rate}};
  } else {
    const auto& m = std::get<sim::GaussianMixtureBackground>(s.background);
    Json comps = Json::array();
    for (const auto& c : m.components)
      comps.push_back(Json{{"weight", c.weight}, {"mean", c.mean}, {"sd", c.sd}});
    j["background"] = Json{{"type", "gaussian-mixture"}, {"rate", m.rate}, {"components", comps}};
  }
  if (const auto* g = std::get_if<sim::GaussianTrigger>(&s.trigger)) {
    j["trigger"] = Json{{"type", "gaussian"}, {"R", g->R}, {"decay_rate", g->decay_rate},
                        {"spatial_sd", g->spatial_sd}};
  } else {
    const auto& e = std::get<sim::EtasTrigger>(s.trigger);
    Json mags{{"b_value", e.magnitudes.b_value}};
    mags["max_magnitude"] = std::isfinite(e.magnitudes.max_magnitude) ? Json(e.magnitudes.max_magnitude)
                                                                       : Json(nullptr);
    j["trigger"] = Json{{"type", "etas"}, {"K0", e.K0}, {"a", e.a}, {"c", e.c}, {"omega", e.omega},
                        {"d", e.d}, {"rho", e.rho}, {"M0", e.M0}, {"magnitudes", mags}};
  }
  return j;
}

eval::EtasForecast etas_forecast_from_json(const Json& j) {
  constexpr std::string_view what = "ETAS forecast";
  check_keys(j, {"K0", "a", "c", "omega", "d", "rho", "M0", "background_density", "tolerance"}, what);
  eval::EtasForecast f;
  f.params.K0 = get<double>(j, "K0", what);
  f.params.a = get_or<double>(j, "a", f.params.a, what);
  f.params.c = get_or<double>(j, "c", f.params.c, what);
  f.params.omega = get_or<double>(j, "omega", f.params.omega, what);
  f.params.d = get_or<double>(j, "d", f.params.d, what);
  f.params.rho = get_or<double>(j, "rho", f.params.rho, what);
  f.params.M0 = get_or<double>(j, "M0", f.params.M0, what);
  f.background_density = get<double>(j, "background_density", what);
  f.tolerance = get_or<double>(j, "tolerance", f.tolerance, what);
  return f;
}

Json to_json(const eval::EtasForecast& f) {
  const auto& e = f.params;
  return Json{{"K0", e.K0}, {"a", e.a}, {"c", e.c}, {"omega", e.omega}, {"d", e.d}, {"rho", e.rho},
              {"M0", e.M0}, {"background_density", f.background_density}, {"tolerance", f.tolerance}};
}

GridSpec grid_spec_from_json(const Json& j) {
  constexpr std::string_view what = "grid spec";
  const auto type = get<std::string>(j, "type", what);
  if (type == "daily") {
    check_keys(j, {"type", "first_day", "days", "lookback_days", "edges"}, what);
    eval::DailySpec d;
    d.first_day = get<double>(j, "first_day", what);
    d.days = get<std::size_t>(j, "days", what);
    d.lookback_days = get_or<double>(j, "lookback_days", d.lookback_days, what);
    d.edges = get<std::vector<std::vector<double>>>(j, "edges", what);
    return d;
  }
  if (type == "bins") {
    check_keys(j, {"type", "bins", "lookback_days"}, what);
    ExplicitBins e{{}, std::numeric_limits<double>::infinity()};
    if (j.contains("lookback_days") && !j.at("lookback_days").is_null())
      e.lookback_days = get<double>(j, "lookback_days", what);
    for (const auto& b : get<Json>(j, "bins", what)) {
      check_keys(b, {"t_begin", "t_end", "lower", "upper"}, "bin");
      e.bins.push_back({get<double>(b, "t_begin", "bin"), get<double>(b, "t_end", "bin"),
                        get_or<std::vector<double>>(b, "lower", {}, "bin"),
                        get_or<std::vector<double>>(b, "upper", {}, "bin")});
    }
    return e;
  }
  throw ValidationError("grid type must be daily or bins");
}

Json to_json(const GridSpec& spec) {
  if (const auto* d = std::get_if<eval::DailySpec>(&spec))
    return Json{{"type", "daily"}, {"first_day", d->first_day}, {"days", d->days},
                {"lookback_days", d->lookback_days}, {"edges", d->edges}};
  const auto& e = std::get<ExplicitBins>(spec);
  Json bins = Json::array();
  for (const auto& b : e.bins) bins.push_back(bin_to_json(b));
  Json j{{"type", "bins"}, {"bins", bins}};
  j["lookback_days"] = std::isfinite(e.lookback_days) ? Json(e.lookback_days) : Json(nullptr);
  return j;
}

Json model_to_json(const IntensityModel& m) {
  Json background = mixture_to_json(m.mu);
  background["columns"] = m.background_columns;
  background["divisor"] = m.mu_divisor;
  return Json{{"format", kModelFormat},
              {"version", kModelVersion},
              {"background_mode", mode_name(m.background_mode)},
              {"bandwidth_reading", reading_name(m.mu.reading)},
              {"window_length", m.window_length},
              {"background", std::move(background)},
              {"trigger", mixture_to_json(m.g)}};
}

IntensityModel model_from_json(const Json& j) {
  constexpr std::string_view what = "model";
  if (!j.is_object() || !j.contains("format") || j.at("format") != kModelFormat)
    throw ValidationError("not a model file (missing format tag)");
  if (get<int>(j, "version", what) != kModelVersion)
    throw ValidationError("unsupported model version");
  IntensityModel m;
  m.background_mode = parse_mode(get<std::string>(j, "background_mode", what));
  const auto reading = parse_reading(get<std::string>(j, "bandwidth_reading", what));
  m.window_length = get<double>(j, "window_length", what);
  const Json bg = get<Json>(j, "background", what);
  m.background_columns = get<std::vector<std::size_t>>(bg, "columns", "background");
  m.mu_divisor = get<double>(bg, "divisor", "background");
  if (!(m.mu_divisor > 0.0)) throw ValidationError("background divisor must be positive");
  m.mu = mixture_from_json(bg, reading, "background");
  if (m.mu.dimension() != m.background_columns.size())
    throw ValidationError("background columns do not match the mixture dimension");
  m.g = mixture_from_json(get<Json>(j, "trigger", what), reading, "trigger");
  return m;
}

void save_model(const std::filesystem::path& path, const IntensityModel& model,
                const EmConfig& config, const EmDiagnostics& diagnostics) {
  Json j = model_to_json(model);
  j["config"] = to_json(config);
  j["diagnostics"] = to_json(diagnostics);
  write_json(path, j);
}

IntensityModel load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

void save_branching(const std::filesystem::path& path, const BranchingDistribution& P) {
  auto out = open_out(path);
  out << "event,parent,probability\n";
  for (std::size_t i = 0; i < P.size(); ++i)
    for (std::size_t l = 0; l < P.L(); ++l) {
      const double v = P.P(i, l);
      if (v == 0.0) continue;
      out << i + 1 << ',' << (l == 0 ? 0 : std::size_t(P.parent(i, l)) + 1) << ',' << fmt(v) << '\n';
    }
}

void save_branching(const std::filesystem::path& path, const DenseBranching& P) {
  auto out = open_out(path);
  out << "event,parent,probability\n";
  for (std::size_t i = 0; i < P.background.size(); ++i) {
    if (P.background[i] != 0.0) out << i + 1 << ",0," << fmt(P.background[i]) << '\n';
    for (std::size_t j = 0; j < P.trigger.cols(); ++j)
      if (P.trigger(i, j) != 0.0) out << i + 1 << ',' << j + 1 << ',' << fmt(P.trigger(i, j)) << '\n';
  }
}

namespace {

template <class RowFn>
void read_csv_rows(const std::filesystem::path& path, std::size_t columns, RowFn&& fn) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot read '" + path.string() + "'");
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (row == 1 || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = csv::split(line);
    if (fields.size() != columns)
      throw IngestionError(path.string() + " row " + std::to_string(row) + ": expected " +
                           std::to_string(columns) + " fields");
    std::vector<double> values;
    for (auto f : fields) {
      const auto v = csv::parse_double(f);
      if (!v) throw IngestionError(path.string() + " row " + std::to_string(row) + ": '" +
                                   std::string(f) + "' is not a number");
      values.push_back(*v);
    }
    fn(row, values);
  }
}

std::size_t to_index(double v, std::size_t limit, const std::filesystem::path& path, std::size_t row) {
  if (!(v >= 0.0) || v != std::floor(v) || v > double(limit))
    throw IngestionError(path.string() + " row " + std::to_string(row) + ": index out of range");
  return static_cast<std::size_t>(v);
}

}  // namespace

DenseBranching load_branching(const std::filesystem::path& path, std::size_t n) {
  DenseBranching P{std::vector<double>(n, 0.0), Matrix(n, n)};
  read_csv_rows(path, 3, [&](std::size_t row, const std::vector<double>& v) {
    const std::size_t i = to_index(v[0], n, path, row);
    const std::size_t j = to_index(v[1], n, path, row);
    if (i == 0) throw IngestionError(path.string() + " row " + std::to_string(row) + ": event 0");
    if (j == 0) P.background[i - 1] = v[2]; else P.trigger(i - 1, j - 1) = v[2];
  });
  return P;
}

void save_forest(const std::filesystem::path& path, const Forest& forest) {
  auto out = open_out(path);
  out << "event,parent\n";
  for (std::size_t i = 0; i < forest.size(); ++i)
    out << i + 1 << ',' << (forest.is_background(i) ? 0 : std::size_t(forest.parent[i]) + 1) << '\n';
}

Forest load_forest(const std::filesystem::path& path, std::size_t n) {
  Forest f{std::vector<Index>(n, kNoIndex)};
  std::vector<bool> seen(n, false);
  read_csv_rows(path, 2, [&](std::size_t row, const std::vector<double>& v) {
    const std::size_t i = to_index(v[0], n, path, row);
    const std::size_t p = to_index(v[1], n, path, row);
    if (i == 0 || seen[i - 1])
      throw IngestionError(path.string() + " row " + std::to_string(row) + ": bad or repeated event");
    seen[i - 1] = true;
    f.parent[i - 1] = p == 0 ? kNoIndex : static_cast<Index>(p - 1);
  });
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw IngestionError(path.string() + ": not every event has a row");
  return f;
}

void save_forest_edges(const std::filesystem::path& path, const EventCatalog& catalog,
                       const Forest& forest) {
  if (forest.size() != catalog.size()) throw ValidationError("forest size does not match the catalog");
  auto out = open_out(path);
  const auto& names = catalog.column_names();
  const std::size_t p = catalog.dimension();
  out << "event,parent";
  for (std::size_t k = 0; k < p; ++k) out << ',' << names[k];
  for (std::size_t k = 0; k < p; ++k) out << ",parent_" << names[k];
  if (catalog.has_magnitudes()) out << ',' << names[p] << ",parent_" << names[p];
  out << '\n';
  for (std::size_t i = 0; i < forest.size(); ++i) {
    if (forest.is_background(i)) continue;
    const std::size_t j = forest.parent[i];
    out << i + 1 << ',' << j + 1;
    for (double v : catalog.point(i)) out << ',' << fmt(v);
    for (double v : catalog.point(j)) out << ',' << fmt(v);
    if (catalog.has_magnitudes())
      out << ',' << fmt(catalog.magnitudes()[i]) << ',' << fmt(catalog.magnitudes()[j]);
    out << '\n';
  }
}

void save_neighbors(const std::filesystem::path& path, const NeighborIndex& index) {
  auto out = open_out(path);
  out << "event,rank,neighbor,distance\n";
  for (std::size_t i = 0; i < index.rows(); ++i)
    for (std::size_t j = 0; j < index.L(); ++j)
      out << i + 1 << ',' << j + 1 << ',' << std::size_t(index.alpha(i, j)) + 1 << ','
          << fmt(index.dist(i, j)) << '\n';
}

void save_curve(const std::filesystem::path& path, const eval::Curve& curve) {
  auto out = open_out(path);
  out << "x,value\n";
  for (std::size_t k = 0; k < curve.x.size(); ++k) out << fmt(curve.x[k]) << ',' << fmt(curve.y[k]) << '\n';
}

}  // namespace copp::io
