#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "copp/catalog.hpp"
#include "copp/csv.hpp"
#include "copp/decluster.hpp"
#include "copp/error.hpp"
#include "copp/evaluate.hpp"
#include "copp/io.hpp"
#include "copp/neighbors.hpp"
#include "copp/simulate.hpp"

namespace copp::cli {

namespace {

namespace fs = std::filesystem;
using io::Json;

class NotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- catalog

struct CatalogOptions {
  std::string input;
  std::string time_column = "time";
  std::vector<std::string> covariates;  // empty: every other header column
  std::string magnitude_column;         // empty: none
  std::vector<double> scales;
  double epoch_offset = 0.0;
  bool time_independent = false;
  std::vector<double> window;  // t_begin, t_end, then lower/upper per covariate
};

// Flags registered on a subcommand; applied on top of the config file.
struct CatalogFlags {
  CatalogOptions v;
  CLI::Option *input, *time_column, *covariates, *magnitude, *scales, *epoch, *ti, *window;

  void add(CLI::App* app) {
    input = app->add_option("--input", v.input, "Event catalog CSV");
    time_column = app->add_option("--time-column", v.time_column, "Name of the time column");
    covariates = app->add_option("--covariates", v.covariates,
                                 "Covariate columns (default: every other column)")
                     ->delimiter(',');
    magnitude = app->add_option("--magnitude-column", v.magnitude_column,
                                "Auxiliary magnitude column (not a distance coordinate)");
    scales = app->add_option("--scales", v.scales,
                             "Characteristic lengths: time first, then one per covariate")
                 ->delimiter(',');
    epoch = app->add_option("--epoch-offset", v.epoch_offset, "Subtracted from every time");
    ti = app->add_flag("--time-independent", v.time_independent,
                       "Background constant in time (spatial KDE divided by T)");
    window = app->add_option("--window", v.window,
                             "t_begin,t_end,lower1,upper1,... (default: data hull)")
                 ->delimiter(',');
  }

  CatalogOptions merge(const Json* config) const {
    CatalogOptions out;
    if (config) {
      static const std::vector<std::string> keys{"input", "time_column", "covariates",
                                                 "magnitude_column", "scales", "epoch_offset",
                                                 "time_independent", "window"};
      for (const auto& [k, val] : config->items())
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
          throw ValidationError("unknown key '" + k + "' in catalog config");
      try {
        out.input = config->value("input", out.input);
        out.time_column = config->value("time_column", out.time_column);
        out.covariates = config->value("covariates", out.covariates);
        out.magnitude_column = config->value("magnitude_column", out.magnitude_column);
        out.scales = config->value("scales", out.scales);
        out.epoch_offset = config->value("epoch_offset", out.epoch_offset);
        out.time_independent = config->value("time_independent", out.time_independent);
        out.window = config->value("window", out.window);
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("catalog config: ") + e.what());
      }
    }
    if (input->count()) out.input = v.input;
    if (time_column->count()) out.time_column = v.time_column;
    if (covariates->count()) out.covariates = v.covariates;
    if (magnitude->count()) out.magnitude_column = v.magnitude_column;
    if (scales->count()) out.scales = v.scales;
    if (epoch->count()) out.epoch_offset = v.epoch_offset;
    if (ti->count()) out.time_independent = v.time_independent;
    if (window->count()) out.window = v.window;
    return out;
  }
};

Json to_json(const CatalogOptions& c) {
  Json j{{"input", c.input},   {"time_column", c.time_column}, {"covariates", c.covariates},
         {"scales", c.scales}, {"epoch_offset", c.epoch_offset}, {"time_independent", c.time_independent}};
  j["magnitude_column"] = c.magnitude_column.empty() ? Json(nullptr) : Json(c.magnitude_column);
  j["window"] = c.window.empty() ? Json(nullptr) : Json(c.window);
  return j;
}

std::vector<std::string> header_columns(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot read catalog '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw IngestionError("catalog '" + path + "' is empty");
  std::vector<std::string> names;
  for (auto f : csv::split(line)) names.emplace_back(f);
  return names;
}

EventCatalog open_catalog(CatalogOptions& c) {
  if (c.input.empty()) throw ValidationError("no input catalog given (--input)");
  if (c.covariates.empty())
    for (const auto& name : header_columns(c.input))
      if (name != c.time_column && name != c.magnitude_column) c.covariates.push_back(name);
  if (c.scales.empty())
    throw ValidationError("characteristic scales are required (--scales), one for time and one per covariate");
  CatalogSchema schema;
  schema.time_column = c.time_column;
  schema.covariate_columns = c.covariates;
  if (!c.magnitude_column.empty()) schema.magnitude_column = c.magnitude_column;
  schema.epoch_offset = c.epoch_offset;
  std::optional<Window> window;
  if (!c.window.empty()) {
    const std::size_t q = c.covariates.size();
    if (c.window.size() != 2 + 2 * q)
      throw ValidationError("--window needs t_begin,t_end and a lower,upper pair per covariate");
    Window w{c.window[0], c.window[1], {}, {}};
    for (std::size_t k = 0; k < q; ++k) {
      w.lower.push_back(c.window[2 + 2 * k]);
      w.upper.push_back(c.window[3 + 2 * k]);
    }
    window = std::move(w);
  }
  return load_catalog(c.input, schema, c.scales, window, c.time_independent);
}

std::optional<Json> read_config(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return io::read_json(path);
}

const Json* section(const std::optional<Json>& config, const char* key) {
  if (!config || !config->contains(key)) return nullptr;
  return &config->at(key);
}

void check_sections(const std::optional<Json>& config, std::initializer_list<std::string_view> allowed) {
  if (!config) return;
  if (!config->is_object()) throw ValidationError("config file must hold a JSON object");
  for (const auto& [k, v] : config->items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ValidationError("unknown section '" + k + "' in config file");
}

void print_json(const Json& j) { std::cout << j.dump(2) << '\n'; }

// ---------------------------------------------------------------- decluster

struct EmFlags {
  EmConfig v;
  std::size_t K1 = 0, K2 = 0;
  std::string background_mode, reading;
  CLI::Option *L, *K1o, *K2o, *dn, *tv, *iters, *forests, *seed, *threads, *mode, *read;

  void add(CLI::App* app) {
    L = app->add_option("--L", v.L, "Neighbours per event (truncation)");
    K1o = app->add_option("--K1", K1, "Background bandwidth rank (default: optimal rule)");
    K2o = app->add_option("--K2", K2, "Trigger bandwidth rank (default: optimal rule)");
    dn = app->add_option("--delta-neighbors", v.delta_neighbors,
                         "Neighbours per Delta-event in the trigger sum (0: same as L)");
    tv = app->add_option("--tv-tolerance", v.tv_tolerance, "Stop when mean |change in P| falls below");
    iters = app->add_option("--max-iterations", v.max_iterations, "Iteration cap");
    forests = app->add_option("--forest-samples", v.forest_samples, "Forests drawn per M-step");
    seed = app->add_option("--seed", v.seed, "Random seed");
    threads = app->add_option("--threads", v.threads, "Worker threads");
    mode = app->add_option("--background-mode", background_mode,
                           "space-time, time-independent, or catalog");
    read = app->add_option("--bandwidth-reading", reading, "standard-deviation or variance");
  }

  EmConfig merge(const Json* config) const {
    EmConfig c = config ? io::em_config_from_json(*config) : EmConfig{};
    if (L->count()) c.L = v.L;
    if (K1o->count()) c.K1 = K1;
    if (K2o->count()) c.K2 = K2;
    if (dn->count()) c.delta_neighbors = v.delta_neighbors;
    if (tv->count()) c.tv_tolerance = v.tv_tolerance;
    if (iters->count()) c.max_iterations = v.max_iterations;
    if (forests->count()) c.forest_samples = v.forest_samples;
    if (seed->count()) c.seed = v.seed;
    if (threads->count()) c.threads = v.threads;
    // Reuse the JSON parser for the enumerations.
    Json extra = Json::object();
    if (mode->count()) extra["background_mode"] = background_mode;
    if (read->count()) extra["bandwidth_reading"] = reading;
    if (!extra.empty()) c = io::em_config_from_json(extra, c);
    c.validate();
    return c;
  }
};

struct DeclusterCommand {
  std::string config_path, out_dir, forest_path, edges_path;
  bool exact = false;
  CatalogFlags catalog;
  EmFlags em;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("decluster", "Estimate background and trigger intensities");
    sub->add_option("--config", config_path, "JSON file with \"catalog\" and \"em\" sections");
    sub->add_option("--out-dir", out_dir, "Directory for model.json, branching.csv, diagnostics.json")
        ->required();
    sub->add_option("--forest", forest_path, "Also write one forest sampled from the final P");
    sub->add_option("--forest-edges", edges_path, "Also write that forest's edges with coordinates");
    sub->add_flag("--exact", exact, "Use the dense O(N^2) route over every candidate parent");
    catalog.add(sub);
    em.add(sub);
    sub->callback([this] { run(); });
  }

  void run() {
    const auto config = read_config(config_path);
    check_sections(config, {"catalog", "em"});
    CatalogOptions copts = catalog.merge(section(config, "catalog"));
    const EmConfig cfg = em.merge(section(config, "em"));
    const EventCatalog events = open_catalog(copts);
    fs::create_directories(out_dir);

    IntensityModel model;
    EmDiagnostics diag;
    double R = 0.0;
    std::optional<Forest> forest;
    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    if (exact) {
      ExactEmResult r = run_em_exact(events, cfg);
      io::save_branching(fs::path(out_dir) / "branching.csv", r.P);
      R = eval::estimated_reproductive_ratio(r.P);
      model = std::move(r.model);
      diag = std::move(r.diagnostics);
      if (!forest_path.empty() || !edges_path.empty()) forest = sample_forest(r.P, rng);
    } else {
      EmResult r = run_em(events, cfg);
      io::save_branching(fs::path(out_dir) / "branching.csv", r.P);
      R = eval::estimated_reproductive_ratio(r.P);
      if (!forest_path.empty() || !edges_path.empty()) forest = sample_forest(r.P, rng);
      model = std::move(r.model);
      diag = std::move(r.diagnostics);
    }

    Json model_json = io::model_to_json(model);
    model_json["catalog"] = to_json(copts);
    model_json["config"] = io::to_json(cfg);
    model_json["diagnostics"] = io::to_json(diag);
    io::write_json(fs::path(out_dir) / "model.json", model_json);
    io::write_json(fs::path(out_dir) / "diagnostics.json",
                   Json{{"command", "decluster"},
                        {"method", exact ? "exact" : "accelerated"},
                        {"events", events.size()},
                        {"estimated_reproductive_ratio", R},
                        {"catalog", to_json(copts)},
                        {"config", io::to_json(cfg)},
                        {"diagnostics", io::to_json(diag)}});
    if (forest && !forest_path.empty()) io::save_forest(forest_path, *forest);
    if (forest && !edges_path.empty()) io::save_forest_edges(edges_path, events, *forest);
    if (!diag.converged)
      throw NotConverged("no convergence after " + std::to_string(diag.iterations) +
                         " iterations (last change " +
                         (diag.tv.empty() ? std::string("n/a") : std::to_string(diag.tv.back())) + ")");
  }
};

// ---------------------------------------------------------------- simulate

struct SimulateCommand {
  std::string spec_path, events_path, parents_path;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("simulate", "Draw a labelled catalog from a branching process");
    sub->add_option("--spec", spec_path, "Simulation spec JSON")->required();
    sub->add_option("--out-events", events_path, "Events CSV")->required();
    sub->add_option("--out-parents", parents_path, "Ground-truth parents CSV (event,parent)")->required();
    seed_opt = sub->add_option("--seed", seed, "Override the spec's seed");
    sub->callback([this] { run(); });
  }

  void run() {
    sim::SimSpec spec = io::sim_spec_from_json(io::read_json(spec_path));
    if (seed_opt->count()) spec.seed = seed;
    const sim::LabeledCatalog lc = sim::simulate(spec);
    save_catalog(lc.catalog, events_path);
    io::save_forest(parents_path, lc.truth);
    Json summary{{"command", "simulate"},
                 {"events", lc.catalog.size()},
                 {"background_events", lc.truth.background_count()},
                 {"orphans", lc.orphans},
                 {"discarded", lc.discarded},
                 {"true_reproductive_ratio", sim::true_reproductive_ratio(spec)},
                 {"spec", io::to_json(spec)}};
    if (std::holds_alternative<sim::EtasTrigger>(spec.trigger))
      summary["magnitude_law"] = "truncated exponential (Gutenberg-Richter), stand-in";
    print_json(summary);
  }
};

// ---------------------------------------------------------------- predict

struct PredictCommand {
  std::string config_path, model_path, etas_path, grid_path, out_path, rates_path;
  unsigned threads = 1;
  CatalogFlags catalog;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("predict", "Forecast counts on a grid and compute the L-score");
    sub->add_option("--config", config_path, "JSON file with a \"catalog\" section");
    auto* m = sub->add_option("--model", model_path, "Model JSON written by decluster");
    auto* e = sub->add_option("--etas", etas_path, "ETAS parameters JSON");
    m->excludes(e);
    sub->add_option("--grid", grid_path, "Grid spec JSON")->required();
    sub->add_option("--out", out_path, "Result JSON")->required();
    sub->add_option("--rates-out", rates_path, "Per-bin CSV of rates and counts");
    sub->add_option("--threads", threads, "Worker threads");
    catalog.add(sub);
    sub->callback([this] { run(); });
  }

  void run() {
    if (model_path.empty() == etas_path.empty())
      throw ValidationError("give exactly one of --model or --etas");
    const auto config = read_config(config_path);
    check_sections(config, {"catalog"});
    CatalogOptions copts = catalog.merge(section(config, "catalog"));
    const EventCatalog events = open_catalog(copts);
    const io::GridSpec grid_spec = io::grid_spec_from_json(io::read_json(grid_path));

    std::optional<IntensityModel> model;
    std::optional<eval::EtasForecast> etas;
    if (!model_path.empty()) {
      model = io::load_model(model_path);
      if (model->g.size() > 0 && model->g.dimension() != events.dimension())
        throw ValidationError("model dimension does not match the catalog");
    } else {
      etas = io::etas_forecast_from_json(io::read_json(etas_path));
    }

    eval::ForecastGrid grid;
    if (const auto* daily = std::get_if<eval::DailySpec>(&grid_spec)) {
      grid = model ? eval::daily_forecast(*model, events, *daily, threads)
                   : eval::etas_daily_forecast(*etas, events, *daily);
    } else {
      const auto& spec = std::get<io::ExplicitBins>(grid_spec);
      eval::check_bins(spec.bins);
      if (spec.bins.empty()) throw ValidationError("grid has no bins");
      double start = std::numeric_limits<double>::infinity();
      for (const auto& b : spec.bins) start = std::min(start, b.t_begin);
      std::vector<std::size_t> rows;
      for (std::size_t i = 0; i < events.size(); ++i)
        if (events.time(i) < start && events.time(i) >= start - spec.lookback_days) rows.push_back(i);
      const Matrix history = select_rows(events.events(), rows);
      grid.bins = spec.bins;
      if (model) {
        grid.rate = eval::predictive_rates(*model, history, grid.bins, threads);
      } else {
        if (!events.has_magnitudes()) throw ValidationError("ETAS forecasting needs --magnitude-column");
        std::vector<double> mags;
        for (std::size_t i : rows) mags.push_back(events.magnitudes()[i]);
        grid.rate = eval::etas_rates(*etas, history, mags, grid.bins);
      }
      eval::count_events(grid, events);
    }
    grid.validate();
    const eval::LScore score = eval::l_score(grid);

    Json per_bin = Json::array();
    double total_rate = 0.0;
    std::uint64_t total_count = 0;
    for (std::size_t b = 0; b < grid.size(); ++b) {
      per_bin.push_back(Json{{"rate", grid.rate[b]}, {"count", grid.count[b]}});
      total_rate += grid.rate[b];
      total_count += grid.count[b];
    }
    Json result{{"command", "predict"},
                {"forecaster", model ? "nonparametric" : "etas"},
                {"bins", grid.size()},
                {"total_rate", total_rate},
                {"total_count", total_count}};
    // -infinity has no JSON spelling: null plus an explicit flag.
    result["l_score"] = score.impossible() ? Json(nullptr) : Json(score.value);
    result["l_score_without_factorial"] =
        score.impossible() ? Json(nullptr) : Json(score.without_factorial);
    result["l_score_is_minus_infinity"] = score.impossible();
    result["impossible_bins"] = score.impossible_bins;
    result["catalog"] = to_json(copts);
    result["grid"] = io::to_json(grid_spec);
    if (etas) result["etas"] = io::to_json(*etas);
    result["threads"] = threads;
    result["per_bin"] = std::move(per_bin);
    io::write_json(out_path, result);

    if (!rates_path.empty()) {
      std::ofstream out(rates_path);
      if (!out) throw IngestionError("cannot write '" + rates_path + "'");
      const std::size_t q = grid.size() ? grid.bins[0].lower.size() : 0;
      out << "t_begin,t_end";
      for (std::size_t k = 0; k < q; ++k) out << ",lower" << k + 1 << ",upper" << k + 1;
      out << ",rate,count\n";
      for (std::size_t b = 0; b < grid.size(); ++b) {
        const auto& bin = grid.bins[b];
        out << csv::format_double(bin.t_begin) << ',' << csv::format_double(bin.t_end);
        for (std::size_t k = 0; k < q; ++k)
          out << ',' << csv::format_double(bin.lower[k]) << ',' << csv::format_double(bin.upper[k]);
        out << ',' << csv::format_double(grid.rate[b]) << ',' << grid.count[b] << '\n';
      }
    }
  }
};

// ---------------------------------------------------------------- marginal

struct MarginalCommand {
  std::string model_path, out_path;
  std::size_t axis = 1, points = 201;
  double from = -1.0, to = 1.0;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("marginal", "Export a marginal of the fitted trigger as CSV");
    sub->add_option("--model", model_path, "Model JSON written by decluster")->required();
    sub->add_option("--axis", axis, "Coordinate: 0 is the time lag, k the k-th covariate");
    sub->add_option("--from", from, "Grid start");
    sub->add_option("--to", to, "Grid end");
    sub->add_option("--points", points, "Grid points")->check(CLI::Range(2, 1000000));
    sub->add_option("--out", out_path, "Curve CSV")->required();
    sub->callback([this] { run(); });
  }

  void run() {
    if (!(to > from)) throw ValidationError("--to must exceed --from");
    const IntensityModel model = io::load_model(model_path);
    std::vector<double> grid(points);
    for (std::size_t k = 0; k < points; ++k) grid[k] = from + (to - from) * double(k) / double(points - 1);
    io::save_curve(out_path, eval::trigger_marginal(model, axis, grid));
  }
};

// ---------------------------------------------------------------- benchmark

struct BenchmarkCommand {
  std::vector<std::size_t> sizes{2000, 4000};
  std::vector<std::string> methods{"accelerated", "exact"};
  std::size_t runs = 3, iterations = 5, L = 10, K = 10;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double memory_limit_mib = 2048;
  std::string out_path;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("benchmark", "Time accelerated and exact EM over a ladder of N");
    sub->add_option("--sizes", sizes, "Catalog sizes")->delimiter(',');
    sub->add_option("--methods", methods, "accelerated and/or exact")->delimiter(',');
    sub->add_option("--runs", runs, "Timed runs per (N, method)")->check(CLI::PositiveNumber);
    sub->add_option("--iterations", iterations, "Fixed EM iteration count")->check(CLI::PositiveNumber);
    sub->add_option("--L", L, "Neighbours per event");
    sub->add_option("--K", K, "Fixed bandwidth rank for K1 and K2");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--threads", threads, "Worker threads");
    sub->add_option("--memory-limit-mib", memory_limit_mib, "Refuse exact runs above this estimate");
    sub->add_option("--out", out_path, "Result CSV")->required();
    sub->callback([this] { run(); });
  }

  void run() {
    for (const auto& m : methods)
      if (m != "accelerated" && m != "exact") throw ValidationError("unknown method '" + m + "'");
    EmConfig cfg;
    cfg.L = L;
    cfg.K1 = K;
    cfg.K2 = K;
    cfg.max_iterations = iterations;
    cfg.tv_tolerance = std::numeric_limits<double>::min();  // run every iteration
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.exact_memory_limit_bytes = static_cast<std::size_t>(memory_limit_mib * 1048576.0);
    cfg.validate();

    std::ofstream out(out_path);
    if (!out) throw IngestionError("cannot write '" + out_path + "'");
    out << "N,method,runs,seconds,seconds_min,seconds_max,peak_memory_estimate_bytes,status\n";
    for (std::size_t n : sizes) {
      const EventCatalog events = sim::benchmark_catalog(n, seed);
      const std::size_t p = events.dimension();
      for (const auto& method : methods) {
        const bool exact = method == "exact";
        const std::size_t mem = exact ? exact_memory_estimate(n, p, cfg.resolved_delta_neighbors())
                                      : accelerated_memory_estimate(n, p, L, cfg.delta_neighbors);
        if (exact && mem > cfg.exact_memory_limit_bytes) {
          out << n << ',' << method << ",0,,,," << mem << ",refused\n";
          continue;
        }
        std::vector<double> seconds;
        for (std::size_t r = 0; r < runs; ++r) {
          const auto t0 = std::chrono::steady_clock::now();
          if (exact) run_em_exact(events, cfg); else run_em(events, cfg);
          seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
        const double mean = std::accumulate(seconds.begin(), seconds.end(), 0.0) / double(runs);
        out << n << ',' << method << ',' << runs << ',' << mean << ','
            << *std::min_element(seconds.begin(), seconds.end()) << ','
            << *std::max_element(seconds.begin(), seconds.end()) << ',' << mem << ",ok\n";
        out.flush();
      }
    }
  }
};

// ---------------------------------------------------------------- dump-nn

struct DumpCommand {
  std::string config_path, out_path;
  std::size_t L = 10;
  unsigned threads = 1;
  CatalogFlags catalog;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("dump-nn", "Write the L-nearest-neighbour table as CSV");
    sub->add_option("--config", config_path, "JSON file with a \"catalog\" section");
    sub->add_option("--L", L, "Neighbours per event, the event itself included");
    sub->add_option("--threads", threads, "Worker threads");
    sub->add_option("--out", out_path, "Neighbour CSV")->required();
    catalog.add(sub);
    sub->callback([this] { run(); });
  }

  void run() {
    const auto config = read_config(config_path);
    check_sections(config, {"catalog"});
    CatalogOptions copts = catalog.merge(section(config, "catalog"));
    const EventCatalog events = open_catalog(copts);
    io::save_neighbors(out_path, build_index(events.events(), events.scales(), L, threads));
  }
};

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Accelerated nonparametric EM for cascades of Poisson processes"};
  app.require_subcommand(1);
  DeclusterCommand decluster;
  SimulateCommand simulate;
  PredictCommand predict;
  MarginalCommand marginal;
  BenchmarkCommand benchmark;
  DumpCommand dump;
  decluster.add(app);
  simulate.add(app);
  predict.add(app);
  marginal.add(app);
  benchmark.add(app);
  dump.add(app);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  } catch (const NotConverged& e) {
    std::cerr << "warning: " << e.what() << '\n';
    return kNotConverged;
  } catch (const ResourceGuardError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kResourceGuard;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const IngestionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace copp::cli
