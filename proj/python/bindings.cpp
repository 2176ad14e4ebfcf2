// Python bindings: catalogs in, numpy arrays and JSON strings out.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "copp/catalog.hpp"
#include "copp/decluster.hpp"
#include "copp/error.hpp"
#include "copp/evaluate.hpp"
#include "copp/io.hpp"
#include "copp/neighbors.hpp"
#include "copp/simulate.hpp"

namespace py = pybind11;
using namespace copp;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ValidationError("expected a 2-D array");
  Matrix m(a.shape(0), a.shape(1));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Array to_array(const Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

py::array_t<long long> parents_array(const Forest& f) {
  py::array_t<long long> a(f.size());
  auto* out = a.mutable_data();
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f.is_background(i) ? -1 : (long long)f.parent[i];
  return a;
}

EventCatalog make_catalog(const Array& events, std::vector<double> scales, bool time_independent) {
  return EventCatalog(to_matrix(events), std::move(scales), {}, time_independent);
}

// Evaluates a per-row function over an (n, d) array.
template <class F>
py::array_t<double> map_rows(const Array& x, F&& f) {
  const Matrix m = to_matrix(x);
  py::array_t<double> out(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) out.mutable_data()[i] = f(m.row(i));
  return out;
}

struct Fit {
  EventCatalog catalog;
  EmConfig config;
  EmResult result;
};

}  // namespace

PYBIND11_MODULE(_copp, m) {
  m.doc() = "Nonparametric stochastic declustering of self-exciting point processes";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<IngestionError>(m, "IngestionError", PyExc_ValueError);
  py::register_exception<DegenerateError>(m, "DegenerateError", PyExc_RuntimeError);
  py::register_exception<ResourceGuardError>(m, "ResourceGuardError", PyExc_MemoryError);

  m.def(
      "load_catalog",
      [](const std::string& path, std::vector<double> scales, const std::string& time_column,
         std::vector<std::string> covariates, double epoch_offset) {
        CatalogSchema s;
        s.time_column = time_column;
        s.covariate_columns = std::move(covariates);
        s.epoch_offset = epoch_offset;
        return to_array(load_catalog(path, s, std::move(scales)).events());
      },
      py::arg("path"), py::arg("scales"), py::arg("time_column") = "time",
      py::arg("covariates") = std::vector<std::string>{}, py::arg("epoch_offset") = 0.0,
      "Read a CSV catalog and return the time-sorted (N, p) event array.");

  m.def(
      "simulate",
      [](const std::string& spec_json) {
        const auto lc = sim::simulate(io::sim_spec_from_json(io::Json::parse(spec_json)));
        return py::make_tuple(to_array(lc.catalog.events()), parents_array(lc.truth));
      },
      py::arg("spec_json"), "Simulate a catalog; returns (events, parents) with parent -1 for background.");

  m.def(
      "neighbors",
      [](const Array& points, std::vector<double> scales, std::size_t L) {
        const auto idx = build_index(to_matrix(points), scales, L);
        py::array_t<long long> a({idx.rows(), L});
        py::array_t<double> d({idx.rows(), L});
        for (std::size_t i = 0; i < idx.rows(); ++i)
          for (std::size_t l = 0; l < L; ++l) {
            a.mutable_at(i, l) = idx.alpha(i, l);
            d.mutable_at(i, l) = idx.dist(i, l);
          }
        return py::make_tuple(a, d);
      },
      py::arg("points"), py::arg("scales"), py::arg("L"),
      "All-L-nearest-neighbours: (indices, distances), column 0 is the point itself.");

  py::class_<Fit>(m, "Fit")
      .def_property_readonly("background_probability",
                             [](const Fit& f) {
                               py::array_t<double> a(f.result.P.size());
                               for (std::size_t i = 0; i < f.result.P.size(); ++i)
                                 a.mutable_data()[i] = f.result.P.P(i, 0);
                               return a;
                             })
      .def_property_readonly("reproductive_ratio",
                             [](const Fit& f) { return eval::estimated_reproductive_ratio(f.result.P); })
      .def_property_readonly("iterations", [](const Fit& f) { return f.result.diagnostics.iterations; })
      .def_property_readonly("converged", [](const Fit& f) { return f.result.diagnostics.converged; })
      .def_property_readonly("tv", [](const Fit& f) { return f.result.diagnostics.tv; })
      .def("background_at",
           [](const Fit& f, const Array& x) {
             return map_rows(x, [&](auto r) { return f.result.model.background_at(r); });
           })
      .def("trigger_at",
           [](const Fit& f, const Array& d) {
             return map_rows(d, [&](auto r) { return f.result.model.trigger_at(r); });
           })
      .def(
          "trigger_marginal",
          [](const Fit& f, std::size_t axis, std::vector<double> grid) {
            return eval::trigger_marginal(f.result.model, axis, grid).y;
          },
          py::arg("axis"), py::arg("grid"))
      .def(
          "sample_forest",
          [](const Fit& f, std::uint64_t seed) {
            Rng rng(seed);
            return parents_array(sample_forest(f.result.P, rng));
          },
          py::arg("seed") = 1)
      .def("model_json", [](const Fit& f) { return io::model_to_json(f.result.model).dump(); })
      .def("diagnostics_json", [](const Fit& f) { return io::to_json(f.result.diagnostics).dump(); })
      .def(
          "daily_l_score",
          [](const Fit& f, double first_day, std::size_t days, std::vector<std::vector<double>> edges,
             double lookback_days) {
            const eval::DailySpec spec{first_day, days, lookback_days, std::move(edges)};
            const auto grid = eval::daily_forecast(f.result.model, f.catalog, spec);
            const auto s = eval::l_score(grid);
            py::dict out;
            out["l_score"] = s.value;
            out["l_score_without_factorial"] = s.without_factorial;
            out["impossible_bins"] = s.impossible_bins;
            out["rates"] = grid.rate;
            out["counts"] = grid.count;
            return out;
          },
          py::arg("first_day"), py::arg("days"), py::arg("edges"), py::arg("lookback_days") = 7.0);

  m.def(
      "decluster",
      [](const Array& events, std::vector<double> scales, const std::string& config_json,
         bool time_independent) {
        auto f = std::make_unique<Fit>(Fit{make_catalog(events, std::move(scales), time_independent),
                                           io::em_config_from_json(io::Json::parse(config_json)), {}});
        py::gil_scoped_release release;
        f->result = run_em(f->catalog, f->config);
        return f;
      },
      py::arg("events"), py::arg("scales"), py::arg("config_json") = "{}",
      py::arg("time_independent") = false,
      "Run stochastic declustering and return a Fit.");

  m.def(
      "exact_max_difference",
      [](const Array& events, std::vector<double> scales, const std::string& config_json) {
        const auto cat = make_catalog(events, std::move(scales), false);
        const auto config = io::em_config_from_json(io::Json::parse(config_json));
        const auto fast = run_em(cat, config);
        const auto slow = run_em_exact(cat, config);
        const auto dense = to_dense(fast.P);
        double worst = 0.0;
        for (std::size_t i = 0; i < cat.size(); ++i) {
          worst = std::max(worst, std::abs(dense.background[i] - slow.P.background[i]));
          for (std::size_t j = 0; j < cat.size(); ++j)
            worst = std::max(worst, std::abs(dense.trigger(i, j) - slow.P.trigger(i, j)));
        }
        return worst;
      },
      py::arg("events"), py::arg("scales"), py::arg("config_json") = "{}",
      "Largest entrywise gap between the final accelerated and dense responsibilities.");

  m.def("log_l_score",
        [](std::vector<double> rate, std::vector<std::uint64_t> count) {
          eval::ForecastGrid g;
          for (std::size_t b = 0; b < rate.size(); ++b)
            g.bins.push_back(eval::Bin{double(b), double(b + 1), {}, {}});
          g.rate = std::move(rate);
          g.count = std::move(count);
          return eval::log_l_score(g);
        },
        py::arg("rate"), py::arg("count"), "Log joint Poisson probability of counts under rates.");
}
