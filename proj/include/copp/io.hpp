#pragma once

#include <filesystem>
#include <variant>
#include <vector>

#include "copp/catalog.hpp"
#include "copp/decluster.hpp"
#include "copp/evaluate.hpp"
#include "copp/neighbors.hpp"
#include "copp/simulate.hpp"
#include "json.hpp"

namespace copp::io {

using Json = nlohmann::ordered_json;

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& value);

/// Unknown keys are rejected so that typos do not silently fall back to defaults.
EmConfig em_config_from_json(const Json& j, EmConfig base = {});
Json to_json(const EmConfig& config);
Json to_json(const EmDiagnostics& diagnostics);

sim::SimSpec sim_spec_from_json(const Json& j);
Json to_json(const sim::SimSpec& spec);

eval::EtasForecast etas_forecast_from_json(const Json& j);
Json to_json(const eval::EtasForecast& model);

/// Either daily cells or explicit bins.
struct ExplicitBins {
  std::vector<eval::Bin> bins;
  /// History is limited to events within this many days before the first bin;
  /// infinity keeps every earlier event.
  double lookback_days;
};
using GridSpec = std::variant<eval::DailySpec, ExplicitBins>;

GridSpec grid_spec_from_json(const Json& j);
Json to_json(const GridSpec& spec);

/// Model schema: format tag, mode, reading, window length, then the
/// background and trigger mixtures (zero-weight centres omitted).
Json model_to_json(const IntensityModel& model);
IntensityModel model_from_json(const Json& j);

void save_model(const std::filesystem::path& path, const IntensityModel& model,
                const EmConfig& config, const EmDiagnostics& diagnostics);
IntensityModel load_model(const std::filesystem::path& path);

/// Sparse triples "event,parent,probability", 1-based with parent 0 for the
/// background; zero entries are skipped.
void save_branching(const std::filesystem::path& path, const BranchingDistribution& P);
void save_branching(const std::filesystem::path& path, const DenseBranching& P);
/// Inverse of save_branching onto the dense layout.
DenseBranching load_branching(const std::filesystem::path& path, std::size_t n);

/// Two columns "event,parent", 1-based with parent 0 for the background.
void save_forest(const std::filesystem::path& path, const Forest& forest);
Forest load_forest(const std::filesystem::path& path, std::size_t n);

/// Plot-ready forest edges: each triggered event with its parent's coordinates.
void save_forest_edges(const std::filesystem::path& path, const EventCatalog& catalog,
                       const Forest& forest);

/// "event,rank,neighbor,distance", 1-based; rank 1 is the event itself.
void save_neighbors(const std::filesystem::path& path, const NeighborIndex& index);

/// Two columns "x,value".
void save_curve(const std::filesystem::path& path, const eval::Curve& curve);

}  // namespace copp::io
