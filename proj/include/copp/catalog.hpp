#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "copp/matrix.hpp"

namespace copp {

/// Observation window: a time span and an axis-aligned box over the covariates.
struct Window {
  double t_begin = 0.0;
  double t_end = 0.0;
  std::vector<double> lower;  // one entry per covariate
  std::vector<double> upper;

  double duration() const noexcept { return t_end - t_begin; }
  bool contains(std::span<const double> event) const noexcept;
};

/// Which CSV columns make up an event. Names are matched against the header row.
struct CatalogSchema {
  std::string time_column = "time";
  std::vector<std::string> covariate_columns;
  std::optional<std::string> magnitude_column;
  /// Subtracted from every parsed time (times are days since this epoch).
  double epoch_offset = 0.0;
};

/// Immutable N x p event matrix. Column 0 is time; rows are sorted by time
/// with a stable order for ties. Magnitudes ride along but are never used as
/// a distance coordinate.
class EventCatalog {
 public:
  EventCatalog(Matrix events, std::vector<double> scales, std::optional<Window> window = {},
               bool time_independent_background = false, std::vector<double> magnitudes = {},
               std::vector<std::string> column_names = {});

  std::size_t size() const noexcept { return events_.rows(); }
  std::size_t dimension() const noexcept { return events_.cols(); }
  std::size_t covariate_count() const noexcept { return events_.cols() - 1; }

  const Matrix& events() const noexcept { return events_; }
  std::span<const double> point(std::size_t i) const noexcept { return events_.row(i); }
  double time(std::size_t i) const noexcept { return events_(i, 0); }

  std::span<const double> scales() const noexcept { return scales_; }
  const Window& window() const noexcept { return window_; }
  bool time_independent_background() const noexcept { return time_independent_; }

  bool has_magnitudes() const noexcept { return !magnitudes_.empty(); }
  std::span<const double> magnitudes() const noexcept { return magnitudes_; }
  const std::vector<std::string>& column_names() const noexcept { return names_; }

  /// Row of the input matrix that became event i after sorting.
  std::size_t source_row(std::size_t i) const noexcept { return source_row_[i]; }

  /// Same events and metadata, different background mode.
  EventCatalog with_time_independent_background(bool flag) const;

 private:
  Matrix events_;
  std::vector<double> scales_;
  Window window_;
  bool time_independent_ = false;
  std::vector<double> magnitudes_;
  std::vector<std::string> names_;
  std::vector<std::size_t> source_row_;
};

/// Tight hull of the data: [min t, max t] x per-covariate [min, max].
Window hull_window(const Matrix& events);

EventCatalog load_catalog(const std::filesystem::path& path, const CatalogSchema& schema,
                          std::vector<double> scales, std::optional<Window> window = {},
                          bool time_independent_background = false);

/// Writes the header row from column_names() followed by shortest round-trip
/// decimal representations, so load_catalog reproduces the values bit-exactly.
void save_catalog(const EventCatalog& catalog, const std::filesystem::path& path);

/// Schema matching the header save_catalog writes for this catalog.
CatalogSchema schema_for(const EventCatalog& catalog);

/// sqrt(sum_k ((a_k - b_k) / scale_k)^2)
double standardized_distance(std::span<const double> a, std::span<const double> b,
                             std::span<const double> scales) noexcept;

double standardized_distance(const EventCatalog& catalog, std::size_t i, std::size_t j,
                             std::span<const double> scales);

}  // namespace copp
