#include "copp/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "copp/csv.hpp"
#include "copp/error.hpp"

namespace copp {

bool Window::contains(std::span<const double> event) const noexcept {
  if (event[0] < t_begin || event[0] > t_end) return false;
  for (std::size_t k = 0; k < lower.size(); ++k)
    if (event[k + 1] < lower[k] || event[k + 1] > upper[k]) return false;
  return true;
}

Window hull_window(const Matrix& events) {
  Window w;
  const std::size_t covariates = events.cols() == 0 ? 0 : events.cols() - 1;
  w.lower.assign(covariates, 0.0);
  w.upper.assign(covariates, 0.0);
  if (events.rows() == 0) return w;
  w.t_begin = w.t_end = events(0, 0);
  for (std::size_t k = 0; k < covariates; ++k) w.lower[k] = w.upper[k] = events(0, k + 1);
  for (std::size_t i = 1; i < events.rows(); ++i) {
    w.t_begin = std::min(w.t_begin, events(i, 0));
    w.t_end = std::max(w.t_end, events(i, 0));
    for (std::size_t k = 0; k < covariates; ++k) {
      w.lower[k] = std::min(w.lower[k], events(i, k + 1));
      w.upper[k] = std::max(w.upper[k], events(i, k + 1));
    }
  }
  return w;
}

EventCatalog::EventCatalog(Matrix events, std::vector<double> scales, std::optional<Window> window,
                           bool time_independent_background, std::vector<double> magnitudes,
                           std::vector<std::string> column_names)
    : scales_(std::move(scales)), time_independent_(time_independent_background) {
  const std::size_t n = events.rows();
  const std::size_t p = events.cols();
  if (n == 0) throw ValidationError("catalog must contain at least one event");
  if (p == 0) throw ValidationError("catalog must have a time column");
  if (scales_.size() != p)
    throw ValidationError("expected " + std::to_string(p) + " scales, got " +
                          std::to_string(scales_.size()));
  for (std::size_t k = 0; k < p; ++k)
    if (!(scales_[k] > 0.0) || !std::isfinite(scales_[k]))
      throw ValidationError("scale " + std::to_string(k + 1) + " must be strictly positive");
  if (!magnitudes.empty() && magnitudes.size() != n)
    throw ValidationError("magnitude column length does not match event count");
  if (time_independent_ && p < 2)
    throw ValidationError("time-independent background needs at least one covariate");
  for (double v : events.data())
    if (!std::isfinite(v)) throw ValidationError("event coordinates must be finite");

  source_row_.resize(n);
  std::iota(source_row_.begin(), source_row_.end(), std::size_t{0});
  std::stable_sort(source_row_.begin(), source_row_.end(),
                   [&](std::size_t a, std::size_t b) { return events(a, 0) < events(b, 0); });
  events_ = Matrix(n, p);
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(events.row(source_row_[i]).begin(), p, events_.row(i).begin());
  if (!magnitudes.empty()) {
    magnitudes_.resize(n);
    for (std::size_t i = 0; i < n; ++i) magnitudes_[i] = magnitudes[source_row_[i]];
  }

  window_ = window ? *window : hull_window(events_);
  if (window_.lower.size() != p - 1 || window_.upper.size() != p - 1)
    throw ValidationError("window bounding box must have one interval per covariate");
  if (window_.t_end < window_.t_begin) throw ValidationError("window time span is reversed");
  for (std::size_t i = 0; i < n; ++i)
    if (!window_.contains(events_.row(i)))
      throw ValidationError("event " + std::to_string(i + 1) + " lies outside the window");

  if (column_names.empty()) {
    column_names.push_back("time");
    for (std::size_t k = 1; k < p; ++k) column_names.push_back("x" + std::to_string(k));
    if (!magnitudes_.empty()) column_names.push_back("magnitude");
  }
  const std::size_t expected_names = p + (magnitudes_.empty() ? 0 : 1);
  if (column_names.size() != expected_names)
    throw ValidationError("column name count does not match catalog columns");
  names_ = std::move(column_names);
}

EventCatalog EventCatalog::with_time_independent_background(bool flag) const {
  EventCatalog copy = *this;
  if (flag && dimension() < 2)
    throw ValidationError("time-independent background needs at least one covariate");
  copy.time_independent_ = flag;
  return copy;
}

EventCatalog load_catalog(const std::filesystem::path& path, const CatalogSchema& schema,
                          std::vector<double> scales, std::optional<Window> window,
                          bool time_independent_background) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open catalog file '" + path.string() + "'");
  if (scales.size() != 1 + schema.covariate_columns.size())
    throw ValidationError("scales must have one entry for time plus one per covariate");
  for (double s : scales)
    if (!(s > 0.0)) throw ValidationError("scales must be strictly positive");

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
  }
  if (in.eof() && line.find_first_not_of(" \t\r") == std::string::npos)
    throw IngestionError("catalog file '" + path.string() + "' has no header row");

  const auto header = csv::split(line);
  auto column_of = [&](const std::string& name) {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    throw IngestionError("column '" + name + "' not found in header");
  };
  std::vector<std::size_t> columns{column_of(schema.time_column)};
  for (const auto& name : schema.covariate_columns) columns.push_back(column_of(name));
  std::optional<std::size_t> magnitude_col;
  if (schema.magnitude_column) magnitude_col = column_of(*schema.magnitude_column);

  const std::size_t p = columns.size();
  std::vector<double> values;
  std::vector<double> magnitudes;
  std::size_t rows = 0;
  auto field = [&](const std::vector<std::string_view>& fields, std::size_t c,
                   const std::string& name) {
    if (c >= fields.size())
      throw IngestionError("row " + std::to_string(line_no) + ": missing field '" + name + "'");
    const auto v = csv::parse_double(fields[c]);
    if (!v || !std::isfinite(*v))
      throw IngestionError("row " + std::to_string(line_no) + ": cannot parse field '" + name +
                           "' value '" + std::string(fields[c]) + "'");
    return *v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = csv::split(line);
    values.push_back(field(fields, columns[0], schema.time_column) - schema.epoch_offset);
    for (std::size_t k = 1; k < p; ++k)
      values.push_back(field(fields, columns[k], schema.covariate_columns[k - 1]));
    if (magnitude_col) magnitudes.push_back(field(fields, *magnitude_col, *schema.magnitude_column));
    ++rows;
  }
  if (rows == 0) throw IngestionError("catalog file '" + path.string() + "' has no events");

  std::vector<std::string> names{schema.time_column};
  names.insert(names.end(), schema.covariate_columns.begin(), schema.covariate_columns.end());
  if (magnitude_col) names.push_back(*schema.magnitude_column);
  return EventCatalog(Matrix(rows, p, std::move(values)), std::move(scales), std::move(window),
                      time_independent_background, std::move(magnitudes), std::move(names));
}

CatalogSchema schema_for(const EventCatalog& catalog) {
  CatalogSchema schema;
  const auto& names = catalog.column_names();
  schema.time_column = names[0];
  for (std::size_t k = 1; k < catalog.dimension(); ++k) schema.covariate_columns.push_back(names[k]);
  if (catalog.has_magnitudes()) schema.magnitude_column = names.back();
  return schema;
}

void save_catalog(const EventCatalog& catalog, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write catalog file '" + path.string() + "'");
  const auto& names = catalog.column_names();
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    const auto row = catalog.point(i);
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << csv::format_double(row[k]);
    if (catalog.has_magnitudes()) out << ',' << csv::format_double(catalog.magnitudes()[i]);
    out << '\n';
  }
}

double standardized_distance(std::span<const double> a, std::span<const double> b,
                             std::span<const double> scales) noexcept {
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double z = (a[k] - b[k]) / scales[k];
    sq += z * z;
  }
  return std::sqrt(sq);
}

double standardized_distance(const EventCatalog& catalog, std::size_t i, std::size_t j,
                             std::span<const double> scales) {
  if (i >= catalog.size() || j >= catalog.size())
    throw ArgumentError("event index out of range");
  if (scales.size() != catalog.dimension())
    throw ArgumentError("scale vector length does not match catalog dimension");
  return standardized_distance(catalog.point(i), catalog.point(j), scales);
}

}  // namespace copp
