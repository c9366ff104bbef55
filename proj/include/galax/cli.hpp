#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "galax/dataset.hpp"
#include "galax/results.hpp"

namespace galax {

struct IngestSpec {
  std::filesystem::path path;
  std::string x_col = "x";
  std::string y_col = "y";
  std::string target_col;
  /// Empty: every remaining numeric column.
  std::vector<std::string> feature_cols;
  TaskKind task = TaskKind::regression;
  bool geodesic = false;
};

/// CSV (header required) or GeoJSON FeatureCollection of Points, chosen by
/// extension. Missing or non-finite values are rejected with row numbers.
Dataset load_dataset(const IngestSpec& spec);
Dataset parse_csv_dataset(const std::string& text, const IngestSpec& spec);
Dataset parse_geojson_dataset(const std::string& text, const IngestSpec& spec);

/// Exit codes: 0 success, 2 usage, 3 data validation, 4 engine/model, 5 archive.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Horizontal SHAP bar chart as standalone SVG markup.
std::string shap_svg(const ShapRecord& record);

}  // namespace galax
