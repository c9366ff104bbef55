#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "galax/cli.hpp"
#include "galax/csv.hpp"
#include "galax/error.hpp"

namespace galax {

namespace {

std::string list_rows(const std::vector<std::size_t>& rows) {
  std::string s;
  const std::size_t shown = std::min<std::size_t>(rows.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) s += (i ? ", " : "") + std::to_string(rows[i]);
  if (rows.size() > shown) s += ", ... (" + std::to_string(rows.size()) + " rows)";
  return s;
}

/// Accumulates rows, then validates and builds the dataset in one place so
/// CSV and GeoJSON share the rejection rules.
class DatasetBuilder {
 public:
  DatasetBuilder(const IngestSpec& spec, std::vector<std::string> features)
      : spec_(spec), features_(std::move(features)) {}

  /// `values` holds x, y and the features; NaN marks a missing or unparseable cell.
  void add(std::size_t row_number, std::vector<double> values, const std::string& target) {
    bool bad = std::any_of(values.begin(), values.end(), [](double v) { return !std::isfinite(v); });
    double t = std::nan("");
    if (spec_.task == TaskKind::classification) {
      if (target.empty()) {
        bad = true;
      } else {
        const auto [it, inserted] = labels_.try_emplace(target, static_cast<int>(label_order_.size()));
        if (inserted) label_order_.push_back(target);
        t = it->second;
      }
    } else if (!csv::parse_double(target, t) || !std::isfinite(t)) {
      bad = true;
    }
    if (bad) bad_rows_.push_back(row_number);
    values.push_back(t);
    rows_.push_back(std::move(values));
  }

  Dataset build() {
    if (!bad_rows_.empty())
      throw Error(Errc::nonfinite_value,
                  "missing or non-finite values in used columns at row(s) " + list_rows(bad_rows_));
    const auto n = static_cast<Eigen::Index>(rows_.size());
    const auto d = static_cast<Eigen::Index>(features_.size());
    Dataset ds;
    ds.coords.resize(n, 2);
    ds.X.resize(n, d);
    ds.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& r = rows_[static_cast<std::size_t>(i)];
      ds.coords(i, 0) = r[0];
      ds.coords(i, 1) = r[1];
      for (Eigen::Index j = 0; j < d; ++j) ds.X(i, j) = r[static_cast<std::size_t>(j + 2)];
      ds.y(i) = r.back();
    }
    if (spec_.geodesic)
      for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(ds.coords(i, 1)) > 90.0)
          throw Error(Errc::invalid_input, "latitude outside [-90, 90] at row " + std::to_string(i + 1));
    ds.feature_names = features_;
    if (spec_.task == TaskKind::classification) {
      ds.task = Task::classification(static_cast<int>(label_order_.size()));
      ds.class_labels = label_order_;
    } else {
      ds.task = Task::regression();
    }
    return ds;
  }

 private:
  const IngestSpec& spec_;
  std::vector<std::string> features_;
  std::vector<std::vector<double>> rows_;
  std::vector<std::size_t> bad_rows_;
  std::map<std::string, int> labels_;
  std::vector<std::string> label_order_;
};

void check_disjoint(const IngestSpec& spec, const std::vector<std::string>& features) {
  std::set<std::string> seen;
  std::vector<std::string> used{spec.x_col, spec.y_col, spec.target_col};
  used.insert(used.end(), features.begin(), features.end());
  for (const auto& c : used)
    if (!seen.insert(c).second) throw Error(Errc::invalid_input, "column '" + c + "' is used twice");
  if (features.empty()) throw Error(Errc::invalid_input, "no feature columns selected");
}

double cell(const std::string& text) {
  double v;
  return csv::parse_double(text, v) ? v : std::nan("");
}

}  // namespace

Dataset parse_csv_dataset(const std::string& text, const IngestSpec& spec) {
  const std::vector<csv::Row> rows = csv::parse(text);
  if (rows.empty()) throw Error(Errc::invalid_input, "CSV has no header row");
  const csv::Row& header = rows[0];
  auto index_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(Errc::missing_column, "column '" + name + "' not found");
    return static_cast<std::size_t>(it - header.begin());
  };
  if (spec.target_col.empty()) throw Error(Errc::usage, "no target column given");
  const std::size_t xi = index_of(spec.x_col), yi = index_of(spec.y_col), ti = index_of(spec.target_col);

  std::vector<std::string> features = spec.feature_cols;
  if (features.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == xi || c == yi || c == ti) continue;
      bool numeric = true;
      for (std::size_t r = 1; r < rows.size() && numeric; ++r) {
        double v;
        if (c < rows[r].size() && !rows[r][c].empty() && !csv::parse_double(rows[r][c], v)) numeric = false;
      }
      if (numeric) features.push_back(header[c]);
    }
  }
  check_disjoint(spec, features);
  std::vector<std::size_t> fi;
  for (const auto& f : features) fi.push_back(index_of(f));

  DatasetBuilder builder(spec, features);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const csv::Row& row = rows[r];
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size())
      throw Error(Errc::invalid_input, "row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                                           " fields, header has " + std::to_string(header.size()));
    std::vector<double> values{cell(row[xi]), cell(row[yi])};
    for (std::size_t c : fi) values.push_back(cell(row[c]));
    builder.add(r, std::move(values), row[ti]);
  }
  return builder.build();
}

Dataset parse_geojson_dataset(const std::string& text, const IngestSpec& spec) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_input, std::string("GeoJSON parse error: ") + e.what());
  }
  if (doc.value("type", "") != "FeatureCollection" || !doc.contains("features") || !doc["features"].is_array())
    throw Error(Errc::invalid_input, "GeoJSON must be a FeatureCollection");
  if (spec.target_col.empty()) throw Error(Errc::usage, "no target column given");
  const auto& feats = doc["features"];

  for (std::size_t i = 0; i < feats.size(); ++i) {
    const auto& g = feats[i].value("geometry", nlohmann::json());
    const std::string kind = g.is_object() ? g.value("type", "") : "null";
    if (kind != "Point")
      throw Error(Errc::geometry_kind, "feature " + std::to_string(i + 1) + " has " + kind +
                                           " geometry; only Point is supported");
  }

  std::vector<std::string> features = spec.feature_cols;
  if (features.empty() && !feats.empty()) {
    const auto& props = feats[0].value("properties", nlohmann::json::object());
    for (auto it = props.begin(); it != props.end(); ++it) {
      if (it.key() == spec.target_col) continue;
      const bool numeric = std::all_of(feats.begin(), feats.end(), [&](const nlohmann::json& f) {
        const auto& p = f.value("properties", nlohmann::json::object());
        return !p.contains(it.key()) || p[it.key()].is_number() || p[it.key()].is_null();
      });
      if (numeric) features.push_back(it.key());
    }
  }
  IngestSpec geo = spec;
  geo.x_col = "<geometry x>";
  geo.y_col = "<geometry y>";
  check_disjoint(geo, features);

  DatasetBuilder builder(spec, features);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const auto& f = feats[i];
    const auto& coords = f["geometry"].value("coordinates", nlohmann::json::array());
    std::vector<double> values(2, std::nan(""));
    if (coords.is_array() && coords.size() >= 2 && coords[0].is_number() && coords[1].is_number())
      values = {coords[0].get<double>(), coords[1].get<double>()};
    const auto& props = f.value("properties", nlohmann::json::object());
    for (const auto& name : features) {
      if (!props.contains(name) && i == 0) throw Error(Errc::missing_column, "property '" + name + "' not found");
      values.push_back(props.contains(name) && props[name].is_number() ? props[name].get<double>() : std::nan(""));
    }
    if (i == 0 && !props.contains(spec.target_col))
      throw Error(Errc::missing_column, "property '" + spec.target_col + "' not found");
    std::string target;
    if (props.contains(spec.target_col)) {
      const auto& t = props[spec.target_col];
      if (t.is_string())
        target = t.get<std::string>();
      else if (t.is_number_integer())
        target = std::to_string(t.get<long long>());
      else if (t.is_number())
        target = csv::format_double(t.get<double>());
    }
    builder.add(i + 1, std::move(values), target);
  }
  return builder.build();
}

Dataset load_dataset(const IngestSpec& spec) {
  std::ifstream in(spec.path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read " + spec.path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string ext = spec.path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".geojson" || ext == ".json") return parse_geojson_dataset(buf.str(), spec);
  return parse_csv_dataset(buf.str(), spec);
}

}  // namespace galax
