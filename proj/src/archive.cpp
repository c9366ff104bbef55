#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "galax/csv.hpp"
#include "galax/error.hpp"
#include "galax/results.hpp"
#include "galax/zip.hpp"

namespace galax {

namespace {

using nlohmann::json;

constexpr const char* kManifest = "manifest.json";
constexpr const char* kLocalFits = "local_fits.csv";
constexpr const char* kShap = "shap_values.csv";
constexpr const char* kBase = "base_values.csv";

const csv::Row kLocalFitColumns{"location",        "bandwidth_used", "effective_n", "learner",
                                "hyperparameters", "prediction",     "local_score", "expanded",
                                "seed",            "x",              "y",           "explained_output",
                                "explained_class", "explain_mode",   "probabilities"};

void dump(const json& v, std::string& out) {
  switch (v.type()) {
    case json::value_t::object: {
      out.push_back('{');
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out.push_back(',');
        first = false;
        out += json(it.key()).dump();
        out.push_back(':');
        dump(it.value(), out);
      }
      out.push_back('}');
      break;
    }
    case json::value_t::array: {
      out.push_back('[');
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out.push_back(',');
        dump(v[i], out);
      }
      out.push_back(']');
      break;
    }
    case json::value_t::number_float: {
      const double d = v.get<double>();
      out += std::isfinite(d) ? csv::format_double(d) : "null";
      break;
    }
    default:
      out += v.dump();
  }
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

double read_double(const json& j) { return j.is_null() ? std::nan("") : j.get<double>(); }

json kernel_to_json(const KernelSpec& k) {
  return {{"function", to_string(k.function)},
          {"mode", to_string(k.mode)},
          {"bandwidth", optional_number(k.bandwidth)},
          {"geodesic", k.geodesic}};
}

KernelSpec kernel_from_json(const json& j) {
  KernelSpec k;
  k.function = parse_kernel_function(j.at("function").get<std::string>());
  k.mode = j.at("mode").get<std::string>() == "fixed" ? BandwidthMode::fixed : BandwidthMode::adaptive;
  k.bandwidth = read_optional(j.at("bandwidth"));
  k.geodesic = j.at("geodesic").get<bool>();
  return k;
}

json max_features_to_json(const MaxFeatures& mf) {
  return mf.use_sqrt ? json("sqrt") : json(mf.fraction);
}

MaxFeatures max_features_from_json(const json& j) {
  return j.is_string() ? MaxFeatures::sqrt() : MaxFeatures::of(j.get<double>());
}

json grid_to_json(const HyperGrid& g) {
  json depth = json::array(), mf = json::array();
  for (const auto& d : g.max_depth) depth.push_back(d ? json(*d) : json(nullptr));
  for (const auto& m : g.max_features) mf.push_back(max_features_to_json(m));
  return {{"max_depth", depth},
          {"min_samples_leaf", g.min_samples_leaf},
          {"n_estimators", g.n_estimators},
          {"max_features", mf},
          {"learning_rate", g.learning_rate},
          {"subsample", g.subsample}};
}

HyperGrid grid_from_json(const json& j) {
  HyperGrid g;
  for (const auto& d : j.at("max_depth"))
    g.max_depth.push_back(d.is_null() ? std::nullopt : std::optional<int>(d.get<int>()));
  g.min_samples_leaf = j.at("min_samples_leaf").get<std::vector<int>>();
  g.n_estimators = j.at("n_estimators").get<std::vector<int>>();
  for (const auto& m : j.at("max_features")) g.max_features.push_back(max_features_from_json(m));
  g.learning_rate = j.at("learning_rate").get<std::vector<double>>();
  g.subsample = j.at("subsample").get<std::vector<double>>();
  return g;
}

json settings_to_json(const GalaxConfig& c) {
  json candidates = json::array();
  for (Learner l : c.automl.candidates) candidates.push_back(to_string(l));
  json grids = json::object();
  for (const auto& [l, g] : c.automl.grids) grids[to_string(l)] = grid_to_json(g);
  return {
      {"kernel", kernel_to_json(c.kernel)},
      {"bw_method", c.bw_method ? json(to_string(*c.bw_method)) : json(nullptr)},
      {"isa",
       {{"start", optional_number(c.isa.start)},
        {"increment", optional_number(c.isa.increment)},
        {"n_bands", c.isa.n_bands}}},
      {"automl",
       {{"candidates", candidates},
        {"grids", grids},
        {"strategy", to_string(c.automl.strategy)},
        {"n_draws", c.automl.n_draws},
        {"budget", c.automl.budget},
        {"cv_folds", c.automl.cv_folds},
        {"metric", c.automl.metric ? json(to_string(*c.automl.metric)) : json(nullptr)},
        {"seed", c.automl.seed},
        {"min_local_samples", c.automl.min_local_samples}}},
      {"explain",
       {{"enabled", c.explain.enabled},
        {"mode", to_string(c.explain.mode)},
        {"n_permutations", c.explain.n_permutations},
        {"max_exact_features", c.explain.max_exact_features},
        {"background_size", c.explain.background_size},
        {"target_class", c.explain.target_class ? json(*c.explain.target_class) : json(nullptr)}}},
      {"weight_floor", c.weight_floor},
      {"master_seed", c.master_seed}};
}

GalaxConfig settings_from_json(const json& j) {
  GalaxConfig c;
  c.kernel = kernel_from_json(j.at("kernel"));
  if (!j.at("bw_method").is_null()) c.bw_method = parse_bandwidth_method(j.at("bw_method").get<std::string>());
  const auto& isa = j.at("isa");
  c.isa.start = read_optional(isa.at("start"));
  c.isa.increment = read_optional(isa.at("increment"));
  c.isa.n_bands = isa.at("n_bands").get<int>();
  const auto& a = j.at("automl");
  c.automl.candidates.clear();
  for (const auto& l : a.at("candidates")) c.automl.candidates.push_back(parse_learner(l.get<std::string>()));
  c.automl.grids.clear();
  for (auto it = a.at("grids").begin(); it != a.at("grids").end(); ++it)
    c.automl.grids[parse_learner(it.key())] = grid_from_json(it.value());
  c.automl.strategy = a.at("strategy").get<std::string>() == "grid" ? SearchStrategy::grid : SearchStrategy::random;
  c.automl.n_draws = a.at("n_draws").get<int>();
  c.automl.budget = a.at("budget").get<int>();
  c.automl.cv_folds = a.at("cv_folds").get<int>();
  if (!a.at("metric").is_null()) c.automl.metric = parse_metric(a.at("metric").get<std::string>());
  c.automl.seed = a.at("seed").get<std::uint64_t>();
  c.automl.min_local_samples = a.at("min_local_samples").get<int>();
  const auto& e = j.at("explain");
  c.explain.enabled = e.at("enabled").get<bool>();
  c.explain.mode = e.at("mode").get<std::string>() == "exact" ? ExplainMode::exact : ExplainMode::sampled;
  c.explain.n_permutations = e.at("n_permutations").get<int>();
  c.explain.max_exact_features = e.at("max_exact_features").get<int>();
  c.explain.background_size = e.at("background_size").get<int>();
  if (!e.at("target_class").is_null()) c.explain.target_class = e.at("target_class").get<int>();
  c.weight_floor = j.at("weight_floor").get<double>();
  c.master_seed = j.at("master_seed").get<std::uint64_t>();
  return c;
}

std::string join_lines(const std::vector<csv::Row>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += csv::join(r);
    out += "\n";
  }
  return out;
}

std::string model_member(std::size_t i) { return "models/" + std::to_string(i) + ".json"; }

[[noreturn]] void corrupt(const std::string& member, const std::string& what) {
  throw Error(Errc::integrity, "integrity error in " + member + ": " + what);
}

double number(const std::string& member, const std::string& text) {
  double v;
  if (!csv::parse_double(text, v)) corrupt(member, "bad number '" + text + "'");
  return v;
}

/// Parses a CSV member and checks its shape: header plus `rows` records of `cols` fields.
std::vector<csv::Row> table(const std::string& member, const std::string& text, std::size_t rows,
                            std::size_t cols) {
  std::vector<csv::Row> t;
  try {
    t = csv::parse(text);
  } catch (const Error& e) {
    corrupt(member, e.what());
  }
  if (t.empty()) corrupt(member, "missing header");
  if (t.size() - 1 != rows)
    corrupt(member, "expected " + std::to_string(rows) + " rows, found " + std::to_string(t.size() - 1));
  for (std::size_t r = 0; r < t.size(); ++r)
    if (t[r].size() != cols)
      corrupt(member, "row " + std::to_string(r) + " has " + std::to_string(t[r].size()) +
                          " fields, expected " + std::to_string(cols));
  return t;
}

}  // namespace

std::string canonical_json(const nlohmann::json& value) {
  std::string out;
  dump(value, out);
  return out;
}

std::vector<std::pair<std::string, std::string>> archive_members(const GalaxResults& results) {
  const std::size_t n = results.local_fits.size();
  const auto& names = results.feature_names();

  json metrics = json::object();
  for (const auto& [k, v] : results.global_metrics) metrics[k] = v;
  json member_list = json::array({kManifest, kLocalFits, kShap, kBase});
  for (std::size_t i = 0; i < n; ++i) member_list.push_back(model_member(i));
  const json manifest = {
      {"schema_version", results.schema_version},
      {"task", to_string(results.task.kind)},
      {"n_classes", results.task.n_classes},
      {"class_labels", results.class_labels},
      {"kernel", kernel_to_json(results.resolved_kernel)},
      {"bw_method", to_string(results.bw_method_used)},
      {"settings", settings_to_json(results.settings)},
      {"global_metrics", metrics},
      {"dataset",
       {{"rows", results.dataset.rows},
        {"features", results.dataset.features},
        {"feature_names", names},
        {"content_hash", results.dataset.content_hash}}},
      {"members", member_list}};

  std::vector<csv::Row> fits{kLocalFitColumns};
  std::vector<csv::Row> shap{names};
  std::vector<csv::Row> base{{"base_value"}};
  for (std::size_t i = 0; i < n; ++i) {
    const LocalFit& lf = results.local_fits[i];
    std::string probs;
    for (Eigen::Index c = 0; c < lf.probabilities.size(); ++c) {
      if (c) probs.push_back(';');
      probs += csv::format_double(lf.probabilities(c));
    }
    fits.push_back({std::to_string(lf.location), csv::format_double(lf.bandwidth_used),
                    csv::format_double(lf.effective_n), to_string(lf.selected.learner),
                    canonical_json(hyperparameters_to_json(lf.selected.learner, lf.selected.hyper)),
                    csv::format_double(lf.prediction), csv::format_double(lf.local_score),
                    lf.expanded ? "1" : "0", std::to_string(lf.selected.seed),
                    csv::format_double(results.coords(static_cast<Eigen::Index>(i), 0)),
                    csv::format_double(results.coords(static_cast<Eigen::Index>(i), 1)),
                    csv::format_double(lf.explained_output), std::to_string(lf.explained_class),
                    to_string(lf.explain_mode), probs});
    csv::Row srow(names.size());
    csv::Row brow{""};
    if (lf.explained()) {
      for (std::size_t j = 0; j < names.size(); ++j) srow[j] = csv::format_double(lf.shap(static_cast<Eigen::Index>(j)));
      brow[0] = csv::format_double(lf.base_value);
    }
    shap.push_back(std::move(srow));
    base.push_back(std::move(brow));
  }

  std::vector<std::pair<std::string, std::string>> members;
  members.emplace_back(kManifest, canonical_json(manifest) + "\n");
  members.emplace_back(kLocalFits, join_lines(fits));
  members.emplace_back(kShap, join_lines(shap));
  members.emplace_back(kBase, join_lines(base));
  for (std::size_t i = 0; i < n; ++i)
    members.emplace_back(model_member(i), canonical_json(model_to_json(results.local_fits[i].model)) + "\n");
  return members;
}

std::string archive_bytes(const GalaxResults& results) { return zip::write(archive_members(results)); }

GalaxResults results_from_archive(const std::string& bytes) {
  std::map<std::string, std::string> members;
  for (auto& [name, data] : zip::read(bytes)) members[name] = std::move(data);
  auto member = [&](const std::string& name) -> const std::string& {
    const auto it = members.find(name);
    if (it == members.end()) throw Error(Errc::integrity, "archive is missing member " + name);
    return it->second;
  };

  json manifest;
  try {
    manifest = json::parse(member(kManifest));
  } catch (const json::exception& e) {
    corrupt(kManifest, e.what());
  }

  GalaxResults r;
  try {
    r.schema_version = manifest.at("schema_version").get<std::string>();
  } catch (const json::exception& e) {
    corrupt(kManifest, e.what());
  }
  int major = -1;
  try {
    major = std::stoi(r.schema_version.substr(0, r.schema_version.find('.')));
  } catch (const std::exception&) {
    corrupt(kManifest, "unparseable schema_version '" + r.schema_version + "'");
  }
  const int supported = std::stoi(std::string(kSchemaVersion).substr(0, 1));
  if (major != supported)
    throw Error(Errc::unsupported_version, "archive schema_version " + r.schema_version +
                                               " is not supported (expected " + kSchemaVersion + ")");

  std::size_t n = 0, d = 0;
  try {
    const auto kind = manifest.at("task").get<std::string>();
    r.task = kind == "classification" ? Task::classification(manifest.at("n_classes").get<int>())
                                      : Task::regression();
    r.class_labels = manifest.at("class_labels").get<std::vector<std::string>>();
    r.resolved_kernel = kernel_from_json(manifest.at("kernel"));
    r.bw_method_used = parse_bandwidth_method(manifest.at("bw_method").get<std::string>());
    r.settings = settings_from_json(manifest.at("settings"));
    for (auto it = manifest.at("global_metrics").begin(); it != manifest.at("global_metrics").end(); ++it)
      r.global_metrics[it.key()] = read_double(it.value());
    const auto& ds = manifest.at("dataset");
    r.dataset.rows = ds.at("rows").get<Eigen::Index>();
    r.dataset.features = ds.at("features").get<Eigen::Index>();
    r.dataset.feature_names = ds.at("feature_names").get<std::vector<std::string>>();
    r.dataset.content_hash = ds.at("content_hash").get<std::string>();
    n = static_cast<std::size_t>(r.dataset.rows);
    d = r.dataset.feature_names.size();
    if (static_cast<Eigen::Index>(d) != r.dataset.features) corrupt(kManifest, "feature count mismatch");
  } catch (const json::exception& e) {
    corrupt(kManifest, e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::integrity) throw;
    corrupt(kManifest, e.what());
  }

  const auto fits = table(kLocalFits, member(kLocalFits), n, kLocalFitColumns.size());
  if (fits[0] != kLocalFitColumns) corrupt(kLocalFits, "unexpected header");
  const auto shap = table(kShap, member(kShap), n, d);
  if (shap[0] != r.dataset.feature_names) corrupt(kShap, "header does not match feature names");
  const auto base = table(kBase, member(kBase), n, 1);

  r.coords.resize(static_cast<Eigen::Index>(n), 2);
  r.local_fits.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const csv::Row& row = fits[i + 1];
    LocalFit& lf = r.local_fits[i];
    const auto ii = static_cast<Eigen::Index>(i);
    if (row[0] != std::to_string(i)) corrupt(kLocalFits, "location column out of order at row " + std::to_string(i));
    lf.location = ii;
    lf.bandwidth_used = number(kLocalFits, row[1]);
    lf.effective_n = number(kLocalFits, row[2]);
    try {
      lf.selected.learner = parse_learner(row[3]);
      lf.selected.hyper = hyperparameters_from_json(lf.selected.learner, json::parse(row[4]));
      lf.selected.seed = std::stoull(row[8]);
      lf.explained_class = std::stoi(row[12]);
    } catch (const std::exception& e) {
      corrupt(kLocalFits, std::string("row ") + std::to_string(i) + ": " + e.what());
    }
    lf.prediction = number(kLocalFits, row[5]);
    lf.local_score = number(kLocalFits, row[6]);
    lf.expanded = row[7] == "1";
    r.coords(ii, 0) = number(kLocalFits, row[9]);
    r.coords(ii, 1) = number(kLocalFits, row[10]);
    lf.explained_output = number(kLocalFits, row[11]);
    lf.explain_mode = row[13] == "exact" ? ExplainMode::exact : ExplainMode::sampled;
    std::vector<double> probs;
    if (!row[14].empty()) {
      std::stringstream ss(row[14]);
      std::string part;
      while (std::getline(ss, part, ';')) probs.push_back(number(kLocalFits, part));
    }
    lf.probabilities = Eigen::Map<const Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size()));

    const csv::Row& srow = shap[i + 1];
    if (!base[i + 1][0].empty()) {
      lf.base_value = number(kBase, base[i + 1][0]);
      lf.shap.resize(static_cast<Eigen::Index>(d));
      for (std::size_t j = 0; j < d; ++j) lf.shap(static_cast<Eigen::Index>(j)) = number(kShap, srow[j]);
    }

    const std::string name = model_member(i);
    try {
      lf.model = model_from_json(json::parse(member(name)));
    } catch (const json::exception& e) {
      corrupt(name, e.what());
    } catch (const Error& e) {
      if (e.code() == Errc::integrity && std::string(e.what()).find(name) != std::string::npos) throw;
      corrupt(name, e.what());
    }
    if (!(lf.model.config == lf.selected)) corrupt(name, "model config differs from local_fits.csv");
  }
  return r;
}

void save(const GalaxResults& results, const std::filesystem::path& path) {
  const std::string bytes = archive_bytes(results);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write archive " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "failed writing archive " + path.string());
}

GalaxResults load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot read archive " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return results_from_archive(buf.str());
}

}  // namespace galax
