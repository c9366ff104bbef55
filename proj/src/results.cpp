#include "galax/results.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "galax/csv.hpp"
#include "galax/error.hpp"

namespace galax {

namespace {

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool same(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (!same(a(i), b(i))) return false;
  return true;
}

class Fnv1a {
 public:
  void add(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int s = 0; s < 64; s += 8) byte(static_cast<unsigned char>((bits >> s) & 0xff));
  }
  void add(const std::string& s) {
    for (char c : s) byte(static_cast<unsigned char>(c));
    byte(0);
  }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h_));
    return buf;
  }

 private:
  void byte(unsigned char b) {
    h_ ^= b;
    h_ *= 0x100000001b3ULL;
  }
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace

DatasetFingerprint fingerprint(const Dataset& dataset) {
  DatasetFingerprint fp;
  fp.rows = dataset.size();
  fp.features = dataset.n_features();
  fp.feature_names = dataset.feature_names;
  Fnv1a h;
  for (const auto& name : dataset.feature_names) h.add(name);
  for (Eigen::Index i = 0; i < dataset.size(); ++i) {
    h.add(dataset.coords(i, 0));
    h.add(dataset.coords(i, 1));
    for (Eigen::Index j = 0; j < dataset.n_features(); ++j) h.add(dataset.X(i, j));
    h.add(dataset.y(i));
  }
  fp.content_hash = h.hex();
  return fp;
}

bool equal(const LocalFit& a, const LocalFit& b) {
  return a.location == b.location && same(a.bandwidth_used, b.bandwidth_used) &&
         same(a.effective_n, b.effective_n) && a.expanded == b.expanded &&
         a.selected == b.selected && same(a.prediction, b.prediction) &&
         same(a.probabilities, b.probabilities) && same(a.local_score, b.local_score) &&
         same(a.shap, b.shap) && same(a.base_value, b.base_value) &&
         same(a.explained_output, b.explained_output) && a.explained_class == b.explained_class &&
         a.explain_mode == b.explain_mode && a.model == b.model;
}

bool equal(const GalaxResults& a, const GalaxResults& b) {
  if (a.schema_version != b.schema_version || !(a.task == b.task) ||
      a.class_labels != b.class_labels || !(a.resolved_kernel == b.resolved_kernel) ||
      a.bw_method_used != b.bw_method_used || !same_settings(a.settings, b.settings) ||
      !(a.dataset == b.dataset) || a.local_fits.size() != b.local_fits.size() ||
      a.global_metrics.size() != b.global_metrics.size())
    return false;
  if (a.coords.rows() != b.coords.rows() || !(a.coords.array() == b.coords.array()).all()) return false;
  for (const auto& [key, value] : a.global_metrics) {
    const auto it = b.global_metrics.find(key);
    if (it == b.global_metrics.end() || !same(value, it->second)) return false;
  }
  for (std::size_t i = 0; i < a.local_fits.size(); ++i)
    if (!equal(a.local_fits[i], b.local_fits[i])) return false;
  return true;
}

double RegressionMetrics::r2_value() const {
  if (!r2) throw Error(Errc::metric_undefined, "r2 is undefined for a constant target");
  return *r2;
}

RegressionMetrics regression_metrics(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  if (y.size() != yhat.size() || y.size() < 2)
    throw Error(Errc::shape_mismatch, "regression metrics need equal lengths >= 2");
  RegressionMetrics m;
  const double sse = (y - yhat).squaredNorm();
  m.rmse = std::sqrt(sse / static_cast<double>(y.size()));
  const double sst = (y.array() - y.mean()).square().sum();
  if (sst > 0.0) m.r2 = 1.0 - sse / sst;
  return m;
}

ClassificationMetrics classification_metrics(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                                             int n_classes) {
  if (y.size() != yhat.size() || y.size() == 0)
    throw Error(Errc::shape_mismatch, "classification metrics need equal non-empty lengths");
  if (n_classes < 2) throw Error(Errc::invalid_input, "classification metrics need >= 2 classes");
  const auto c = static_cast<std::size_t>(n_classes);
  std::vector<double> tp(c, 0.0), predicted(c, 0.0), actual(c, 0.0);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) < 0 || y(i) >= n_classes || yhat(i) < 0 || yhat(i) >= n_classes)
      throw Error(Errc::invalid_input, "classification metrics: label out of range");
    const auto t = static_cast<std::size_t>(y(i)), p = static_cast<std::size_t>(yhat(i));
    actual[t] += 1;
    predicted[p] += 1;
    if (t == p) tp[t] += 1;
  }
  ClassificationMetrics m;
  m.accuracy = std::accumulate(tp.begin(), tp.end(), 0.0) / static_cast<double>(y.size());

  auto scores = [&](std::size_t k, double& precision, double& recall, double& f1) {
    precision = predicted[k] > 0 ? tp[k] / predicted[k] : 0.0;
    recall = actual[k] > 0 ? tp[k] / actual[k] : 0.0;
    f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  };
  for (std::size_t k = 0; k < c; ++k)
    if (predicted[k] == 0 && (n_classes > 2 || k == 1)) m.unpredicted_classes.push_back(static_cast<int>(k));

  if (n_classes == 2) {
    scores(1, m.precision, m.recall, m.f1);
    return m;
  }
  for (std::size_t k = 0; k < c; ++k) {
    double p, r, f;
    scores(k, p, r, f);
    m.precision += p;
    m.recall += r;
    m.f1 += f;
  }
  m.precision /= n_classes;
  m.recall /= n_classes;
  m.f1 /= n_classes;
  return m;
}

std::map<std::string, double> global_metrics(const Task& task, const Eigen::VectorXd& y,
                                             const Eigen::VectorXd& yhat) {
  if (task.is_classification()) {
    const ClassificationMetrics m = classification_metrics(y, yhat, task.n_classes);
    return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
  }
  const RegressionMetrics m = regression_metrics(y, yhat);
  return {{"r2", m.r2.value_or(std::nan(""))}, {"rmse", m.rmse}};
}

Summary summarize(const GalaxResults& results) {
  Summary s;
  s.task = results.task;
  s.n_locations = static_cast<Eigen::Index>(results.local_fits.size());
  s.global_metrics = results.global_metrics;
  s.kernel = results.resolved_kernel;
  s.bw_method = results.bw_method_used;

  std::vector<double> scores;
  std::map<std::pair<std::string, std::string>, int> counts;
  for (const LocalFit& lf : results.local_fits) {
    scores.push_back(lf.local_score);
    if (lf.expanded) ++s.expanded_locations;
    ++counts[{to_string(lf.selected.learner),
              canonical_json(hyperparameters_to_json(lf.selected.learner, lf.selected.hyper))}];
  }
  if (!scores.empty()) {
    std::sort(scores.begin(), scores.end());
    const std::size_t m = scores.size();
    s.local_score_min = scores.front();
    s.local_score_max = scores.back();
    s.local_score_median = m % 2 ? scores[m / 2] : 0.5 * (scores[m / 2 - 1] + scores[m / 2]);
  }
  for (const auto& [key, count] : counts) s.selections.push_back({key.first, key.second, count});
  std::stable_sort(s.selections.begin(), s.selections.end(),
                   [](const SelectionCount& a, const SelectionCount& b) { return a.count > b.count; });
  return s;
}

std::string Summary::text() const {
  std::ostringstream out;
  out << "Task: " << to_string(task.kind);
  if (task.is_classification()) out << " (" << task.n_classes << " classes)";
  out << "\nLocations: " << n_locations << "\n";
  out << "Kernel: " << to_string(kernel.function) << ", " << to_string(kernel.mode)
      << (kernel.geodesic ? ", geodesic" : "") << "\n";
  out << "Bandwidth: ";
  if (kernel.bandwidth) {
    if (kernel.mode == BandwidthMode::adaptive)
      out << kernel.neighbors() << " nearest neighbours";
    else
      out << csv::format_double(*kernel.bandwidth);
  } else {
    out << "unset";
  }
  out << " (method: " << to_string(bw_method) << ")\n";
  out << "Expanded neighbourhoods: " << expanded_locations << "\n\nGlobal metrics\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& [key, value] : global_metrics) out << "  " << std::left << std::setw(10) << key << value << "\n";
  out << "\nLocal CV score\n";
  out << "  min       " << local_score_min << "\n";
  out << "  median    " << local_score_median << "\n";
  out << "  max       " << local_score_max << "\n";
  out << "\nModel selection\n";
  for (const auto& sel : selections)
    out << "  " << std::right << std::setw(5) << sel.count << "  " << sel.learner << " " << sel.hyperparameters << "\n";
  return out.str();
}

nlohmann::json Summary::to_json() const {
  nlohmann::json sel = nlohmann::json::array();
  for (const auto& s : selections)
    sel.push_back({{"learner", s.learner},
                   {"hyperparameters", nlohmann::json::parse(s.hyperparameters)},
                   {"count", s.count}});
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [k, v] : global_metrics) metrics[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  return {{"task", to_string(task.kind)},
          {"n_locations", n_locations},
          {"global_metrics", metrics},
          {"local_score", {{"min", local_score_min}, {"median", local_score_median}, {"max", local_score_max}}},
          {"selections", sel},
          {"kernel",
           {{"function", to_string(kernel.function)},
            {"mode", to_string(kernel.mode)},
            {"bandwidth", kernel.bandwidth ? nlohmann::json(*kernel.bandwidth) : nlohmann::json(nullptr)},
            {"geodesic", kernel.geodesic}}},
          {"bw_method", to_string(bw_method)},
          {"expanded_locations", expanded_locations}};
}

ShapRecord shap_for_location(const GalaxResults& results, Eigen::Index location,
                             const Eigen::VectorXd& feature_values) {
  const auto n = static_cast<Eigen::Index>(results.local_fits.size());
  if (location < 0 || location >= n)
    throw Error(Errc::location_range, "location " + std::to_string(location) + " outside [0, " +
                                          std::to_string(n) + ")");
  const LocalFit& lf = results.local_fits[static_cast<std::size_t>(location)];
  if (!lf.explained())
    throw Error(Errc::invalid_input, "location " + std::to_string(location) + " has no explanation");
  ShapRecord rec;
  rec.location = location;
  rec.base_value = lf.base_value;
  rec.prediction = lf.prediction;
  rec.explained_output = lf.explained_output;
  rec.explained_class = lf.explained_class;
  rec.selected = lf.selected;
  rec.effective_n = lf.effective_n;
  const auto& names = results.feature_names();
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    rec.contributions.push_back(
        {names[j], lf.shap(jj), feature_values.size() == lf.shap.size() ? feature_values(jj) : std::nan("")});
  }
  std::stable_sort(rec.contributions.begin(), rec.contributions.end(),
                   [](const ShapContribution& a, const ShapContribution& b) {
                     return std::abs(a.phi) > std::abs(b.phi);
                   });
  return rec;
}

}  // namespace galax
