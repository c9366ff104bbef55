#include "galax/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "galax/error.hpp"
#include "galax/parallel.hpp"
#include "galax/random.hpp"

namespace galax {

namespace {

constexpr int kSearchBudgetCap = 6;
constexpr int kBandwidthCandidates = 8;
constexpr double kMinExpansionWeight = 1e-6;
constexpr std::uint64_t kExplainStream = 0xe3b1a5c7d9f20468ULL;
constexpr std::uint64_t kSearchStream = 0x7a41c2e98b0d3f15ULL;

std::uint64_t location_seed(const GalaxConfig& config, Eigen::Index i) {
  return stable_hash(config.master_seed, static_cast<std::uint64_t>(i));
}

// Same search seed at every location.
AutoMLSettings local_settings(const GalaxConfig& config) {
  AutoMLSettings s = config.automl;
  s.seed = stable_hash(config.master_seed, kSearchStream);
  return s;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (!(hi > lo) || count < 2) return {lo};
  std::vector<double> out;
  const double a = std::log(lo), b = std::log(hi);
  for (int k = 0; k < count; ++k) out.push_back(std::exp(a + (b - a) * k / (count - 1)));
  out.front() = lo;
  out.back() = hi;
  return out;
}

Eigen::VectorXd local_prediction_row(const FittedModel& model, const Eigen::MatrixXd& row,
                                     double& label_or_value) {
  const Prediction p = predict(model, row);
  label_or_value = p.value(0);
  return model.task.is_classification() ? Eigen::VectorXd(p.proba.row(0).transpose())
                                        : Eigen::VectorXd();
}

}  // namespace

Neighborhood local_neighborhood(Eigen::Index focal, const Coords& coords,
                                const KernelSpec& kernel, double weight_floor,
                                int min_local_samples, bool exclude_focal) {
  const Eigen::Index n = coords.rows();
  Neighborhood hood;
  hood.bandwidth = row_bandwidth(focal, coords, kernel);
  const Eigen::VectorXd dist = distance_row<double>(focal, coords, kernel.geodesic);
  Eigen::VectorXd w(n);
  for (Eigen::Index j = 0; j < n; ++j) w(j) = kernel_weight(dist(j), hood.bandwidth, kernel.function);

  for (Eigen::Index j = 0; j < n; ++j)
    if (w(j) > weight_floor && !(exclude_focal && j == focal)) hood.rows.push_back(j);

  std::vector<double> weights;
  if (static_cast<int>(hood.rows.size()) < min_local_samples) {
    hood.expanded = true;
    std::vector<Eigen::Index> order;
    if (!exclude_focal) order.push_back(focal);
    for (Eigen::Index j : neighbor_order(focal, dist)) order.push_back(j);
    order.resize(std::min(order.size(), static_cast<std::size_t>(min_local_samples)));
    std::sort(order.begin(), order.end());
    hood.rows = std::move(order);
    const double floor = std::max(weight_floor, kMinExpansionWeight);
    for (Eigen::Index j : hood.rows) weights.push_back(std::max(w(j), floor));
  } else {
    for (Eigen::Index j : hood.rows) weights.push_back(w(j));
  }
  hood.weights = Eigen::Map<const Eigen::VectorXd>(weights.data(), static_cast<Eigen::Index>(weights.size()));
  return hood;
}

std::vector<Eigen::Index> background_rows(const Neighborhood& hood, int size) {
  std::vector<std::size_t> order(hood.rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return hood.weights(static_cast<Eigen::Index>(a)) > hood.weights(static_cast<Eigen::Index>(b));
  });
  order.resize(std::min(order.size(), static_cast<std::size_t>(std::max(size, 0))));
  std::vector<Eigen::Index> rows;
  for (std::size_t k : order) rows.push_back(hood.rows[k]);
  return rows;
}

int isa_distance_to_k(const Coords& coords, double distance, int min_local_samples,
                      bool geodesic, bool* clamped) {
  const Eigen::Index n = coords.rows();
  const Eigen::MatrixXd dist = distance_matrix(coords, geodesic);
  std::vector<int> counts(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    int c = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && dist(i, j) <= distance) ++c;
    counts[static_cast<std::size_t>(i)] = c;
  }
  std::sort(counts.begin(), counts.end());
  const int median = counts[static_cast<std::size_t>((n - 1) / 2)];
  const int upper = static_cast<int>(n - 1);
  const int k = std::clamp(median, std::min(min_local_samples, upper), upper);
  if (clamped) *clamped = k == upper;
  return k;
}

BandwidthResolution resolve_bandwidth(const Dataset& dataset, const GalaxConfig& config) {
  BandwidthResolution res;
  res.kernel = config.kernel;
  res.method = config.resolved_bw_method(dataset.task);
  if (res.method == BandwidthMethod::preset) {
    res.kernel.validate(dataset.size());
    return res;
  }
  if (res.method == BandwidthMethod::performance) return search_bandwidth_performance(dataset, config);

  res.scan = isa_scan(dataset.y, dataset.coords, config.isa, config.kernel.geodesic);
  if (config.kernel.mode == BandwidthMode::fixed) {
    res.kernel.bandwidth = res.scan->selected_distance;
  } else {
    res.kernel.bandwidth = isa_distance_to_k(dataset.coords, res.scan->selected_distance,
                                             config.automl.min_local_samples,
                                             config.kernel.geodesic, &res.clamped);
  }
  res.kernel.validate(dataset.size());
  return res;
}

std::vector<double> bandwidth_candidates(const Dataset& dataset, const GalaxConfig& config) {
  const Eigen::Index n = dataset.size();
  if (config.kernel.mode == BandwidthMode::adaptive) {
    const double hi = static_cast<double>(n - 1);
    const double lo = std::min(static_cast<double>(std::max(2, config.automl.min_local_samples)), hi);
    std::vector<double> ks;
    for (double v : log_spaced(lo, hi, kBandwidthCandidates)) {
      const double k = std::round(v);
      if (ks.empty() || k > ks.back()) ks.push_back(k);
    }
    return ks;
  }
  const Eigen::MatrixXd dist = distance_matrix(dataset.coords, config.kernel.geodesic);
  return log_spaced(max_nearest_neighbor_distance(dist), dist.maxCoeff(), kBandwidthCandidates);
}

GalaxConfig reduced_config(const GalaxConfig& config) {
  GalaxConfig reduced = config;
  reduced.automl.budget = std::min(config.automl.budget, kSearchBudgetCap);
  reduced.explain.enabled = false;
  return reduced;
}

double leave_focal_out_prediction(const Dataset& dataset, const KernelSpec& kernel,
                                  const GalaxConfig& config, Eigen::Index focal) {
  const Neighborhood hood = local_neighborhood(focal, dataset.coords, kernel, config.weight_floor,
                                               config.automl.min_local_samples, true);
  const SearchOutcome outcome =
      search(dataset.X(hood.rows, Eigen::all), dataset.y(hood.rows), hood.weights, dataset.task,
             local_settings(config));
  return predict(outcome.model, dataset.X.row(focal)).value(0);
}

Eigen::VectorXd leave_focal_out_predictions(const Dataset& dataset, const KernelSpec& kernel,
                                            const GalaxConfig& config) {
  Eigen::VectorXd out(dataset.size());
  parallel_for(static_cast<std::size_t>(dataset.size()), config.threads, [&](std::size_t i) {
    const auto focal = static_cast<Eigen::Index>(i);
    try {
      out(focal) = leave_focal_out_prediction(dataset, kernel, config, focal);
    } catch (const Error& e) {
      throw Error(e.code(), "location " + std::to_string(i) + ": " + e.what());
    }
  });
  return out;
}

double leave_focal_out_objective(const Dataset& dataset, const KernelSpec& kernel,
                                 const GalaxConfig& config) {
  const Eigen::VectorXd yhat = leave_focal_out_predictions(dataset, kernel, config);
  return weighted_score(config.automl.resolved_metric(dataset.task), dataset.y, yhat,
                        Eigen::VectorXd::Ones(dataset.size()));
}

BandwidthResolution search_bandwidth_performance(const Dataset& dataset, const GalaxConfig& config) {
  dataset.validate(config.automl.min_local_samples);
  config.validate(dataset.task);
  BandwidthResolution res;
  res.kernel = config.kernel;
  res.method = BandwidthMethod::performance;
  const GalaxConfig reduced = reduced_config(config);

  const std::vector<double> grid = bandwidth_candidates(dataset, config);
  std::optional<std::size_t> best;
  for (double b : grid) {
    BandwidthCandidate cand{b, std::nullopt, {}};
    KernelSpec spec = config.kernel;
    spec.bandwidth = b;
    if (grid.size() == 1) {
      res.candidates.push_back(cand);
      best = 0;
      break;
    }
    try {
      cand.objective = leave_focal_out_objective(dataset, spec, reduced);
    } catch (const Error& e) {
      cand.error = e.what();
    }
    if (cand.objective && (!best || *cand.objective > *res.candidates[*best].objective))
      best = res.candidates.size();
    res.candidates.push_back(std::move(cand));
  }
  if (!best)
    throw Error(Errc::bandwidth_search_failed,
                "bandwidth search: no feasible candidate" +
                    (res.candidates.empty() ? std::string{} : " (" + res.candidates.back().error + ")"));
  res.kernel.bandwidth = res.candidates[*best].bandwidth;
  res.kernel.validate(dataset.size());
  return res;
}

GalaxResults fit(const Dataset& dataset, const GalaxConfig& config) {
  dataset.validate(config.automl.min_local_samples);
  config.validate(dataset.task);
  validate_coords(dataset.coords);

  const BandwidthResolution bw = resolve_bandwidth(dataset, config);
  const Eigen::Index n = dataset.size();

  GalaxResults results;
  results.task = dataset.task;
  results.class_labels = dataset.class_labels;
  results.resolved_kernel = bw.kernel;
  results.bw_method_used = bw.method;
  results.settings = config;
  results.dataset = fingerprint(dataset);
  results.coords = dataset.coords;
  results.local_fits.resize(static_cast<std::size_t>(n));

  parallel_for(static_cast<std::size_t>(n), config.threads, [&](std::size_t slot) {
    const auto i = static_cast<Eigen::Index>(slot);
    try {
      const Neighborhood hood = local_neighborhood(i, dataset.coords, bw.kernel, config.weight_floor,
                                                   config.automl.min_local_samples);
      const Eigen::MatrixXd X_local = dataset.X(hood.rows, Eigen::all);
      SearchOutcome outcome = search(X_local, dataset.y(hood.rows), hood.weights, dataset.task,
                                     local_settings(config));

      LocalFit lf;
      lf.location = i;
      lf.bandwidth_used = hood.bandwidth;
      lf.effective_n = hood.effective_n();
      lf.expanded = hood.expanded;
      lf.selected = outcome.best_config;
      lf.local_score = outcome.best_score;
      lf.probabilities = local_prediction_row(outcome.model, dataset.X.row(i), lf.prediction);

      if (config.explain.enabled) {
        const std::vector<Eigen::Index> bg = background_rows(hood, config.explain.background_size);
        const Explanation e =
            explain_local(outcome.model, dataset.X.row(i).transpose(), dataset.X(bg, Eigen::all),
                          config.explain, stable_hash(location_seed(config, i), kExplainStream));
        lf.shap = e.phi;
        lf.base_value = e.base_value;
        lf.explained_output = e.target;
        lf.explained_class = e.target_class;
        lf.explain_mode = e.mode_used;
      }
      lf.model = std::move(outcome.model);
      results.local_fits[slot] = std::move(lf);
    } catch (const Error& e) {
      throw Error(e.code(), "location " + std::to_string(i) + ": " + e.what());
    }
  });

  Eigen::VectorXd yhat(n);
  for (Eigen::Index i = 0; i < n; ++i) yhat(i) = results.local_fits[static_cast<std::size_t>(i)].prediction;
  results.global_metrics = global_metrics(dataset.task, dataset.y, yhat);
  return results;
}

SpatialPrediction predict(const GalaxResults& results, const Coords& new_coords,
                          const Eigen::MatrixXd& new_X) {
  const auto d = static_cast<Eigen::Index>(results.feature_names().size());
  if (new_X.cols() != d)
    throw Error(Errc::shape_mismatch, "predict: expected " + std::to_string(d) + " features, got " +
                                          std::to_string(new_X.cols()));
  if (new_coords.rows() != new_X.rows())
    throw Error(Errc::shape_mismatch, "predict: coordinates and features disagree on row count");
  if (results.local_fits.empty() || results.coords.rows() != static_cast<Eigen::Index>(results.local_fits.size()))
    throw Error(Errc::invalid_input, "predict: results hold no local models");

  const Eigen::Index m = new_X.rows();
  const int k = results.task.is_classification() ? results.task.n_classes : 0;
  SpatialPrediction out;
  out.prediction.value.resize(m);
  if (k > 0) out.prediction.proba.resize(m, k);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Vector2d p = new_coords.row(r).transpose();
    Eigen::Index nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < results.coords.rows(); ++j) {
      const double dj = distance<double>(p, results.coords.row(j).transpose(), results.resolved_kernel.geodesic);
      if (dj < best) {
        best = dj;
        nearest = j;
      }
    }
    out.nearest.push_back(nearest);
    const Prediction local = predict(results.local_fits[static_cast<std::size_t>(nearest)].model, new_X.row(r));
    out.prediction.value(r) = local.value(0);
    if (k > 0) out.prediction.proba.row(r) = local.proba.row(0);
  }
  return out;
}

}  // namespace galax
