#include <doctest.h>

#include <cmath>
#include <numbers>

#include "galax/engine.hpp"
#include "galax/random.hpp"
#include "support.hpp"

using namespace galax;
using galax::test::error_code;
using galax::test::random_dataset;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

GalaxConfig quick_config() {
  GalaxConfig c;
  c.automl.candidates = {Learner::decision_tree, Learner::gradient_boosted_trees};
  c.automl.budget = 4;
  c.automl.min_local_samples = 10;
  return c;
}

Dataset two_cluster_dataset(std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  const Index per = 20;
  ds.coords.resize(2 * per, 2);
  ds.X.resize(2 * per, 1);
  ds.y.resize(2 * per);
  for (Index i = 0; i < 2 * per; ++i) {
    const int k = i < per ? 0 : 1;
    const double r = std::sqrt(rng.uniform()), a = 2 * std::numbers::pi * rng.uniform();
    ds.coords.row(i) << k * 20 + r * std::cos(a), r * std::sin(a);
    ds.X(i, 0) = rng.uniform();
    ds.y(i) = k + 0.05 * rng.normal();
  }
  ds.feature_names = {"f"};
  ds.task = Task::regression();
  return ds;
}

}  // namespace

TEST_CASE("preset bandwidth bypasses selection") {
  const Dataset ds = random_dataset(1, 30, 2, [](double u, double, const auto& x) { return u + x(0); });
  GalaxConfig c = quick_config();
  c.kernel.mode = BandwidthMode::fixed;
  c.kernel.bandwidth = 3.0;
  const BandwidthResolution r = resolve_bandwidth(ds, c);
  CHECK(*r.kernel.bandwidth == 3.0);
  CHECK(r.method == BandwidthMethod::preset);
  CHECK_FALSE(r.scan.has_value());
  CHECK(r.candidates.empty());
}

TEST_CASE("fixed ISA bandwidth is the scan's distance") {
  const Dataset ds = two_cluster_dataset(2);
  GalaxConfig c = quick_config();
  c.kernel.mode = BandwidthMode::fixed;
  c.bw_method = BandwidthMethod::isa;
  const BandwidthResolution r = resolve_bandwidth(ds, c);
  REQUIRE(r.scan.has_value());
  CHECK(*r.kernel.bandwidth == isa_scan(ds.y, ds.coords).selected_distance);
  CHECK(*r.kernel.bandwidth >= 1.0);
  CHECK(*r.kernel.bandwidth <= 4.0);
}

TEST_CASE("ISA distance to neighbour count on a lattice") {
  Coords c(400, 2);
  for (Index i = 0; i < 400; ++i) c.row(i) << static_cast<double>(i % 20), static_cast<double>(i / 20);
  bool clamped = false;
  CHECK(isa_distance_to_k(c, 2.1, 5, false, &clamped) == 12);
  CHECK_FALSE(clamped);
  CHECK(isa_distance_to_k(c, 2.1, 30, false, &clamped) == 30);
  CHECK(isa_distance_to_k(c, 1000.0, 5, false, &clamped) == 399);
  CHECK(clamped);
}

TEST_CASE("single bandwidth candidate is returned unevaluated") {
  const Dataset ds = random_dataset(3, 21, 2, [](double u, double, const auto& x) { return u * x(0); });
  GalaxConfig c = quick_config();
  c.automl.min_local_samples = 20;
  c.bw_method = BandwidthMethod::performance;
  const BandwidthResolution r = resolve_bandwidth(ds, c);
  REQUIRE(r.candidates.size() == 1);
  CHECK_FALSE(r.candidates[0].objective.has_value());
  CHECK(*r.kernel.bandwidth == 20.0);
}

TEST_CASE("performance search picks the exhaustive maximum") {
  const Dataset ds = random_dataset(4, 40, 2, [](double u, double, const auto& x) { return (2 * u - 1) * x(0) + x(1); });
  GalaxConfig c = quick_config();
  c.bw_method = BandwidthMethod::performance;
  const BandwidthResolution r = resolve_bandwidth(ds, c);
  const std::vector<double> grid = bandwidth_candidates(ds, c);
  REQUIRE(grid.size() == 8);
  CHECK(grid.front() == 10.0);
  CHECK(grid.back() == 39.0);
  double best = -INFINITY, best_b = 0;
  for (double b : grid) {
    KernelSpec k = c.kernel;
    k.bandwidth = b;
    const double obj = leave_focal_out_objective(ds, k, reduced_config(c));
    if (obj > best) {
      best = obj;
      best_b = b;
    }
  }
  CHECK(*r.kernel.bandwidth == best_b);
  double reported = -INFINITY;
  for (const auto& cand : r.candidates) reported = std::max(reported, cand.objective.value_or(-INFINITY));
  CHECK(reported == best);
}

TEST_CASE("homogeneous data favours the widest bandwidth") {
  int widest = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Dataset ds = random_dataset(10 + seed, 50, 2, [](double, double, const auto& x) { return x(0) > 0.5 ? 1.0 : 0.0; });
    GalaxConfig c = quick_config();
    c.automl.candidates = {Learner::decision_tree};
    c.bw_method = BandwidthMethod::performance;
    c.master_seed = seed;
    const BandwidthResolution r = resolve_bandwidth(ds, c);
    widest += *r.kernel.bandwidth == bandwidth_candidates(ds, c).back();
  }
  CHECK(widest >= 4);
}

TEST_CASE("neighbourhoods") {
  const Dataset ds = random_dataset(5, 40, 1, [](double, double, const auto& x) { return x(0); });
  KernelSpec k{KernelFunction::bisquare, BandwidthMode::adaptive, 8.0, false};
  const Neighborhood h = local_neighborhood(3, ds.coords, k, 1e-6, 5);
  CHECK(h.rows.size() == 8);
  CHECK_FALSE(h.expanded);
  CHECK(std::is_sorted(h.rows.begin(), h.rows.end()));

  const Neighborhood wide = local_neighborhood(3, ds.coords, k, 1e-6, 15);
  CHECK(wide.rows.size() == 15);
  CHECK(wide.expanded);
  CHECK(wide.weights.minCoeff() > 0.0);

  const Neighborhood lfo = local_neighborhood(3, ds.coords, k, 1e-6, 5, true);
  CHECK(std::find(lfo.rows.begin(), lfo.rows.end(), 3) == lfo.rows.end());

  const std::vector<Index> bg = background_rows(wide, 4);
  REQUIRE(bg.size() == 4);
  CHECK(std::find(bg.begin(), bg.end(), 3) != bg.end());
}

TEST_CASE("degenerate bandwidth selects one config everywhere") {
  const Dataset ds = random_dataset(6, 30, 2, [](double, double, const auto& x) { return std::sin(4 * x(0)) + x(1); });
  GalaxConfig c = quick_config();
  c.kernel.function = KernelFunction::gaussian;
  c.kernel.mode = BandwidthMode::fixed;
  c.kernel.bandwidth = 1e9 * distance_matrix(ds.coords, false).maxCoeff();
  c.explain.enabled = false;
  const GalaxResults r = fit(ds, c);
  for (const LocalFit& lf : r.local_fits) CHECK(lf.selected == r.local_fits[0].selected);
}

TEST_CASE("too few rows are rejected") {
  const Dataset ds = random_dataset(7, 15, 2, [](double, double, const auto& x) { return x(0); });
  CHECK(error_code([&] { fit(ds, GalaxConfig{}); }) == Errc::too_few_samples);
}

TEST_CASE("fit output and thread independence") {
  const Dataset ds = random_dataset(8, 36, 3, [](double u, double v, const auto& x) { return u * x(0) - v * x(1) + x(2); });
  GalaxConfig c = quick_config();
  c.kernel.bandwidth = 15;
  const GalaxResults a = fit(ds, c);
  c.threads = 4;
  const GalaxResults b = fit(ds, c);
  CHECK(equal(a, b));
  REQUIRE(a.local_fits.size() == 36);
  for (std::size_t i = 0; i < a.local_fits.size(); ++i) {
    const LocalFit& lf = a.local_fits[i];
    CHECK(lf.location == static_cast<Index>(i));
    CHECK(lf.shap.size() == 3);
    CHECK(std::abs(lf.shap.sum() + lf.base_value - lf.prediction) <= 1e-9);
    CHECK(lf.prediction == predict(lf.model, ds.X.row(static_cast<Index>(i))).value(0));
    CHECK(lf.effective_n > 0);
  }
  CHECK(a.global_metrics.count("r2") == 1);
  CHECK(a.global_metrics.count("rmse") == 1);
  CHECK(a.bw_method_used == BandwidthMethod::preset);
}

TEST_CASE("spatial prediction uses the nearest location's model") {
  const Dataset ds = random_dataset(9, 30, 2, [](double u, double, const auto& x) { return u * x(0) + x(1); });
  GalaxConfig c = quick_config();
  c.kernel.bandwidth = 12;
  c.explain.enabled = false;
  const GalaxResults r = fit(ds, c);

  SpatialPrediction same = predict(r, ds.coords.topRows(5), ds.X.topRows(5));
  for (Index j = 0; j < 5; ++j) {
    CHECK(same.nearest[static_cast<std::size_t>(j)] == j);
    CHECK(same.prediction.value(j) == r.local_fits[static_cast<std::size_t>(j)].prediction);
  }

  Rng rng(99);
  Coords pts(20, 2);
  MatrixXd X(20, 2);
  for (Index i = 0; i < 20; ++i) {
    pts.row(i) << rng.uniform(), rng.uniform();
    X.row(i) << rng.uniform(), rng.uniform();
  }
  const SpatialPrediction p = predict(r, pts, X);
  for (Index i = 0; i < 20; ++i) {
    Index best = 0;
    for (Index j = 1; j < ds.size(); ++j)
      if ((ds.coords.row(j) - pts.row(i)).norm() < (ds.coords.row(best) - pts.row(i)).norm()) best = j;
    CHECK(p.nearest[static_cast<std::size_t>(i)] == best);
    CHECK(p.prediction.value(i) == predict(r.local_fits[static_cast<std::size_t>(best)].model, X.row(i)).value(0));
  }
  CHECK(error_code([&] { predict(r, pts, MatrixXd::Zero(20, 3)); }) == Errc::shape_mismatch);
}

TEST_CASE("classification fit explains the predicted class") {
  Dataset ds = random_dataset(10, 40, 2, [](double u, double, const auto& x) { return x(0) > u ? 1.0 : 0.0; }, 0.0);
  ds.task = Task::classification(2);
  ds.class_labels = {"no", "yes"};
  GalaxConfig c = quick_config();
  c.kernel.bandwidth = 20;
  const GalaxResults r = fit(ds, c);
  CHECK(r.global_metrics.count("f1") == 1);
  for (const LocalFit& lf : r.local_fits) {
    CHECK(lf.probabilities.size() == 2);
    CHECK(lf.explained_class == static_cast<int>(lf.prediction));
    CHECK(std::abs(lf.shap.sum() + lf.base_value - lf.probabilities(lf.explained_class)) <= 1e-9);
  }
}
