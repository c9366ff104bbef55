#include <doctest.h>

#include <set>

#include "galax/automl.hpp"
#include "galax/random.hpp"
#include "support.hpp"

using namespace galax;
using galax::test::error_code;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

double weighted_r2_oracle(const VectorXd& y, const VectorXd& yhat, const VectorXd& w) {
  double sw = 0, mean = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    sw += w(i);
    mean += w(i) * y(i);
  }
  mean /= sw;
  double res = 0, tot = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    res += w(i) * (y(i) - yhat(i)) * (y(i) - yhat(i));
    tot += w(i) * (y(i) - mean) * (y(i) - mean);
  }
  return 1 - res / tot;
}

void data(std::uint64_t seed, Eigen::Index n, int d, MatrixXd& X, VectorXd& y, VectorXd& w) {
  Rng rng(seed);
  X.resize(n, d);
  y.resize(n);
  w.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = rng.uniform();
    y(i) = std::sin(5 * X(i, 0)) + X(i, 1) + 0.1 * rng.normal();
    w(i) = 0.2 + rng.uniform();
  }
}

AutoMLSettings single(Learner l, Hyperparameters h) {
  AutoMLSettings s;
  s.candidates = {l};
  HyperGrid g;
  g.max_depth = {h.max_depth};
  g.min_samples_leaf = {h.min_samples_leaf};
  s.grids = {{l, g}};
  return s;
}

}  // namespace

TEST_CASE("default grids") {
  AutoMLSettings s;
  const auto configs = candidate_configs(s);
  CHECK(configs.size() == 15);
  CHECK(configs.front().learner == Learner::decision_tree);
  CHECK(configs.back().learner == Learner::gradient_boosted_trees);
  for (std::size_t i = 1; i < configs.size(); ++i)
    CHECK(static_cast<int>(configs[i - 1].learner) <= static_cast<int>(configs[i].learner));
  CHECK(s.resolved_metric(Task::regression()) == Metric::r2);
  CHECK(s.resolved_metric(Task::classification(2)) == Metric::macro_f1);
}

TEST_CASE("fold assignment") {
  VectorXd y(30);
  for (Eigen::Index i = 0; i < 30; ++i) y(i) = i % 3;
  const auto a = fold_assignment(y, 3, 7, Task::classification(3));
  CHECK(a == fold_assignment(y, 3, 7, Task::classification(3)));
  for (int c = 0; c < 3; ++c) {
    std::vector<int> per_fold(3, 0);
    for (Eigen::Index i = 0; i < 30; ++i)
      if (y(i) == c) ++per_fold[static_cast<std::size_t>(a[static_cast<std::size_t>(i)])];
    CHECK(*std::max_element(per_fold.begin(), per_fold.end()) - *std::min_element(per_fold.begin(), per_fold.end()) <= 1);
  }
  const auto r = fold_assignment(y, 4, 7, Task::regression());
  for (int f = 0; f < 4; ++f) {
    const auto count = std::count(r.begin(), r.end(), f);
    CHECK((count == 7 || count == 8));
  }
}

TEST_CASE("cv score matches a fold-loop oracle") {
  MatrixXd X;
  VectorXd y, w;
  data(80, 80, 4, X, y, w);
  const LearnerConfig cfg{Learner::random_forest, default_hyperparameters(Learner::random_forest), 3};
  const double score = weighted_cv_score(cfg, X, y, w, 3, Metric::r2, 11, Task::regression());

  const std::vector<int> fold = fold_assignment(y, 3, 11, Task::regression());
  double num = 0, den = 0;
  for (int f = 0; f < 3; ++f) {
    std::vector<Eigen::Index> tr, te;
    for (Eigen::Index i = 0; i < 80; ++i) (fold[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
    const FittedModel m = fit(cfg, X(tr, Eigen::all), y(tr), w(tr), Task::regression());
    const VectorXd p = predict(m, X(te, Eigen::all)).value;
    const double mass = w(te).sum();
    num += mass * weighted_r2_oracle(y(te), p, w(te));
    den += mass;
  }
  CHECK(std::abs(score - num / den) <= 1e-12);
}

TEST_CASE("interpolating learner scores r2 of one") {
  MatrixXd X(30, 1);
  VectorXd y(30);
  for (Eigen::Index i = 0; i < 30; ++i) {
    X(i, 0) = static_cast<double>(i);
    y(i) = i < 15 ? 0.0 : 5.0;
  }
  const LearnerConfig cfg{Learner::decision_tree, default_hyperparameters(Learner::decision_tree), 0};
  LearnerConfig deep = cfg;
  deep.hyper.max_depth.reset();
  CHECK(weighted_cv_score(deep, X, y, VectorXd::Ones(30), 3, Metric::r2, 1, Task::regression()) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("equal weights give the unweighted score") {
  MatrixXd X;
  VectorXd y, w;
  data(81, 60, 3, X, y, w);
  const LearnerConfig cfg{Learner::extra_trees, default_hyperparameters(Learner::extra_trees), 2};
  const double a = weighted_cv_score(cfg, X, y, VectorXd::Ones(60), 3, Metric::neg_rmse, 4, Task::regression());
  const double b = weighted_cv_score(cfg, X, y, VectorXd::Constant(60, 3.5), 3, Metric::neg_rmse, 4, Task::regression());
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("search budget and single-config grids") {
  MatrixXd X;
  VectorXd y, w;
  data(82, 40, 2, X, y, w);
  AutoMLSettings s;
  s.budget = 1;
  SearchOutcome o = search(X, y, w, Task::regression(), s);
  CHECK(o.trials.size() == 1);
  CHECK(o.best_config.learner == Learner::decision_tree);

  Hyperparameters h = default_hyperparameters(Learner::decision_tree);
  h.max_depth = 2;
  o = search(X, y, w, Task::regression(), single(Learner::decision_tree, h));
  CHECK(o.trials.size() == 1);
  CHECK(o.best_config.hyper.max_depth == 2);
  CHECK(o.model.config == o.best_config);
}

TEST_CASE("step data prefers a real split over a constant tree") {
  Rng rng(83);
  MatrixXd X(40, 1);
  VectorXd y(40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    X(i, 0) = rng.uniform(-1, 1);
    y(i) = X(i, 0) > 0 ? 1.0 : 0.0;
  }
  AutoMLSettings s;
  s.candidates = {Learner::decision_tree};
  HyperGrid g;
  g.max_depth = {1, 1};
  g.min_samples_leaf = {40, 1};
  s.grids = {{Learner::decision_tree, g}};
  const SearchOutcome o = search(X, y, VectorXd::Ones(40), Task::regression(), s);
  CHECK(o.best_config.hyper.min_samples_leaf == 1);
  CHECK(*o.best_config.hyper.max_depth == 1);
}

TEST_CASE("ties go to the earliest canonical config") {
  MatrixXd X(30, 1);
  VectorXd y(30);
  for (Eigen::Index i = 0; i < 30; ++i) {
    X(i, 0) = static_cast<double>(i);
    y(i) = i < 15 ? 0.0 : 1.0;
  }
  AutoMLSettings s;
  s.candidates = {Learner::decision_tree};
  HyperGrid g;
  g.max_depth = {3, 2, 1};
  s.grids = {{Learner::decision_tree, g}};
  const SearchOutcome o = search(X, y, VectorXd::Ones(30), Task::regression(), s);
  CHECK(*o.best_config.hyper.max_depth == 3);
}

TEST_CASE("random strategy draws distinct configs within budget") {
  MatrixXd X;
  VectorXd y, w;
  data(84, 40, 2, X, y, w);
  AutoMLSettings s;
  s.strategy = SearchStrategy::random;
  s.n_draws = 5;
  s.seed = 9;
  const SearchOutcome a = search(X, y, w, Task::regression(), s);
  const SearchOutcome b = search(X, y, w, Task::regression(), s);
  CHECK(a.trials.size() == 5);
  std::set<std::size_t> idx;
  for (std::size_t k = 0; k < a.trials.size(); ++k) {
    idx.insert(a.trials[k].canonical_index);
    CHECK(a.trials[k].canonical_index == b.trials[k].canonical_index);
  }
  CHECK(idx.size() == 5);
}

TEST_CASE("search fails when every fold count is degenerate") {
  MatrixXd X;
  VectorXd y, w;
  data(85, 21, 2, X, y, w);
  VectorXd weights = VectorXd::Zero(21);
  weights(0) = weights(5) = 1.0;
  AutoMLSettings s;
  s.budget = 2;
  s.min_local_samples = 5;
  CHECK(error_code([&] { search(X, y, weights, Task::regression(), s); }) == Errc::no_viable_model);
}

TEST_CASE("search preconditions") {
  MatrixXd X;
  VectorXd y, w;
  data(86, 10, 2, X, y, w);
  AutoMLSettings s;
  CHECK(error_code([&] { search(X, y, w, Task::regression(), s); }) == Errc::too_few_samples);
  s.metric = Metric::accuracy;
  s.min_local_samples = 5;
  CHECK(error_code([&] { search(X, y, w, Task::regression(), s); }) == Errc::invalid_input);
}

TEST_CASE("weighted scores") {
  VectorXd y(4), p(4), w(4);
  y << 0, 1, 1, 0;
  p << 0, 1, 0, 0;
  w << 1, 1, 2, 0;
  CHECK(weighted_score(Metric::accuracy, y, p, w) == doctest::Approx(0.5));
  VectorXd yr(3), pr(3), wr(3);
  yr << 1, 2, 3;
  pr << 1, 2, 5;
  wr << 1, 1, 2;
  CHECK(weighted_score(Metric::neg_rmse, yr, pr, wr) == doctest::Approx(-std::sqrt(8.0 / 4.0)));
}
