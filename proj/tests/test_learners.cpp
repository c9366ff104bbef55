#include <doctest.h>

#include "galax/learners.hpp"
#include "galax/random.hpp"
#include "support.hpp"

using namespace galax;
using galax::test::error_code;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

LearnerConfig config(Learner l, std::uint64_t seed = 1) { return {l, default_hyperparameters(l), seed}; }

constexpr Learner kAll[] = {Learner::decision_tree, Learner::random_forest, Learner::extra_trees,
                            Learner::gradient_boosted_trees};

void random_regression(std::uint64_t seed, Eigen::Index n, int d, MatrixXd& X, VectorXd& y) {
  Rng rng(seed);
  X.resize(n, d);
  y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = rng.normal();
    y(i) = X(i, 0) * 2 - X(i, 1 % d) + 0.3 * rng.normal();
  }
}

}  // namespace

TEST_CASE("constant target gives a single leaf at the weighted mean") {
  MatrixXd X(6, 2);
  X << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
  const VectorXd y = VectorXd::Constant(6, 4.25);
  VectorXd w(6);
  w << 1, 2, 3, 1, 2, 3;
  for (Learner l : kAll) {
    const FittedModel m = fit(config(l), X, y, w, Task::regression());
    CHECK(m.trees.front().size() == 1);
    const VectorXd p = predict(m, X).value;
    for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p(i) == doctest::Approx(4.25).epsilon(1e-12));
  }
}

TEST_CASE("one perfect split for a step target") {
  Rng rng(2);
  MatrixXd X(40, 2);
  VectorXd y(40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    X(i, 0) = rng.uniform(-1, 1);
    X(i, 1) = rng.uniform(-1, 1);
    y(i) = X(i, 0) > 0 ? 1 : 0;
  }
  LearnerConfig c = config(Learner::decision_tree);
  c.hyper.max_depth = 1;
  const FittedModel m = fit(c, X, y, VectorXd::Ones(40), Task::classification(2));
  CHECK((predict(m, X).value.array() == y.array()).all());
  CHECK(m.trees.front().feature[0] == 0);
}

TEST_CASE("zero weights equal dropping rows") {
  MatrixXd X;
  VectorXd y;
  random_regression(3, 60, 3, X, y);
  VectorXd w = VectorXd::Ones(60);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < 60; ++i) {
    if (i % 2) w(i) = 0.0;
    else keep.push_back(i);
  }
  for (Learner l : kAll) {
    const FittedModel a = fit(config(l), X, y, w, Task::regression());
    const FittedModel b = fit(config(l), X(keep, Eigen::all), y(keep), VectorXd::Ones(30), Task::regression());
    CHECK(predict(a, X).value == predict(b, X).value);
  }
}

TEST_CASE("seeded learners reproduce exactly") {
  MatrixXd X;
  VectorXd y;
  random_regression(4, 100, 5, X, y);
  for (Learner l : kAll) {
    const FittedModel a = fit(config(l, 99), X, y, VectorXd::Ones(100), Task::regression());
    const FittedModel b = fit(config(l, 99), X, y, VectorXd::Ones(100), Task::regression());
    CHECK(a == b);
    CHECK(predict(a, X).value == predict(b, X).value);
  }
  const FittedModel c = fit(config(Learner::random_forest, 100), X, y, VectorXd::Ones(100), Task::regression());
  const FittedModel d = fit(config(Learner::random_forest, 99), X, y, VectorXd::Ones(100), Task::regression());
  CHECK(predict(c, X).value != predict(d, X).value);
}

TEST_CASE("hand-built tree traversal") {
  FittedModel m;
  m.config = config(Learner::decision_tree);
  m.task = Task::regression();
  m.n_features = 1;
  Tree t;
  t.feature = {0, -1, -1};
  t.threshold = {0.5, 0, 0};
  t.left = {1, -1, -1};
  t.right = {2, -1, -1};
  t.value = {0.0, -3.0, 7.0};
  m.trees.push_back(t);
  MatrixXd X(2, 1);
  X << 0.2, 0.9;
  const VectorXd p = predict(m, X).value;
  CHECK(p(0) == -3.0);
  CHECK(p(1) == 7.0);
}

TEST_CASE("boosting with no stages returns the base scores") {
  MatrixXd X;
  VectorXd y;
  random_regression(5, 30, 2, X, y);
  LearnerConfig c = config(Learner::gradient_boosted_trees);
  c.hyper.n_estimators = 0;
  const FittedModel m = fit(c, X, y, VectorXd::Ones(30), Task::regression());
  CHECK((predict(m, X).value.array() - y.mean()).abs().maxCoeff() <= 1e-12);

  VectorXd labels(30);
  for (Eigen::Index i = 0; i < 30; ++i) labels(i) = i % 3 == 0 ? 2 : i % 3 == 1 ? 0 : (i < 15 ? 1 : 0);
  const FittedModel k = fit(c, X, labels, VectorXd::Ones(30), Task::classification(3));
  const MatrixXd p = predict(k, X).proba;
  for (int cl = 0; cl < 3; ++cl)
    CHECK(p(0, cl) == doctest::Approx((labels.array() == cl).cast<double>().mean()).epsilon(1e-12));
}

TEST_CASE("classification probabilities are distributions") {
  Rng rng(6);
  MatrixXd X(90, 3);
  VectorXd y(90);
  for (Eigen::Index i = 0; i < 90; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
    y(i) = X(i, 0) > 0.5 ? 2 : X(i, 1) > 0 ? 1 : 0;
  }
  for (Learner l : kAll) {
    const Prediction p = predict(fit(config(l), X, y, VectorXd::Ones(90), Task::classification(3)), X);
    CHECK(p.proba.cols() == 3);
    CHECK((p.proba.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(p.proba.minCoeff() >= 0.0);
    for (Eigen::Index i = 0; i < 90; ++i) CHECK(p.value(i) == argmax_label(p.proba.row(i)));
    CHECK((p.value.array() == y.array()).cast<double>().mean() > 0.8);
  }
}

TEST_CASE("single-class boosting is a constant model") {
  MatrixXd X;
  VectorXd y;
  random_regression(7, 20, 2, X, y);
  const VectorXd ones = VectorXd::Ones(20);
  const FittedModel m = fit(config(Learner::gradient_boosted_trees), X, ones, ones, Task::classification(2));
  const Prediction p = predict(m, X);
  CHECK((p.value.array() == 1.0).all());
  CHECK((p.proba.col(1).array() == 1.0).all());
}

TEST_CASE("fit errors") {
  MatrixXd X;
  VectorXd y;
  random_regression(8, 10, 2, X, y);
  CHECK(error_code([&] { fit(config(Learner::decision_tree), X, y, VectorXd::Zero(10), Task::regression()); }) ==
        Errc::empty_training_set);
  CHECK(error_code([&] { fit(config(Learner::decision_tree), X, y.head(9), VectorXd::Ones(10), Task::regression()); }) ==
        Errc::shape_mismatch);
  LearnerConfig bad = config(Learner::gradient_boosted_trees);
  bad.hyper.learning_rate = 0.0;
  CHECK(error_code([&] { fit(bad, X, y, VectorXd::Ones(10), Task::regression()); }) == Errc::invalid_input);
}

TEST_CASE("model JSON round trip") {
  MatrixXd X;
  VectorXd y;
  random_regression(9, 50, 3, X, y);
  for (Learner l : kAll) {
    const FittedModel m = fit(config(l, 5), X, y, VectorXd::Ones(50), Task::regression());
    const FittedModel back = model_from_json(model_to_json(m));
    CHECK(back == m);
    CHECK(hyperparameters_from_json(l, hyperparameters_to_json(l, m.config.hyper)) == m.config.hyper);
  }
  nlohmann::json j = model_to_json(fit(config(Learner::decision_tree), X, y, VectorXd::Ones(50), Task::regression()));
  j["trees"][0]["left"][0] = 12345;
  CHECK(error_code([&] { model_from_json(j); }) == Errc::integrity);
}

TEST_CASE("max_features resolution") {
  CHECK(MaxFeatures::sqrt().resolve(10) == 3);
  CHECK(MaxFeatures::of(0.5).resolve(5) == 2);
  CHECK(MaxFeatures::of(0.01).resolve(5) == 1);
  CHECK(MaxFeatures::of(1.0).resolve(5) == 5);
}
