#include "galax/automl.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "galax/error.hpp"
#include "galax/random.hpp"

namespace galax {

namespace {

template <typename T>
std::vector<T> axis_or(const std::vector<T>& axis, T fallback) {
  return axis.empty() ? std::vector<T>{fallback} : axis;
}

double weighted_r2(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                   const Eigen::VectorXd& w) {
  const double total = w.sum();
  const double mean = w.dot(y) / total;
  const double sse = (w.array() * (y - yhat).array().square()).sum();
  const double sst = (w.array() * (y.array() - mean).square()).sum();
  if (!(sst > 0.0)) throw Error(Errc::fold_degeneracy, "weighted r2: held-out target is constant");
  return 1.0 - sse / sst;
}

double weighted_macro_f1(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                         const Eigen::VectorXd& w) {
  const int n_classes =
      static_cast<int>(std::max(y.maxCoeff(), yhat.maxCoeff())) + 1;
  std::vector<double> tp(static_cast<std::size_t>(n_classes), 0.0), pred(tp), truth(tp);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const auto t = static_cast<std::size_t>(y(i));
    const auto p = static_cast<std::size_t>(yhat(i));
    truth[t] += w(i);
    pred[p] += w(i);
    if (t == p) tp[t] += w(i);
  }
  double sum = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < tp.size(); ++c) {
    if (truth[c] <= 0.0 && pred[c] <= 0.0) continue;
    ++present;
    const double precision = pred[c] > 0.0 ? tp[c] / pred[c] : 0.0;
    const double recall = truth[c] > 0.0 ? tp[c] / truth[c] : 0.0;
    if (precision + recall > 0.0) sum += 2.0 * precision * recall / (precision + recall);
  }
  return present > 0 ? sum / present : 0.0;
}

}  // namespace

std::string to_string(Metric metric) {
  switch (metric) {
    case Metric::r2: return "r2";
    case Metric::neg_rmse: return "neg_rmse";
    case Metric::accuracy: return "accuracy";
    case Metric::macro_f1: return "macro_f1";
  }
  return "unknown";
}

Metric parse_metric(const std::string& name) {
  for (Metric m : {Metric::r2, Metric::neg_rmse, Metric::accuracy, Metric::macro_f1})
    if (to_string(m) == name) return m;
  throw Error(Errc::invalid_input, "unknown metric '" + name + "'");
}

std::string to_string(SearchStrategy strategy) {
  return strategy == SearchStrategy::grid ? "grid" : "random";
}

bool metric_fits_task(Metric metric, const Task& task) {
  const bool regression_metric = metric == Metric::r2 || metric == Metric::neg_rmse;
  return regression_metric != task.is_classification();
}

std::vector<Hyperparameters> HyperGrid::expand(Learner learner) const {
  const Hyperparameters d = default_hyperparameters(learner);
  std::vector<Hyperparameters> out;
  for (const auto& depth : axis_or(max_depth, d.max_depth))
    for (int leaf : axis_or(min_samples_leaf, d.min_samples_leaf))
      for (int trees : axis_or(n_estimators, d.n_estimators))
        for (const auto& mf : axis_or(max_features, d.max_features))
          for (double lr : axis_or(learning_rate, d.learning_rate))
            for (double sub : axis_or(subsample, d.subsample)) {
              Hyperparameters h = d;
              h.max_depth = depth;
              h.min_samples_leaf = leaf;
              h.n_estimators = trees;
              h.max_features = mf;
              h.learning_rate = lr;
              h.subsample = sub;
              out.push_back(h);
            }
  return out;
}

std::map<Learner, HyperGrid> default_grids() {
  std::map<Learner, HyperGrid> grids;
  grids[Learner::decision_tree].max_depth = {3, 6, 10};
  for (Learner forest : {Learner::random_forest, Learner::extra_trees}) {
    grids[forest].n_estimators = {50, 100};
    grids[forest].max_features = {MaxFeatures::sqrt(), MaxFeatures::of(1.0)};
  }
  auto& gbt = grids[Learner::gradient_boosted_trees];
  gbt.max_depth = {3};
  gbt.n_estimators = {50, 100};
  gbt.learning_rate = {0.1, 0.3};
  return grids;
}

Metric AutoMLSettings::resolved_metric(const Task& task) const {
  if (metric) return *metric;
  return task.is_classification() ? Metric::macro_f1 : Metric::r2;
}

void AutoMLSettings::validate(const Task& task) const {
  if (candidates.empty()) throw Error(Errc::invalid_input, "automl: no candidate learners");
  if (budget < 1) throw Error(Errc::invalid_input, "automl: budget must be >= 1");
  if (cv_folds < 2) throw Error(Errc::invalid_input, "automl: cv_folds must be >= 2");
  if (min_local_samples < cv_folds)
    throw Error(Errc::invalid_input, "automl: min_local_samples must be >= cv_folds");
  if (strategy == SearchStrategy::random && n_draws < 1)
    throw Error(Errc::invalid_input, "automl: n_draws must be >= 1");
  if (!metric_fits_task(resolved_metric(task), task))
    throw Error(Errc::invalid_input,
                "automl: metric " + to_string(resolved_metric(task)) + " does not fit the task");
}

std::vector<LearnerConfig> candidate_configs(const AutoMLSettings& settings) {
  std::vector<Learner> learners = settings.candidates;
  std::sort(learners.begin(), learners.end());
  learners.erase(std::unique(learners.begin(), learners.end()), learners.end());
  std::vector<LearnerConfig> configs;
  for (Learner l : learners) {
    const auto it = settings.grids.find(l);
    const HyperGrid grid = it == settings.grids.end() ? HyperGrid{} : it->second;
    for (const Hyperparameters& h : grid.expand(l)) configs.push_back({l, h, settings.seed});
  }
  return configs;
}

std::vector<int> fold_assignment(const Eigen::VectorXd& y, int folds, std::uint64_t seed,
                                 const Task& task) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(y.size()));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  if (task.is_classification())
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return y(a) < y(b); });
  std::vector<int> fold(order.size());
  for (std::size_t p = 0; p < order.size(); ++p)
    fold[static_cast<std::size_t>(order[p])] = static_cast<int>(p % static_cast<std::size_t>(folds));
  return fold;
}

double weighted_score(Metric metric, const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                      const Eigen::VectorXd& weights) {
  if (y.size() != yhat.size() || y.size() != weights.size() || y.size() == 0)
    throw Error(Errc::shape_mismatch, "weighted_score: length mismatch");
  const double total = weights.sum();
  if (!(total > 0.0)) throw Error(Errc::fold_degeneracy, "weighted_score: zero weight mass");
  switch (metric) {
    case Metric::r2:
      return weighted_r2(y, yhat, weights);
    case Metric::neg_rmse:
      return -std::sqrt((weights.array() * (y - yhat).array().square()).sum() / total);
    case Metric::accuracy:
      return (weights.array() * (y.array() == yhat.array()).cast<double>()).sum() / total;
    case Metric::macro_f1:
      return weighted_macro_f1(y, yhat, weights);
  }
  return 0.0;
}

double weighted_cv_score(const LearnerConfig& config, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& weights, int folds,
                         Metric metric, std::uint64_t seed, const Task& task) {
  if (folds < 2) throw Error(Errc::invalid_input, "cv: folds must be >= 2");
  if (X.rows() < folds)
    throw Error(Errc::fold_degeneracy, "cv: fewer rows than folds");
  const std::vector<int> fold = fold_assignment(y, folds, seed, task);

  double score_sum = 0.0, mass_sum = 0.0;
  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < fold.size(); ++i)
      (fold[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    const Eigen::VectorXd w_train = weights(train);
    const Eigen::VectorXd w_test = weights(test);
    if (!(w_train.sum() > 0.0) || !(w_test.sum() > 0.0))
      throw Error(Errc::fold_degeneracy,
                  "cv: fold " + std::to_string(f) + " has no weight in its train or held-out part");
    const FittedModel model = fit(config, X(train, Eigen::all), y(train), w_train, task);
    const Prediction p = predict(model, X(test, Eigen::all));
    const double mass = w_test.sum();
    score_sum += mass * weighted_score(metric, y(test), p.value, w_test);
    mass_sum += mass;
  }
  return score_sum / mass_sum;
}

SearchOutcome search(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& weights, const Task& task,
                     const AutoMLSettings& settings) {
  settings.validate(task);
  if (X.rows() < settings.min_local_samples)
    throw Error(Errc::too_few_samples, "automl: " + std::to_string(X.rows()) +
                                           " rows, need at least " +
                                           std::to_string(settings.min_local_samples));
  const Metric metric = settings.resolved_metric(task);
  const std::vector<LearnerConfig> configs = candidate_configs(settings);

  std::vector<std::size_t> chosen;
  if (settings.strategy == SearchStrategy::grid) {
    const std::size_t count = std::min(configs.size(), static_cast<std::size_t>(settings.budget));
    for (std::size_t i = 0; i < count; ++i) chosen.push_back(i);
  } else {
    std::vector<std::size_t> all(configs.size());
    std::iota(all.begin(), all.end(), 0);
    Rng rng(stable_hash(settings.seed, 0x5eedULL));
    rng.shuffle(all);
    const auto draws = static_cast<std::size_t>(std::min(settings.n_draws, settings.budget));
    chosen.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(std::min(draws, all.size())));
  }

  SearchOutcome outcome;
  std::optional<std::size_t> best;
  for (std::size_t idx : chosen) {
    Trial trial{configs[idx], idx, std::nullopt, 0, {}};
    for (int folds = settings.cv_folds;; folds = 2) {
      try {
        trial.score = weighted_cv_score(trial.config, X, y, weights, folds, metric, settings.seed, task);
        trial.folds_used = folds;
        trial.error.clear();
        break;
      } catch (const Error& e) {
        trial.error = e.what();
        if (e.code() != Errc::fold_degeneracy || folds == 2) break;
      }
    }
    if (trial.score) {
      const Trial* incumbent = best ? &outcome.trials[*best] : nullptr;
      if (!incumbent || *trial.score > *incumbent->score ||
          (*trial.score == *incumbent->score && idx < incumbent->canonical_index))
        best = outcome.trials.size();
    }
    outcome.trials.push_back(std::move(trial));
  }
  if (!best)
    throw Error(Errc::no_viable_model,
                "automl: every trial failed" +
                    (outcome.trials.empty() ? std::string{} : ": " + outcome.trials.back().error));

  outcome.best_config = outcome.trials[*best].config;
  outcome.best_score = *outcome.trials[*best].score;
  outcome.model = fit(outcome.best_config, X, y, weights, task);
  return outcome;
}

}  // namespace galax
