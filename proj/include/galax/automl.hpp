#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "galax/learners.hpp"

namespace galax {

enum class Metric { r2, neg_rmse, accuracy, macro_f1 };
enum class SearchStrategy { grid, random };

std::string to_string(Metric metric);
Metric parse_metric(const std::string& name);
std::string to_string(SearchStrategy strategy);
bool metric_fits_task(Metric metric, const Task& task);

/// Per-learner axes. An empty axis falls back to the learner default.
/// Enumeration is the cartesian product in member order, last axis fastest.
struct HyperGrid {
  std::vector<std::optional<int>> max_depth;
  std::vector<int> min_samples_leaf;
  std::vector<int> n_estimators;
  std::vector<MaxFeatures> max_features;
  std::vector<double> learning_rate;
  std::vector<double> subsample;

  std::vector<Hyperparameters> expand(Learner learner) const;
  bool operator==(const HyperGrid&) const = default;
};

std::map<Learner, HyperGrid> default_grids();

struct AutoMLSettings {
  std::vector<Learner> candidates{Learner::decision_tree, Learner::random_forest,
                                  Learner::extra_trees, Learner::gradient_boosted_trees};
  std::map<Learner, HyperGrid> grids = default_grids();
  SearchStrategy strategy = SearchStrategy::grid;
  int n_draws = 24;
  int budget = 24;
  int cv_folds = 3;
  /// Unset: r2 for regression, macro_f1 for classification.
  std::optional<Metric> metric;
  std::uint64_t seed = 0;
  int min_local_samples = 20;

  Metric resolved_metric(const Task& task) const;
  void validate(const Task& task) const;
  bool operator==(const AutoMLSettings&) const = default;
};

struct Trial {
  LearnerConfig config;
  /// Position in the canonical candidate list; ties in score go to the lowest.
  std::size_t canonical_index = 0;
  std::optional<double> score;
  int folds_used = 0;
  std::string error;
};

struct SearchOutcome {
  LearnerConfig best_config;
  double best_score = 0.0;
  std::vector<Trial> trials;
  FittedModel model;
};

/// Every configuration reachable from the settings, in canonical order:
/// learner enum order, then grid order. Seeds are set to settings.seed.
std::vector<LearnerConfig> candidate_configs(const AutoMLSettings& settings);

/// Fold index per row: seeded shuffle, then label-stratified for
/// classification, then round-robin over folds.
std::vector<int> fold_assignment(const Eigen::VectorXd& y, int folds, std::uint64_t seed,
                                 const Task& task);

/// Weighted metric on one set of predictions, oriented higher-is-better.
double weighted_score(Metric metric, const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                      const Eigen::VectorXd& weights);

double weighted_cv_score(const LearnerConfig& config, const Eigen::MatrixXd& X,
                         const Eigen::VectorXd& y, const Eigen::VectorXd& weights, int folds,
                         Metric metric, std::uint64_t seed, const Task& task);

SearchOutcome search(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& weights, const Task& task,
                     const AutoMLSettings& settings);

}  // namespace galax
