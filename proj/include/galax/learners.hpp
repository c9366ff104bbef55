#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace galax {

enum class TaskKind { regression, classification };

struct Task {
  TaskKind kind = TaskKind::regression;
  int n_classes = 0;

  bool is_classification() const { return kind == TaskKind::classification; }
  static Task regression() { return {TaskKind::regression, 0}; }
  static Task classification(int n_classes) { return {TaskKind::classification, n_classes}; }
  bool operator==(const Task&) const = default;
};

/// Canonical order of the model zoo; also the tie-break order in model search.
enum class Learner { decision_tree, random_forest, extra_trees, gradient_boosted_trees };

std::string to_string(Learner learner);
Learner parse_learner(const std::string& name);
std::string to_string(TaskKind kind);

/// "sqrt" or a fraction of the feature count, evaluated per split.
struct MaxFeatures {
  bool use_sqrt = false;
  double fraction = 1.0;

  static MaxFeatures sqrt() { return {true, 1.0}; }
  static MaxFeatures of(double fraction) { return {false, fraction}; }
  int resolve(int n_features) const;
  bool operator==(const MaxFeatures&) const = default;
};

struct Hyperparameters {
  std::optional<int> max_depth;  // unset: grow until pure or min_samples_leaf binds
  int min_samples_leaf = 1;
  int n_estimators = 100;
  MaxFeatures max_features;
  double learning_rate = 0.1;
  double subsample = 1.0;

  bool operator==(const Hyperparameters&) const = default;
};

struct LearnerConfig {
  Learner learner = Learner::decision_tree;
  Hyperparameters hyper;
  std::uint64_t seed = 0;

  bool operator==(const LearnerConfig&) const = default;
};

/// Defaults for the hyperparameters a learner does not receive from a grid.
Hyperparameters default_hyperparameters(Learner learner);

/// Only the keys the learner consults, sorted.
nlohmann::json hyperparameters_to_json(Learner learner, const Hyperparameters& hp);
Hyperparameters hyperparameters_from_json(Learner learner, const nlohmann::json& j);

/// Flat node table. Leaves have feature == -1; `value` holds n_outputs
/// entries per node (regression mean, or class distribution).
struct Tree {
  std::vector<int> feature;
  std::vector<double> threshold;
  std::vector<int> left;
  std::vector<int> right;
  std::vector<double> value;
  int n_outputs = 1;
  /// Ensemble output this tree feeds (class index for one-vs-rest boosting).
  int output_index = 0;

  std::size_t size() const { return feature.size(); }
  template <typename Row>
  int leaf(const Row& x) const {
    int node = 0;
    while (feature[static_cast<std::size_t>(node)] >= 0) {
      const auto k = static_cast<std::size_t>(node);
      node = x[feature[k]] <= threshold[k] ? left[k] : right[k];
    }
    return node;
  }
  bool operator==(const Tree&) const = default;
};

struct FittedModel {
  LearnerConfig config;
  Task task;
  int n_features = 0;
  std::vector<Tree> trees;
  /// Gradient boosting only: {weighted mean} for regression, class priors for classification.
  std::vector<double> base_scores;

  int n_outputs() const { return task.is_classification() ? task.n_classes : 1; }
  /// m x 1 regression values, or m x C class probabilities.
  Eigen::MatrixXd predict_values(const Eigen::MatrixXd& X) const;
  bool operator==(const FittedModel&) const = default;
};

struct Prediction {
  /// Regression value, or predicted class label.
  Eigen::VectorXd value;
  /// m x C class probabilities; empty for regression.
  Eigen::MatrixXd proba;
};

FittedModel fit(const LearnerConfig& config, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const Eigen::VectorXd& sample_weights, const Task& task);

Prediction predict(const FittedModel& model, const Eigen::MatrixXd& X);

/// Class label with the highest probability, ties to the lowest index.
int argmax_label(const Eigen::Ref<const Eigen::RowVectorXd>& proba);

nlohmann::json model_to_json(const FittedModel& model);
FittedModel model_from_json(const nlohmann::json& j);

}  // namespace galax
