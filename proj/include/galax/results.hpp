#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "galax/dataset.hpp"

namespace galax {

inline constexpr const char* kSchemaVersion = "1.0";

struct LocalFit {
  Eigen::Index location = 0;
  /// Kernel distance scale at this location (the cutoff in adaptive mode).
  double bandwidth_used = 0.0;
  /// Sum of the kernel weights of the training rows.
  double effective_n = 0.0;
  /// Neighbourhood was widened to reach min_local_samples rows.
  bool expanded = false;
  LearnerConfig selected;
  /// Regression value, or predicted class label.
  double prediction = 0.0;
  Eigen::VectorXd probabilities;
  /// Weighted in-neighbourhood CV score of the selected config.
  double local_score = 0.0;
  /// Empty when explanations were disabled.
  Eigen::VectorXd shap;
  double base_value = 0.0;
  double explained_output = 0.0;
  int explained_class = -1;
  ExplainMode explain_mode = ExplainMode::exact;
  FittedModel model;

  bool explained() const { return shap.size() > 0; }
};

struct DatasetFingerprint {
  Eigen::Index rows = 0;
  Eigen::Index features = 0;
  std::vector<std::string> feature_names;
  /// FNV-1a 64 over coordinates, features and target, hex encoded.
  std::string content_hash;

  bool operator==(const DatasetFingerprint&) const = default;
};

DatasetFingerprint fingerprint(const Dataset& dataset);

struct GalaxResults {
  std::string schema_version = kSchemaVersion;
  Task task;
  std::vector<std::string> class_labels;
  KernelSpec resolved_kernel;
  BandwidthMethod bw_method_used = BandwidthMethod::preset;
  GalaxConfig settings;
  std::vector<LocalFit> local_fits;
  std::map<std::string, double> global_metrics;
  DatasetFingerprint dataset;
  Coords coords;

  const std::vector<std::string>& feature_names() const { return dataset.feature_names; }
};

/// Deep value equality (NaN compares equal to NaN).
bool equal(const LocalFit& a, const LocalFit& b);
bool equal(const GalaxResults& a, const GalaxResults& b);

struct RegressionMetrics {
  /// Unset when y is constant.
  std::optional<double> r2;
  double rmse = 0.0;

  /// Throws metric_undefined when r2 is unset.
  double r2_value() const;
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Classes never predicted; their precision was taken as 0.
  std::vector<int> unpredicted_classes;
};

RegressionMetrics regression_metrics(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat);
/// Binary: scores of class 1. Multiclass: macro averages over all classes.
ClassificationMetrics classification_metrics(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat,
                                             int n_classes);

/// Metric map keyed exactly by the task: {r2, rmse} or {accuracy, precision, recall, f1}.
std::map<std::string, double> global_metrics(const Task& task, const Eigen::VectorXd& y,
                                             const Eigen::VectorXd& yhat);

struct SelectionCount {
  std::string learner;
  /// Canonical JSON of the hyperparameters.
  std::string hyperparameters;
  int count = 0;
};

struct Summary {
  Task task;
  Eigen::Index n_locations = 0;
  std::map<std::string, double> global_metrics;
  double local_score_min = 0.0;
  double local_score_median = 0.0;
  double local_score_max = 0.0;
  /// Most frequent first; ties by learner then hyperparameters.
  std::vector<SelectionCount> selections;
  KernelSpec kernel;
  BandwidthMethod bw_method = BandwidthMethod::preset;
  int expanded_locations = 0;

  std::string text() const;
  nlohmann::json to_json() const;
};

Summary summarize(const GalaxResults& results);

struct ShapContribution {
  std::string feature;
  double phi = 0.0;
  double value = 0.0;
};

struct ShapRecord {
  Eigen::Index location = 0;
  /// Sorted by |phi| descending, ties by feature order.
  std::vector<ShapContribution> contributions;
  double base_value = 0.0;
  double prediction = 0.0;
  double explained_output = 0.0;
  int explained_class = -1;
  LearnerConfig selected;
  double effective_n = 0.0;
};

/// `feature_values` is the focal row of X, used only for display.
ShapRecord shap_for_location(const GalaxResults& results, Eigen::Index location,
                             const Eigen::VectorXd& feature_values = {});

/// Archive members in their fixed order.
std::vector<std::pair<std::string, std::string>> archive_members(const GalaxResults& results);
std::string archive_bytes(const GalaxResults& results);
GalaxResults results_from_archive(const std::string& bytes);

void save(const GalaxResults& results, const std::filesystem::path& path);
GalaxResults load(const std::filesystem::path& path);

/// Sorted-key JSON with 17 significant digits for every float.
std::string canonical_json(const nlohmann::json& value);

}  // namespace galax
