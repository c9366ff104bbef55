#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "galax/automl.hpp"
#include "galax/explain.hpp"
#include "galax/geometry.hpp"
#include "galax/learners.hpp"
#include "galax/spatial_stats.hpp"

namespace galax {

struct Dataset {
  Coords coords;
  Eigen::MatrixXd X;
  /// Regression target, or class labels 0..C-1.
  Eigen::VectorXd y;
  std::vector<std::string> feature_names;
  Task task;
  /// Original label text per class index (classification only).
  std::vector<std::string> class_labels;

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index n_features() const { return X.cols(); }

  /// Shape, finiteness, label range and minimum-size checks.
  void validate(int min_local_samples) const;
};

/// How the bandwidth was obtained. `preset` means it was given up front.
enum class BandwidthMethod { preset, isa, performance };

std::string to_string(BandwidthMethod method);
BandwidthMethod parse_bandwidth_method(const std::string& name);

struct GalaxConfig {
  KernelSpec kernel;
  /// Unset: isa for regression, performance for classification.
  std::optional<BandwidthMethod> bw_method;
  IsaParams isa;
  AutoMLSettings automl;
  ExplainSettings explain;
  double weight_floor = 1e-6;
  /// Worker count. Never affects results.
  int threads = 1;
  std::uint64_t master_seed = 0;

  BandwidthMethod resolved_bw_method(const Task& task) const;
  void validate(const Task& task) const;
};

inline bool operator==(const IsaParams& a, const IsaParams& b) {
  return a.start == b.start && a.increment == b.increment && a.n_bands == b.n_bands;
}

/// Equality ignoring the worker count.
bool same_settings(const GalaxConfig& a, const GalaxConfig& b);

}  // namespace galax
