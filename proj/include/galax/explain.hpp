#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "galax/learners.hpp"

namespace galax {

enum class ExplainMode { exact, sampled };

std::string to_string(ExplainMode mode);

struct ExplainSettings {
  bool enabled = true;
  ExplainMode mode = ExplainMode::exact;
  int n_permutations = 100;
  int max_exact_features = 12;
  int background_size = 64;
  /// Unset: explain the probability of the predicted class.
  std::optional<int> target_class;

  bool operator==(const ExplainSettings&) const = default;
};

struct Explanation {
  Eigen::VectorXd phi;
  double base_value = 0.0;
  ExplainMode mode_used = ExplainMode::exact;
  /// Model output at x that the attributions decompose.
  double target = 0.0;
  /// Class whose probability was explained (-1 for regression).
  int target_class = -1;
  /// sum(phi) + base_value - target.
  double residual = 0.0;
};

/// Scalar model output evaluated row-wise over a batch.
using BatchFunction = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

/// Interventional Shapley values by full coalition enumeration:
/// v(S) = mean over background rows of f(x on S, background off S).
Explanation exact_shapley(const BatchFunction& f, const Eigen::VectorXd& x,
                          const Eigen::MatrixXd& background, int max_exact_features = 12);

/// Average marginal contributions over the given feature orderings.
Explanation permutation_shapley(const BatchFunction& f, const Eigen::VectorXd& x,
                                const Eigen::MatrixXd& background,
                                const std::vector<std::vector<int>>& orderings);

/// Seeded antithetic sampling: each drawn ordering is paired with its reverse.
Explanation sampled_shapley(const BatchFunction& f, const Eigen::VectorXd& x,
                            const Eigen::MatrixXd& background, int n_permutations,
                            std::uint64_t seed);

/// Explains a fitted model at x: the regression output, or a class probability.
Explanation explain_local(const FittedModel& model, const Eigen::VectorXd& x,
                          const Eigen::MatrixXd& background, const ExplainSettings& settings,
                          std::uint64_t seed = 0);

}  // namespace galax
