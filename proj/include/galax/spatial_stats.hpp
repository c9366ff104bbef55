#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "galax/geometry.hpp"

namespace galax {

struct MoranResult {
  double I = 0.0;
  double expected = 0.0;
  /// Randomization variance; 0 when it cannot be computed (n < 4).
  double variance = 0.0;
  /// NaN when variance is 0.
  double z = 0.0;
};

enum class PeakRule { first_peak, max_z };

struct IsaBand {
  double distance = 0.0;
  MoranResult moran;
};

struct IsaScan {
  std::vector<IsaBand> bands;
  double selected_distance = 0.0;
  PeakRule selection_rule = PeakRule::first_peak;
};

/// Unset start/increment are derived from the data.
struct IsaParams {
  std::optional<double> start;
  std::optional<double> increment;
  int n_bands = 10;
};

std::string to_string(PeakRule rule);

/// Binary distance-band weights: w_ij = 1 iff 0 < d_ij <= threshold.
Eigen::MatrixXd distance_band_weights(const Eigen::MatrixXd& dist, double threshold);
Eigen::MatrixXd distance_band_weights(const Coords& coords, double threshold,
                                      bool geodesic = false);

/// Global Moran's I with variance under the randomization assumption.
MoranResult morans_i(const Eigen::VectorXd& values, const Eigen::MatrixXd& weights);

/// Incremental spatial autocorrelation: Moran's I z-scores over increasing
/// distance bands; picks the first strict z peak, else the global z maximum.
IsaScan isa_scan(const Eigen::VectorXd& y, const Coords& coords, const IsaParams& params = {},
                 bool geodesic = false);

}  // namespace galax
