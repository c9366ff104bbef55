#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "galax/dataset.hpp"
#include "galax/results.hpp"

namespace galax {

struct BandwidthCandidate {
  double bandwidth = 0.0;
  std::optional<double> objective;
  std::string error;
};

struct BandwidthResolution {
  KernelSpec kernel;
  BandwidthMethod method = BandwidthMethod::preset;
  std::optional<IsaScan> scan;
  std::vector<BandwidthCandidate> candidates;
  /// ISA-to-k conversion hit n - 1.
  bool clamped = false;
};

/// Training rows for one focal location.
struct Neighborhood {
  std::vector<Eigen::Index> rows;  // ascending
  Eigen::VectorXd weights;
  double bandwidth = 0.0;
  bool expanded = false;

  double effective_n() const { return weights.sum(); }
};

/// Rows with kernel weight above `weight_floor`, widened to the
/// `min_local_samples` nearest rows when too few qualify.
Neighborhood local_neighborhood(Eigen::Index focal, const Coords& coords,
                                const KernelSpec& kernel, double weight_floor,
                                int min_local_samples, bool exclude_focal = false);

/// Up to `size` highest-weight rows of the neighbourhood (ties by index).
std::vector<Eigen::Index> background_rows(const Neighborhood& hood, int size);

BandwidthResolution resolve_bandwidth(const Dataset& dataset, const GalaxConfig& config);

/// ISA distance to neighbour count: lower median over locations of the number
/// of other points within `distance`, clamped to [min_local_samples, n - 1].
int isa_distance_to_k(const Coords& coords, double distance, int min_local_samples,
                      bool geodesic, bool* clamped = nullptr);

/// Log-spaced bandwidth candidates (neighbour counts or distances).
std::vector<double> bandwidth_candidates(const Dataset& dataset, const GalaxConfig& config);

BandwidthResolution search_bandwidth_performance(const Dataset& dataset, const GalaxConfig& config);

/// Prediction for one location from a model trained on its neighbourhood
/// without the focal row.
double leave_focal_out_prediction(const Dataset& dataset, const KernelSpec& kernel,
                                  const GalaxConfig& config, Eigen::Index focal);

Eigen::VectorXd leave_focal_out_predictions(const Dataset& dataset, const KernelSpec& kernel,
                                            const GalaxConfig& config);

/// Global metric (the automl metric, unweighted) over leave-focal-out predictions.
double leave_focal_out_objective(const Dataset& dataset, const KernelSpec& kernel,
                                 const GalaxConfig& config);

GalaxResults fit(const Dataset& dataset, const GalaxConfig& config);

struct SpatialPrediction {
  std::vector<Eigen::Index> nearest;
  Prediction prediction;
};

/// Scores each new point with the local model of its nearest training location.
SpatialPrediction predict(const GalaxResults& results, const Coords& new_coords,
                          const Eigen::MatrixXd& new_X);

/// Configuration used by the bandwidth search passes.
GalaxConfig reduced_config(const GalaxConfig& config);

}  // namespace galax
