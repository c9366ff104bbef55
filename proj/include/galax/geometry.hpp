#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "galax/error.hpp"

namespace galax {

/// n x 2 coordinate table: planar (x, y), or (lon, lat) in degrees when geodesic.
template <typename Scalar>
using CoordsT = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;
using Coords = CoordsT<double>;

template <typename Scalar>
using PointT = Eigen::Matrix<Scalar, 2, 1>;

enum class KernelFunction { bisquare, gaussian, exponential };
enum class BandwidthMode { fixed, adaptive };

inline constexpr double kEarthRadiusMeters = 6371000.0;

std::string to_string(KernelFunction f);
std::string to_string(BandwidthMode m);
KernelFunction parse_kernel_function(const std::string& name);

/// Kernel shape plus bandwidth. In fixed mode `bandwidth` is a distance; in
/// adaptive mode it is the neighbour count k. Unset means "select automatically".
struct KernelSpec {
  KernelFunction function = KernelFunction::bisquare;
  BandwidthMode mode = BandwidthMode::adaptive;
  std::optional<double> bandwidth;
  bool geodesic = false;

  bool has_bandwidth() const { return bandwidth.has_value(); }
  int neighbors() const { return static_cast<int>(*bandwidth); }

  /// Throws unless the bandwidth is set and valid for n locations.
  void validate(Eigen::Index n) const;

  bool operator==(const KernelSpec&) const = default;
};

void validate_coords(const Coords& coords);

template <typename Scalar>
Scalar distance(const PointT<Scalar>& a, const PointT<Scalar>& b, bool geodesic) {
  using std::asin;
  using std::cos;
  using std::isfinite;
  using std::sin;
  using std::sqrt;
  if (!isfinite(a.x()) || !isfinite(a.y()) || !isfinite(b.x()) || !isfinite(b.y()))
    throw Error(Errc::invalid_input, "distance: non-finite coordinate");
  if (!geodesic) return (a - b).norm();

  if (a.y() < Scalar(-90) || a.y() > Scalar(90) || b.y() < Scalar(-90) || b.y() > Scalar(90))
    throw Error(Errc::invalid_input, "distance: latitude outside [-90, 90]");
  const Scalar deg = Scalar(std::numbers::pi) / Scalar(180);
  const Scalar phi1 = a.y() * deg, phi2 = b.y() * deg;
  const Scalar dphi = phi2 - phi1;
  const Scalar dlambda = (b.x() - a.x()) * deg;
  const Scalar s1 = sin(dphi / Scalar(2)), s2 = sin(dlambda / Scalar(2));
  Scalar h = s1 * s1 + cos(phi1) * cos(phi2) * s2 * s2;
  h = std::clamp(h, Scalar(0), Scalar(1));
  return Scalar(2) * Scalar(kEarthRadiusMeters) * asin(sqrt(h));
}

/// Standard GWR kernels. Bisquare has compact support on [0, b).
template <typename Scalar>
Scalar kernel_weight(Scalar d, Scalar b, KernelFunction function) {
  using std::exp;
  using std::isfinite;
  if (!(b > Scalar(0)) || !isfinite(b))
    throw Error(Errc::invalid_bandwidth, "kernel bandwidth must be positive and finite");
  if (!(d >= Scalar(0)))
    throw Error(Errc::invalid_input, "kernel distance must be non-negative");
  const Scalar r = d / b;
  switch (function) {
    case KernelFunction::bisquare: {
      if (d >= b) return Scalar(0);
      const Scalar t = Scalar(1) - r * r;
      return t * t;
    }
    case KernelFunction::gaussian:
      return exp(Scalar(-0.5) * r * r);
    case KernelFunction::exponential:
      return exp(-r);
  }
  return Scalar(0);
}

/// Distances from one focal location to every location (including itself).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> distance_row(Eigen::Index focal,
                                                      const CoordsT<Scalar>& coords,
                                                      bool geodesic) {
  const Eigen::Index n = coords.rows();
  if (focal < 0 || focal >= n) throw Error(Errc::invalid_input, "focal index out of range");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d(n);
  const PointT<Scalar> p = coords.row(focal).transpose();
  for (Eigen::Index j = 0; j < n; ++j)
    d(j) = j == focal ? Scalar(0) : distance<Scalar>(p, coords.row(j).transpose(), geodesic);
  return d;
}

/// Full symmetric distance matrix.
Eigen::MatrixXd distance_matrix(const Coords& coords, bool geodesic);

/// Row indices other than `focal`, ordered by (distance, index).
std::vector<Eigen::Index> neighbor_order(Eigen::Index focal, const Eigen::VectorXd& dist_row);

/// Distance from the focal location to its k-th nearest neighbour, self excluded.
double adaptive_cutoff(Eigen::Index focal, const Coords& coords, int k, bool geodesic = false);

/// Per-location bandwidth distance: the fixed bandwidth, or the adaptive cutoff.
double row_bandwidth(Eigen::Index focal, const Coords& coords, const KernelSpec& spec);

Eigen::VectorXd kernel_row(Eigen::Index focal, const Coords& coords, const KernelSpec& spec);

/// Largest nearest-neighbour distance over all locations.
double max_nearest_neighbor_distance(const Eigen::MatrixXd& dist);

}  // namespace galax
