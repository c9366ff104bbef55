#include "galax/geometry.hpp"

#include <limits>

namespace galax {

std::string to_string(KernelFunction f) {
  switch (f) {
    case KernelFunction::bisquare: return "bisquare";
    case KernelFunction::gaussian: return "gaussian";
    case KernelFunction::exponential: return "exponential";
  }
  return "unknown";
}

std::string to_string(BandwidthMode m) {
  return m == BandwidthMode::fixed ? "fixed" : "adaptive";
}

KernelFunction parse_kernel_function(const std::string& name) {
  if (name == "bisquare") return KernelFunction::bisquare;
  if (name == "gaussian") return KernelFunction::gaussian;
  if (name == "exponential") return KernelFunction::exponential;
  throw Error(Errc::invalid_input, "unknown kernel function '" + name + "'");
}

void KernelSpec::validate(Eigen::Index n) const {
  if (!bandwidth) throw Error(Errc::invalid_bandwidth, "kernel bandwidth is not set");
  const double b = *bandwidth;
  if (mode == BandwidthMode::fixed) {
    if (!(b > 0.0) || !std::isfinite(b))
      throw Error(Errc::invalid_bandwidth, "fixed bandwidth must be positive and finite");
    return;
  }
  if (b != std::floor(b) || b < 2.0 || b > static_cast<double>(n - 1))
    throw Error(Errc::invalid_k, "adaptive k must be an integer in [2, n-1], got " +
                                     std::to_string(b));
}

void validate_coords(const Coords& coords) {
  if (coords.rows() < 2) throw Error(Errc::invalid_input, "need at least two locations");
  if (!coords.allFinite()) throw Error(Errc::invalid_input, "non-finite coordinate");
}

Eigen::MatrixXd distance_matrix(const Coords& coords, bool geodesic) {
  const Eigen::Index n = coords.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d p = coords.row(i).transpose();
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = distance<double>(p, coords.row(j).transpose(), geodesic);
      d(j, i) = d(i, j);
    }
  }
  return d;
}

std::vector<Eigen::Index> neighbor_order(Eigen::Index focal, const Eigen::VectorXd& dist_row) {
  std::vector<Eigen::Index> order;
  order.reserve(static_cast<std::size_t>(dist_row.size()));
  for (Eigen::Index j = 0; j < dist_row.size(); ++j)
    if (j != focal) order.push_back(j);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return dist_row(a) < dist_row(b); });
  return order;
}

double adaptive_cutoff(Eigen::Index focal, const Coords& coords, int k, bool geodesic) {
  const Eigen::Index n = coords.rows();
  if (k < 2 || k > n - 1)
    throw Error(Errc::invalid_k, "adaptive k=" + std::to_string(k) + " outside [2, n-1]");
  const Eigen::VectorXd d = distance_row<double>(focal, coords, geodesic);
  const auto order = neighbor_order(focal, d);
  const double cutoff = d(order[static_cast<std::size_t>(k - 1)]);
  if (!(cutoff > 0.0))
    throw Error(Errc::degenerate_geometry,
                "adaptive cutoff is zero at location " + std::to_string(focal) +
                    " (duplicate coordinates)");
  return cutoff;
}

double row_bandwidth(Eigen::Index focal, const Coords& coords, const KernelSpec& spec) {
  spec.validate(coords.rows());
  if (spec.mode == BandwidthMode::fixed) return *spec.bandwidth;
  return adaptive_cutoff(focal, coords, spec.neighbors(), spec.geodesic);
}

Eigen::VectorXd kernel_row(Eigen::Index focal, const Coords& coords, const KernelSpec& spec) {
  const double b = row_bandwidth(focal, coords, spec);
  const Eigen::VectorXd d = distance_row<double>(focal, coords, spec.geodesic);
  Eigen::VectorXd w(d.size());
  for (Eigen::Index j = 0; j < d.size(); ++j) w(j) = kernel_weight(d(j), b, spec.function);
  return w;
}

double max_nearest_neighbor_distance(const Eigen::MatrixXd& dist) {
  const Eigen::Index n = dist.rows();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) nearest = std::min(nearest, dist(i, j));
    worst = std::max(worst, nearest);
  }
  return worst;
}

}  // namespace galax
