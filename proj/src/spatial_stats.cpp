#include "galax/spatial_stats.hpp"

#include <cmath>
#include <limits>

namespace galax {

std::string to_string(PeakRule rule) {
  return rule == PeakRule::first_peak ? "first_peak" : "max_z";
}

Eigen::MatrixXd distance_band_weights(const Eigen::MatrixXd& dist, double threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold))
    throw Error(Errc::invalid_input, "distance band threshold must be positive");
  return ((dist.array() > 0.0) && (dist.array() <= threshold)).cast<double>().matrix();
}

Eigen::MatrixXd distance_band_weights(const Coords& coords, double threshold, bool geodesic) {
  return distance_band_weights(distance_matrix(coords, geodesic), threshold);
}

MoranResult morans_i(const Eigen::VectorXd& values, const Eigen::MatrixXd& weights) {
  const Eigen::Index n = values.size();
  if (n < 2 || weights.rows() != n || weights.cols() != n)
    throw Error(Errc::shape_mismatch, "morans_i: weights must be n x n with n >= 2");
  if (!values.allFinite()) throw Error(Errc::invalid_input, "morans_i: non-finite value");

  const Eigen::VectorXd z = values.array() - values.mean();
  const double m2 = z.squaredNorm();
  if (!(m2 > 0.0) || values.maxCoeff() == values.minCoeff())
    throw Error(Errc::degenerate_variance, "morans_i: all values equal");
  const double s0 = weights.sum();
  if (!(s0 > 0.0)) throw Error(Errc::no_neighbors, "morans_i: weight matrix has no neighbours");

  const double nd = static_cast<double>(n);
  MoranResult r;
  r.I = nd / s0 * z.dot(weights * z) / m2;
  r.expected = -1.0 / (nd - 1.0);
  if (n < 4) {
    r.variance = 0.0;
    r.z = std::numeric_limits<double>::quiet_NaN();
    return r;
  }

  const Eigen::MatrixXd sym = weights + weights.transpose();
  const double s1 = 0.5 * sym.array().square().sum();
  const double s2 = (weights.rowwise().sum() + weights.colwise().sum().transpose()).squaredNorm();
  const double m4 = z.array().pow(4).sum();
  const double b2 = nd * m4 / (m2 * m2);
  const double s0sq = s0 * s0;
  const double num = nd * ((nd * nd - 3.0 * nd + 3.0) * s1 - nd * s2 + 3.0 * s0sq) -
                     b2 * ((nd * nd - nd) * s1 - 2.0 * nd * s2 + 6.0 * s0sq);
  const double den = (nd - 1.0) * (nd - 2.0) * (nd - 3.0) * s0sq;
  r.variance = std::max(0.0, num / den - r.expected * r.expected);
  r.z = r.variance > 0.0 ? (r.I - r.expected) / std::sqrt(r.variance)
                         : std::numeric_limits<double>::quiet_NaN();
  return r;
}

IsaScan isa_scan(const Eigen::VectorXd& y, const Coords& coords, const IsaParams& params,
                 bool geodesic) {
  validate_coords(coords);
  if (y.size() != coords.rows()) throw Error(Errc::shape_mismatch, "isa_scan: y/coords length");
  if (y.size() > 0 && y.maxCoeff() == y.minCoeff())
    throw Error(Errc::degenerate_variance, "isa_scan: all values equal");
  if (params.n_bands < 1) throw Error(Errc::invalid_input, "isa_scan: n_bands must be >= 1");

  const Eigen::MatrixXd dist = distance_matrix(coords, geodesic);
  const double start = params.start ? *params.start : max_nearest_neighbor_distance(dist);
  const double increment =
      params.increment ? *params.increment : (0.5 * dist.maxCoeff() - start) / params.n_bands;
  if (!(start > 0.0) || !(increment > 0.0) || !std::isfinite(start) || !std::isfinite(increment))
    throw Error(Errc::insufficient_bands, "isa_scan: band start and increment must be positive");

  IsaScan scan;
  for (int b = 0; b < params.n_bands; ++b) {
    const double threshold = start + b * increment;
    try {
      scan.bands.push_back({threshold, morans_i(y, distance_band_weights(dist, threshold))});
    } catch (const Error& e) {
      if (e.code() != Errc::no_neighbors) throw;
    }
  }
  std::erase_if(scan.bands, [](const IsaBand& b) { return !std::isfinite(b.moran.z); });
  if (scan.bands.size() < 3)
    throw Error(Errc::insufficient_bands, "isa_scan: fewer than 3 usable distance bands");

  const auto& bands = scan.bands;
  for (std::size_t i = 1; i + 1 < bands.size(); ++i) {
    if (bands[i].moran.z > bands[i - 1].moran.z && bands[i].moran.z > bands[i + 1].moran.z) {
      scan.selected_distance = bands[i].distance;
      scan.selection_rule = PeakRule::first_peak;
      return scan;
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < bands.size(); ++i)
    if (bands[i].moran.z > bands[best].moran.z) best = i;
  scan.selected_distance = bands[best].distance;
  scan.selection_rule = PeakRule::max_z;
  return scan;
}

}  // namespace galax
