#include "galax/dataset.hpp"

#include <cmath>
#include <set>

#include "galax/error.hpp"

namespace galax {

void Dataset::validate(int min_local_samples) const {
  const Eigen::Index n = X.rows();
  if (coords.rows() != n || y.size() != n)
    throw Error(Errc::shape_mismatch, "dataset: coords, X and y disagree on row count");
  if (X.cols() < 1) throw Error(Errc::invalid_input, "dataset: need at least one feature");
  if (static_cast<Eigen::Index>(feature_names.size()) != X.cols())
    throw Error(Errc::invalid_input, "dataset: one name per feature column required");
  if (std::set<std::string>(feature_names.begin(), feature_names.end()).size() !=
      feature_names.size())
    throw Error(Errc::invalid_input, "dataset: feature names must be unique");
  const Eigen::Index needed = std::max<Eigen::Index>(10, min_local_samples);
  if (n < needed)
    throw Error(Errc::too_few_samples, "dataset: " + std::to_string(n) +
                                           " rows, need at least " + std::to_string(needed));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!coords.row(i).allFinite() || !X.row(i).allFinite() || !std::isfinite(y(i)))
      throw Error(Errc::nonfinite_value, "dataset: non-finite value in row " + std::to_string(i));
  }
  if (task.is_classification()) {
    if (task.n_classes < 2)
      throw Error(Errc::invalid_input, "dataset: classification needs at least two classes");
    for (Eigen::Index i = 0; i < n; ++i)
      if (y(i) < 0 || y(i) >= task.n_classes || y(i) != std::floor(y(i)))
        throw Error(Errc::invalid_input, "dataset: class label out of range in row " + std::to_string(i));
  }
}

std::string to_string(BandwidthMethod method) {
  switch (method) {
    case BandwidthMethod::preset: return "preset";
    case BandwidthMethod::isa: return "isa";
    case BandwidthMethod::performance: return "performance";
  }
  return "unknown";
}

BandwidthMethod parse_bandwidth_method(const std::string& name) {
  for (BandwidthMethod m : {BandwidthMethod::preset, BandwidthMethod::isa, BandwidthMethod::performance})
    if (to_string(m) == name) return m;
  throw Error(Errc::invalid_input, "unknown bandwidth method '" + name + "'");
}

BandwidthMethod GalaxConfig::resolved_bw_method(const Task& task) const {
  if (kernel.has_bandwidth()) return BandwidthMethod::preset;
  if (bw_method && *bw_method != BandwidthMethod::preset) return *bw_method;
  return task.is_classification() ? BandwidthMethod::performance : BandwidthMethod::isa;
}

void GalaxConfig::validate(const Task& task) const {
  automl.validate(task);
  if (!(weight_floor >= 0.0 && weight_floor < 1.0))
    throw Error(Errc::invalid_input, "weight_floor must be in [0, 1)");
  if (threads < 1) throw Error(Errc::invalid_input, "threads must be >= 1");
  if (explain.background_size < 1)
    throw Error(Errc::invalid_input, "background_size must be >= 1");
  if (explain.mode == ExplainMode::sampled && explain.n_permutations < 10)
    throw Error(Errc::invalid_input, "sampled explanations need n_permutations >= 10");
}

bool same_settings(const GalaxConfig& a, const GalaxConfig& b) {
  return a.kernel == b.kernel && a.bw_method == b.bw_method && a.isa == b.isa &&
         a.automl == b.automl && a.explain == b.explain && a.weight_floor == b.weight_floor &&
         a.master_seed == b.master_seed;
}

}  // namespace galax
