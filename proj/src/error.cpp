#include "galax/error.hpp"

namespace galax {

std::string_view code_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_input: return "E_INVALID_INPUT";
    case Errc::invalid_bandwidth: return "E_INVALID_BANDWIDTH";
    case Errc::invalid_k: return "E_INVALID_K";
    case Errc::degenerate_geometry: return "E_DEGENERATE_GEOMETRY";
    case Errc::degenerate_variance: return "E_DEGENERATE_VARIANCE";
    case Errc::no_neighbors: return "E_NO_NEIGHBORS";
    case Errc::insufficient_bands: return "E_INSUFFICIENT_BANDS";
    case Errc::empty_training_set: return "E_EMPTY_TRAINING_SET";
    case Errc::shape_mismatch: return "E_SHAPE";
    case Errc::fold_degeneracy: return "E_FOLD_DEGENERACY";
    case Errc::too_few_samples: return "E_TOO_FEW_SAMPLES";
    case Errc::no_viable_model: return "E_NO_VIABLE_MODEL";
    case Errc::bandwidth_search_failed: return "E_BANDWIDTH_SEARCH_FAILED";
    case Errc::use_sampled_mode: return "E_USE_SAMPLED_MODE";
    case Errc::class_out_of_range: return "E_CLASS_RANGE";
    case Errc::location_range: return "E_LOC_RANGE";
    case Errc::metric_undefined: return "E_METRIC_UNDEFINED";
    case Errc::engine_failure: return "E_ENGINE";
    case Errc::missing_column: return "E_MISSING_COLUMN";
    case Errc::nonfinite_value: return "E_NONFINITE";
    case Errc::geometry_kind: return "E_GEOMETRY_KIND";
    case Errc::unsupported_version: return "E_UNSUPPORTED_VERSION";
    case Errc::integrity: return "E_INTEGRITY";
    case Errc::io: return "E_IO";
    case Errc::usage: return "E_USAGE";
  }
  return "E_UNKNOWN";
}

ErrorCategory category(Errc code) noexcept {
  switch (code) {
    case Errc::usage:
      return ErrorCategory::usage;
    case Errc::invalid_input:
    case Errc::missing_column:
    case Errc::nonfinite_value:
    case Errc::geometry_kind:
    case Errc::too_few_samples:
    case Errc::io:
      return ErrorCategory::data;
    case Errc::unsupported_version:
    case Errc::integrity:
      return ErrorCategory::archive;
    default:
      return ErrorCategory::engine;
  }
}

}  // namespace galax
