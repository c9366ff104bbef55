#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace galax {

enum class Errc {
  invalid_input,
  invalid_bandwidth,
  invalid_k,
  degenerate_geometry,
  degenerate_variance,
  no_neighbors,
  insufficient_bands,
  empty_training_set,
  shape_mismatch,
  fold_degeneracy,
  too_few_samples,
  no_viable_model,
  bandwidth_search_failed,
  use_sampled_mode,
  class_out_of_range,
  location_range,
  metric_undefined,
  engine_failure,
  missing_column,
  nonfinite_value,
  geometry_kind,
  unsupported_version,
  integrity,
  io,
  usage,
};

/// Coarse grouping of error codes; the CLI maps each onto an exit status.
enum class ErrorCategory { usage, data, engine, archive };

std::string_view code_name(Errc code) noexcept;
ErrorCategory category(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace galax
