#include "gridres/error.hpp"

namespace gridres {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::degenerate_window: return "degenerate_window";
    case ErrorCode::empty_benchmark: return "empty_benchmark";
    case ErrorCode::length_mismatch: return "length_mismatch";
    case ErrorCode::undefined_correlation: return "undefined_correlation";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::no_sign_change: return "no_sign_change";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::unknown_id: return "unknown_id";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::numerical_failure: return "numerical_failure";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::config_error: return "config_error";
    case ErrorCode::split_infeasible: return "split_infeasible";
    case ErrorCode::undersized_group: return "undersized_group";
    case ErrorCode::missing_profile: return "missing_profile";
    case ErrorCode::unknown_system: return "unknown_system";
    case ErrorCode::infeasible_target: return "infeasible_target";
    case ErrorCode::schema_mismatch: return "schema_mismatch";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

}  // namespace gridres
