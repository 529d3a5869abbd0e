#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gridres {

/// Machine-readable failure category carried by every gridres::Error.
enum class ErrorCode {
  invalid_argument,
  degenerate_window,
  empty_benchmark,
  length_mismatch,
  undefined_correlation,
  infeasible,
  no_sign_change,
  non_finite,
  empty_input,
  unknown_id,
  dimension_mismatch,
  numerical_failure,
  parse_error,
  config_error,
  split_infeasible,
  undersized_group,
  missing_profile,
  unknown_system,
  infeasible_target,
  schema_mismatch,
  io_error,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gridres
