#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pidlab {

enum class ErrorCode {
  invalid_argument,
  unknown_value,
  out_of_range,
  schema,
  duplicate,
  missing_condition,
  empty_input,
  invalid_distribution,
  infeasible,
  too_many_parameters,
  input_not_found,
};

/// Machine-readable name used in CLI error objects.
inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::unknown_value: return "unknown-value";
    case ErrorCode::out_of_range: return "out-of-range";
    case ErrorCode::schema: return "schema";
    case ErrorCode::duplicate: return "duplicate";
    case ErrorCode::missing_condition: return "missing-condition";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::invalid_distribution: return "invalid-distribution";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::too_many_parameters: return "too-many-parameters";
    case ErrorCode::input_not_found: return "input-not-found";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pidlab
