#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hwu {

enum class ErrorCode {
  invalid_input,
  invalid_parameter,
  degenerate_phenotype,
  degenerate_weight,
  singular_covariates,
  singular_fit,
  non_converged,
  parse_error,
  io_error,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception type for every recoverable failure raised by the library.
/// The scan layer inspects code() to decide between skipping a variant and
/// aborting the run.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hwu
