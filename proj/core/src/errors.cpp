#include "hwu/errors.hpp"

namespace hwu {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::invalid_parameter: return "invalid_parameter";
    case ErrorCode::degenerate_phenotype: return "degenerate_phenotype";
    case ErrorCode::degenerate_weight: return "degenerate_weight";
    case ErrorCode::singular_covariates: return "singular_covariates";
    case ErrorCode::singular_fit: return "singular_fit";
    case ErrorCode::non_converged: return "non_converged";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

}  // namespace hwu
