#include "agechem/error.hpp"

namespace agechem {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Argument: return "argument error";
    case ErrorCode::Domain: return "domain error";
    case ErrorCode::Config: return "configuration error";
    case ErrorCode::Convergence: return "convergence error";
    case ErrorCode::ContractionViolation: return "contraction violation";
    case ErrorCode::RefineGrid: return "refine-grid error";
    case ErrorCode::Numeric: return "numeric error";
    case ErrorCode::Io: return "i/o error";
    case ErrorCode::Splice: return "splice error";
    case ErrorCode::Stability: return "stability error";
    case ErrorCode::Construction: return "construction error";
  }
  return "unknown error";
}

}  // namespace agechem
