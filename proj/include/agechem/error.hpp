#pragma once

#include <stdexcept>
#include <string>

namespace agechem {

enum class ErrorCode {
  Argument = 1,
  Domain,
  Config,
  Convergence,
  ContractionViolation,
  RefineGrid,
  Numeric,
  Io,
  Splice,
  Stability,
  Construction,
};

const char* to_string(ErrorCode code) noexcept;

// Single exception type for the library; the code is what the C API reports.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace agechem
