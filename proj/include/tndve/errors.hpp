#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tndve {

// Every failure surfaced by the library carries one of these codes. The CLI
// maps them 1:1 onto process exit codes (see exit_code()).
enum class ErrorCode {
  File,
  Schema,
  Value,
  RankDeficient,
  Separation,
  NotConverged,
  DimensionMismatch,
  DegenerateData,
  DegenerateEstimand,
  SingularJacobian,
  TooManyFailures,
  UnknownScenario,
  InvalidProbability,
  Config,
};

std::string_view error_name(ErrorCode code) noexcept;

// Process exit code for an error class. 0 is success and 1 is reserved for
// unexpected (non-library) failures.
int exit_code(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tndve
