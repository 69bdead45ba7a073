#include "tndve/errors.hpp"

namespace tndve {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::File: return "FileError";
    case ErrorCode::Schema: return "SchemaError";
    case ErrorCode::Value: return "ValueError";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Separation: return "Separation";
    case ErrorCode::NotConverged: return "NotConverged";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateData: return "DegenerateData";
    case ErrorCode::DegenerateEstimand: return "DegenerateEstimand";
    case ErrorCode::SingularJacobian: return "SingularJacobian";
    case ErrorCode::TooManyFailures: return "TooManyFailures";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::Config: return "ConfigError";
  }
  return "Error";
}

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::File: return 10;
    case ErrorCode::Schema: return 11;
    case ErrorCode::Value: return 12;
    case ErrorCode::RankDeficient: return 20;
    case ErrorCode::Separation: return 21;
    case ErrorCode::NotConverged: return 22;
    case ErrorCode::DimensionMismatch: return 23;
    case ErrorCode::DegenerateData: return 30;
    case ErrorCode::DegenerateEstimand: return 31;
    case ErrorCode::SingularJacobian: return 32;
    case ErrorCode::TooManyFailures: return 40;
    case ErrorCode::UnknownScenario: return 50;
    case ErrorCode::InvalidProbability: return 51;
    case ErrorCode::Config: return 60;
  }
  return 1;
}

}  // namespace tndve
