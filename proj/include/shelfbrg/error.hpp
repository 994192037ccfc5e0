#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shelfbrg {

enum class ErrorCode {
  SchemaError,
  ValidationError,
  GenerationExhausted,
  MissingBox,
  CyclicDependencies,
  PlanDictionaryMismatch,
  InvalidK,
  EmptyCluster,
  EmptyScene,
  SessionNotFound,
  NoPlan,
  PlanExhausted,
  ReplayMismatch,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::GenerationExhausted: return "GenerationExhausted";
    case ErrorCode::MissingBox: return "MissingBox";
    case ErrorCode::CyclicDependencies: return "CyclicDependencies";
    case ErrorCode::PlanDictionaryMismatch: return "PlanDictionaryMismatch";
    case ErrorCode::InvalidK: return "InvalidK";
    case ErrorCode::EmptyCluster: return "EmptyCluster";
    case ErrorCode::EmptyScene: return "EmptyScene";
    case ErrorCode::SessionNotFound: return "SessionNotFound";
    case ErrorCode::NoPlan: return "NoPlan";
    case ErrorCode::PlanExhausted: return "PlanExhausted";
    case ErrorCode::ReplayMismatch: return "ReplayMismatch";
  }
  return "UnknownError";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI and HTTP layers can map it to an exit status / response code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace shelfbrg
