#pragma once

#include <stdexcept>
#include <string>

namespace lrcones {

enum class ErrorCode {
  InvalidInput,
  InvalidRank,
  InvalidParams,
  RankExceedsVariety,
  RankTooHigh,
  RankMismatch,
  BudgetExceeded,
  NotInCone,
  NoConvergentSubsequence,
  Io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InvalidRank: return "InvalidRank";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::RankExceedsVariety: return "RankExceedsVariety";
    case ErrorCode::RankTooHigh: return "RankTooHigh";
    case ErrorCode::RankMismatch: return "RankMismatch";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::NotInCone: return "NotInCone";
    case ErrorCode::NoConvergentSubsequence: return "NoConvergentSubsequence";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Library-wide exception; `code()` identifies the violated contract.
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

}  // namespace lrcones
