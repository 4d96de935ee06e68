#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace l2disc {

enum class ErrorCode {
  kParse,
  kNonFinite,
  kColumnNormExceeded,
  kIo,
  kInvalidArgument,
  kConstraintBudgetExceeded,
  kUvcInfeasible,
  kNumericalFailure,
  kCertificationFailed,
  kStepOverflow,
  kMaxStepsExceeded,
  kInvalidCover,
  kNotImplemented,
  kTimeout,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kNonFinite: return "NonFiniteEntry";
    case ErrorCode::kColumnNormExceeded: return "ColumnNormExceeded";
    case ErrorCode::kIo: return "IoError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConstraintBudgetExceeded: return "ConstraintBudgetExceeded";
    case ErrorCode::kUvcInfeasible: return "UvcInfeasible";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kCertificationFailed: return "CertificationFailed";
    case ErrorCode::kStepOverflow: return "StepOverflow";
    case ErrorCode::kMaxStepsExceeded: return "MaxStepsExceeded";
    case ErrorCode::kInvalidCover: return "InvalidCover";
    case ErrorCode::kNotImplemented: return "NotImplemented";
    case ErrorCode::kTimeout: return "Timeout";
  }
  return "Unknown";
}

/// Base of every error thrown by the library. The code is stable and is what
/// callers (and the CLI exit path) should switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ColumnNormExceeded : public Error {
 public:
  ColumnNormExceeded(std::size_t column, double norm)
      : Error(ErrorCode::kColumnNormExceeded,
              "column " + std::to_string(column) + " has norm " + std::to_string(norm)),
        column_(column),
        norm_(norm) {}

  std::size_t column() const noexcept { return column_; }
  double norm() const noexcept { return norm_; }

 private:
  std::size_t column_;
  double norm_;
};

struct FamilyCounts {
  std::size_t row = 0;
  std::size_t singular = 0;
  std::size_t ortho = 0;
  std::size_t heavy_row = 0;
  std::size_t global_singular = 0;
  std::size_t support_drop = 0;

  std::size_t total() const {
    return row + singular + ortho + heavy_row + global_singular + support_drop;
  }
};

class ConstraintBudgetExceeded : public Error {
 public:
  ConstraintBudgetExceeded(const FamilyCounts& counts, std::size_t active)
      : Error(ErrorCode::kConstraintBudgetExceeded,
              std::to_string(counts.total()) + " constraints for " + std::to_string(active) +
                  " active (row=" + std::to_string(counts.row) +
                  " singular=" + std::to_string(counts.singular) +
                  " ortho=" + std::to_string(counts.ortho) +
                  " heavy_row=" + std::to_string(counts.heavy_row) +
                  " global_singular=" + std::to_string(counts.global_singular) + ")"),
        counts_(counts),
        active_(active) {}

  const FamilyCounts& counts() const noexcept { return counts_; }
  std::size_t active() const noexcept { return active_; }

 private:
  FamilyCounts counts_;
  std::size_t active_;
};

}  // namespace l2disc
