#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace halo {

// Every failure the toolkit raises carries one of these kinds. The CLI maps
// kinds onto its documented exit codes (see exit_code_for).
enum class ErrorKind {
  // data / io
  kMissingFile,
  kSchemaViolation,
  kDuplicateId,
  kIoFailure,
  kAlignmentMismatch,
  kUnscoredRecord,
  kEmptyDataset,
  kEmptySet,
  // numeric / argument
  kNonFiniteInput,
  kNonPositivePhi,
  kDimensionMismatch,
  kZeroVector,
  kDegenerateRange,
  kDegenerateMargin,
  kNonFiniteGradient,
  kInvalidArgument,
  // selection / mitigation
  kAllCandidatesFailed,
  kGenerationFailure,
  kSelectionFailure,
  // backends
  kBackendUnreachable,
  kBackendError,
  kTimeoutExceeded,
  kInvalidScore,
  kDimensionInconsistent,
  kScoringUnsupported,
  kLidUnavailable,
  // configuration
  kConfigInvalid,
  // verification
  kVerificationFailure,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// SchemaViolation carries the 1-based line number and offending field.
class SchemaViolation : public Error {
 public:
  SchemaViolation(std::size_t line, std::string field, const std::string& why)
      : Error(ErrorKind::kSchemaViolation,
              "line " + std::to_string(line) + ", field \"" + field + "\": " + why),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// Documented CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBackend = 3;
inline constexpr int kExitData = 4;
inline constexpr int kExitVerification = 5;

int exit_code_for(ErrorKind kind);

}  // namespace halo
