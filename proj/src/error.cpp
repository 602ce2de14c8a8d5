#include "halo/error.hpp"

namespace halo {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kMissingFile: return "MissingFile";
    case ErrorKind::kSchemaViolation: return "SchemaViolation";
    case ErrorKind::kDuplicateId: return "DuplicateId";
    case ErrorKind::kIoFailure: return "IoFailure";
    case ErrorKind::kAlignmentMismatch: return "AlignmentMismatch";
    case ErrorKind::kUnscoredRecord: return "UnscoredRecord";
    case ErrorKind::kEmptyDataset: return "EmptyDataset";
    case ErrorKind::kEmptySet: return "EmptySet";
    case ErrorKind::kNonFiniteInput: return "NonFiniteInput";
    case ErrorKind::kNonPositivePhi: return "NonPositivePhi";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kZeroVector: return "ZeroVector";
    case ErrorKind::kDegenerateRange: return "DegenerateRange";
    case ErrorKind::kDegenerateMargin: return "DegenerateMargin";
    case ErrorKind::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kAllCandidatesFailed: return "AllCandidatesFailed";
    case ErrorKind::kGenerationFailure: return "GenerationFailure";
    case ErrorKind::kSelectionFailure: return "SelectionFailure";
    case ErrorKind::kBackendUnreachable: return "BackendUnreachable";
    case ErrorKind::kBackendError: return "BackendError";
    case ErrorKind::kTimeoutExceeded: return "TimeoutExceeded";
    case ErrorKind::kInvalidScore: return "InvalidScore";
    case ErrorKind::kDimensionInconsistent: return "DimensionInconsistent";
    case ErrorKind::kScoringUnsupported: return "ScoringUnsupported";
    case ErrorKind::kLidUnavailable: return "LidUnavailable";
    case ErrorKind::kConfigInvalid: return "ConfigInvalid";
    case ErrorKind::kVerificationFailure: return "VerificationFailure";
  }
  return "Unknown";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfigInvalid:
    case ErrorKind::kInvalidArgument:
      return kExitConfig;
    case ErrorKind::kBackendUnreachable:
    case ErrorKind::kBackendError:
    case ErrorKind::kTimeoutExceeded:
    case ErrorKind::kInvalidScore:
    case ErrorKind::kDimensionInconsistent:
    case ErrorKind::kScoringUnsupported:
    case ErrorKind::kLidUnavailable:
    case ErrorKind::kGenerationFailure:
    case ErrorKind::kAllCandidatesFailed:
    case ErrorKind::kSelectionFailure:
      return kExitBackend;
    case ErrorKind::kVerificationFailure:
    case ErrorKind::kNonFiniteGradient:
      return kExitVerification;
    default:
      return kExitData;
  }
}

}  // namespace halo
