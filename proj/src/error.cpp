#include "subnet_hpo/error.hpp"

namespace subnet_hpo {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::duplicate_name: return "DuplicateName";
    case ErrorCode::empty_group: return "EmptyGroup";
    case ErrorCode::bad_bounds: return "BadBounds";
    case ErrorCode::unknown_group: return "UnknownGroup";
    case ErrorCode::missing_group: return "MissingGroup";
    case ErrorCode::overlapping_names: return "OverlappingNames";
    case ErrorCode::invalid_configuration: return "InvalidConfiguration";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::empty_observations: return "EmptyObservations";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::insufficient_observations: return "InsufficientObservations";
    case ErrorCode::empty_restriction: return "EmptyRestriction";
    case ErrorCode::group_count_mismatch: return "GroupCountMismatch";
    case ErrorCode::hash_mismatch: return "HashMismatch";
    case ErrorCode::no_group_losses: return "NoGroupLosses";
    case ErrorCode::unknown_source_trial: return "UnknownSourceTrial";
    case ErrorCode::budget_too_small: return "BudgetTooSmall";
    case ErrorCode::empty_history: return "EmptyHistory";
    case ErrorCode::level_not_reached: return "LevelNotReached";
    case ErrorCode::unpaired_runs: return "UnpairedRuns";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::unknown_key: return "UnknownKey";
    case ErrorCode::validation_error: return "ValidationError";
    case ErrorCode::resume_mismatch: return "ResumeMismatch";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

}  // namespace subnet_hpo
