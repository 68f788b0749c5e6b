#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace subnet_hpo {

enum class ErrorCode {
  // space
  duplicate_name,
  empty_group,
  bad_bounds,
  unknown_group,
  missing_group,
  overlapping_names,
  invalid_configuration,
  // tpe
  empty_input,
  empty_observations,
  dimension_mismatch,
  insufficient_observations,
  empty_restriction,
  // surrogate
  group_count_mismatch,
  hash_mismatch,
  // sched
  no_group_losses,
  unknown_source_trial,
  budget_too_small,
  // metrics
  empty_history,
  level_not_reached,
  unpaired_runs,
  // cli
  parse_error,
  unknown_key,
  validation_error,
  resume_mismatch,
  io_error,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace subnet_hpo
