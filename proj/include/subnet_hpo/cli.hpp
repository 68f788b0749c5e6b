#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "subnet_hpo/error.hpp"
#include "subnet_hpo/experiment.hpp"
#include "subnet_hpo/metrics.hpp"

namespace subnet_hpo {

/// "<scheduler>_seed<seed>_fold<fold>.jsonl"
std::string journal_name(SchedulerKind kind, std::uint64_t seed, std::uint64_t fold);

/// Seed offset from SUBNET_HPO_SEED_OFFSET (0 when unset). Throws
/// ValidationError for a malformed value.
std::uint64_t seed_offset_from_env();

struct RunSummary {
  std::size_t journals = 0;
  std::size_t trials_added = 0;
  std::size_t resumed = 0;  // journals that already existed
};

/// Runs every (seed + offset, fold) of the plan into `out_dir` (the plan's
/// output directory when empty), resuming existing journals. Throws IoError
/// or ResumeMismatch.
RunSummary cmd_run(const ExperimentPlan& plan, const std::filesystem::path& out_dir = {},
                   std::uint64_t seed_offset = 0);

/// Writes the JSON speedup report to `out_file` and one regret CSV per pair
/// next to it. Throws UnpairedRuns naming the missing seed, or IoError.
SpeedupReport cmd_compare(const std::filesystem::path& baseline_dir,
                          const std::filesystem::path& method_dir,
                          const std::filesystem::path& out_file,
                          CrossingRule rule = CrossingRule::conservative);

/// Regret CSV (time, best, regret) of one journal; returns the CSV path.
std::filesystem::path cmd_report(const std::filesystem::path& journal,
                                 const std::filesystem::path& csv_dir);

/// Process exit code for an error: 2 for I/O failures, 1 otherwise.
int exit_code_for(const Error& error);

}  // namespace subnet_hpo
