#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "subnet_hpo/sched.hpp"
#include "subnet_hpo/surrogate.hpp"

namespace subnet_hpo {

/// A validated experiment: the problem, one scheduler and its settings, the
/// budget and the seeds to run.
struct ExperimentPlan {
  std::optional<std::string> benchmark;  // empty for an inline problem
  Benchmark problem;
  SchedulerKind scheduler = SchedulerKind::dcbo;
  SchedulerParams params{};
  double budget = 0.0;
  std::vector<std::uint64_t> seeds{};
  std::uint64_t folds = 1;
  std::filesystem::path output = "runs";

  /// Everything that shapes a single run's trials (not seeds, folds or the
  /// output directory), in canonical form.
  nlohmann::json canonical() const;
  /// Hex FNV-1a of canonical(); stored in every journal header.
  std::string digest() const;
};

/// Validates a parsed document. Throws UnknownKey or ValidationError, each
/// naming the offending key.
ExperimentPlan plan_from_json(const nlohmann::json& doc);

/// TOML tables become JSON objects, arrays stay arrays. Throws ParseError.
nlohmann::json toml_to_json(const std::string& text);

/// Format picked by extension: .toml, otherwise JSON. Throws IoError,
/// ParseError, UnknownKey or ValidationError.
ExperimentPlan parse_experiment_config(const std::filesystem::path& path);

}  // namespace subnet_hpo
