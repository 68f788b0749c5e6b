#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subnet_hpo/rng.hpp"
#include "subnet_hpo/space.hpp"
#include "subnet_hpo/surrogate.hpp"
#include "subnet_hpo/tpe.hpp"

namespace subnet_hpo {

enum class PlanKind { complete, transfer };

struct TrainingPlan {
  PlanKind kind = PlanKind::complete;
  /// Subnet group -> id of the trial whose trained state is reused, frozen.
  std::map<GroupId, std::size_t> frozen_sources;

  static TrainingPlan complete() { return {}; }
  bool operator==(const TrainingPlan&) const = default;
};

struct Proposal {
  Configuration config;
  TrainingPlan plan;
  std::string branch;
};

/// Which loss a view of the history reads: the auxiliary-augmented total l
/// or the merged model's own loss l_M.
enum class LossView { total, merge };

struct TrialRecord {
  std::size_t id = 0;
  Configuration config;
  TrainingPlan plan;
  double loss = 0.0;        // l = l_M + lambda * sum_i l_i
  double merge_loss = 0.0;  // l_M
  std::vector<double> group_losses;
  std::map<GroupId, QualityState> states;
  double cost = 0.0;
  double cumulative_time = 0.0;
  std::string branch;
  std::uint64_t rng_seed = 0;   // key this trial's generator was seeded with
  std::uint64_t rng_state = 0;  // key-stream state after the trial

  double loss_for(LossView view) const {
    return view == LossView::total ? loss : merge_loss;
  }
  bool trained_unfrozen(GroupId group) const {
    return !plan.frozen_sources.contains(group);
  }
  bool operator==(const TrialRecord&) const = default;
};

/// Ordered trial records plus the derived views the schedulers consume.
class History {
 public:
  History() = default;
  explicit History(std::vector<TrialRecord> records);

  const std::vector<TrialRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  const TrialRecord& at(std::size_t id) const;
  const TrialRecord& back() const { return records_.back(); }
  double elapsed() const noexcept {
    return records_.empty() ? 0.0 : records_.back().cumulative_time;
  }

  /// Throws if the id is out of sequence or cumulative time does not grow.
  void append(TrialRecord record);

  bool has_complete_trial() const;

  /// Trials that trained `group` from scratch (not frozen).
  std::vector<std::size_t> trained_trials(GroupId group) const;
  /// Distinct assignments of `group` among trained_trials, in first-seen order.
  std::vector<Assignment> distinct_assignments(const GroupedConfigSpace& space,
                                               GroupId group) const;
  /// Among the trials that trained `part` unfrozen, the one with the lowest
  /// loss for `group` (earliest on ties).
  std::optional<std::size_t> best_source(const GroupedConfigSpace& space,
                                         GroupId group, const Assignment& part) const;

  /// C^T and L^T.
  ObservationSet observations(LossView view = LossView::total) const;
  /// Group assignments and per-group losses of trained_trials(group).
  ObservationSet group_observations(const GroupedConfigSpace& space,
                                    GroupId group) const;

 private:
  std::vector<TrialRecord> records_;
};

struct SchedulerParams {
  double v = 1.0 / 3.0;     // exploration probability
  double o = 0.2;           // complete-training probability
  double lambda_aux = 0.1;  // auxiliary per-subnet loss weight
  TpeParams tpe;
  /// Trials required before TPE over the full space; defaults to dim(C) + 1.
  std::optional<std::size_t> min_complete;

  void validate() const;
  std::size_t full_gate(const GroupedConfigSpace& space) const;
};

/// Per-subnet importance probabilities, summing to one.
struct ImportanceVector {
  std::vector<double> p;
};

double combine_loss(double merge_loss, std::span<const double> group_losses,
                    double lambda_aux);

Proposal random_step(const GroupedConfigSpace& space, Rng& rng);
/// The baseline fits TPE to l_M; it trains no auxiliary heads.
Proposal bo_step(const History& history, const GroupedConfigSpace& space,
                 const SchedulerParams& params, Rng& rng);
Proposal dcbo_step(const History& history, const GroupedConfigSpace& space,
                   const SchedulerParams& params, Rng& rng);
Proposal sabo_step(const History& history, const GroupedConfigSpace& space,
                   const SchedulerParams& params, const ImportanceVector& importance,
                   Rng& rng);

/// 90th percentile of -l_i per fold (linear interpolation), averaged across
/// folds, shifted to a zero minimum and normalized with a 1e-6 floor.
/// Throws NoGroupLosses.
ImportanceVector sabo_importance(std::span<const History* const> folds,
                                 int group_count);
ImportanceVector sabo_importance(const History& history, int group_count);

/// Linear-interpolation percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

/// Evaluates the proposal and appends the record. Throws UnknownSourceTrial.
const TrialRecord& execute_trial(const Proposal& proposal,
                                 const SurrogateObjective& objective,
                                 History& history, const SchedulerParams& params,
                                 Rng& rng);

enum class SchedulerKind { random, bo, dcbo, sabo };
std::string to_string(SchedulerKind kind);
std::optional<SchedulerKind> parse_scheduler(const std::string& name);

/// Everything a run needs to continue: its history and key stream.
struct RunState {
  History history;
  KeyStream keys;
};

using TrialCallback = std::function<void(const TrialRecord&)>;

/// Continues `state` until the budget is spent: a new trial starts only while
/// the elapsed resource total is below `budget`. Throws BudgetTooSmall.
void run_until(SchedulerKind kind, const SurrogateObjective& objective,
               const SchedulerParams& params, double budget, RunState& state,
               const TrialCallback& on_trial = {});

History run(SchedulerKind kind, const SurrogateObjective& objective,
            const SchedulerParams& params, double budget, std::uint64_t seed,
            std::uint64_t fold = 0);

/// Upper bound T^(I-1) on the divide-and-conquer speedup.
double max_speedup_bound(std::uint64_t complete_models, int subnet_count);
/// T^I - T cross-parent combinations.
std::uint64_t transfer_combo_count(std::uint64_t complete_models, int subnet_count);

/// Fraction of the total resource spent training the listed groups from
/// scratch.
double fresh_training_share(const History& history, const SurrogateObjective& objective,
                            std::span<const GroupId> groups);

}  // namespace subnet_hpo
