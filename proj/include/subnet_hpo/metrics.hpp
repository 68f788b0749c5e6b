#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subnet_hpo/sched.hpp"

namespace subnet_hpo {

enum class Orientation { minimize, maximize };

struct TimedValue {
  double time;
  double value;
};

struct RegretStep {
  double time;
  double best_so_far;
  double regret;
};

/// Step function: each value holds until the next step's time.
struct RegretCurve {
  std::vector<RegretStep> steps;
  Orientation orientation = Orientation::minimize;
  double reference_best = 0.0;

  double final_best() const { return steps.back().best_so_far; }
  double final_regret() const { return steps.back().regret; }
  double end_time() const { return steps.back().time; }
  /// First time the regret is <= level, if ever.
  std::optional<double> first_time_at_most(double level) const;
  /// First time the regret is < level, if ever.
  std::optional<double> first_time_below(double level) const;
};

/// Best value of the sequence in its orientation. Throws EmptyHistory.
double best_value(std::span<const TimedValue> values, Orientation orientation);

/// Regret against `reference` (default: the sequence's own final best).
/// Throws EmptyHistory.
RegretCurve regret_curve(std::span<const TimedValue> values, Orientation orientation,
                         std::optional<double> reference = std::nullopt);
/// Each trial's loss at its cumulative time. Comparisons default to the
/// merged model's loss, which every scheduler is judged on.
RegretCurve regret_curve(const History& history, Orientation orientation = Orientation::minimize,
                         std::optional<double> reference = std::nullopt,
                         LossView view = LossView::merge);
std::vector<TimedValue> timed_losses(const History& history, LossView view = LossView::merge);

enum class CrossingRule {
  conservative,  // baseline's first time at regret <= G
  aggressive,    // baseline's first time strictly below G (or its end time)
};

/// Baseline first-crossing time of `level` over the method's. Throws
/// LevelNotReached when either curve never reaches the level.
double speedup_at(const RegretCurve& baseline, const RegretCurve& method, double level,
                  CrossingRule rule = CrossingRule::conservative);

struct LevelSpeedup {
  double level;
  double baseline_time;
  double method_time;  // method's end time when censored
  double speedup;
  bool censored;  // the method never reached the level within its run
};

struct PairReport {
  std::string label;
  RegretCurve baseline;
  RegretCurve method;
  std::vector<LevelSpeedup> levels;  // one per baseline attained level
  double final_speedup;
  double gain;  // baseline final best - method final best, orientation aware
};

struct SpeedupReport {
  double mean_speedup = 0.0;
  double max_speedup = 0.0;
  double final_speedup = 0.0;
  double final_gain = 0.0;
  std::size_t censored_levels = 0;
  std::vector<PairReport> pairs;
};

/// Baseline and method histories of one fold, compared on a shared reference
/// (the best value either run saw).
PairReport compare_pair(std::span<const TimedValue> baseline,
                        std::span<const TimedValue> method, Orientation orientation,
                        CrossingRule rule = CrossingRule::conservative,
                        std::string label = {});

/// Aggregates paired folds. Throws UnpairedRuns when the counts differ.
SpeedupReport summarize(const std::vector<std::vector<TimedValue>>& baselines,
                        const std::vector<std::vector<TimedValue>>& methods,
                        Orientation orientation = Orientation::minimize,
                        CrossingRule rule = CrossingRule::conservative,
                        const std::vector<std::string>& labels = {});

double median(std::vector<double> values);

}  // namespace subnet_hpo
