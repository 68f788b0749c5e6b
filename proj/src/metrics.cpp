#include "subnet_hpo/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "subnet_hpo/error.hpp"

namespace subnet_hpo {

namespace {

bool better(double a, double b, Orientation o) {
  return o == Orientation::minimize ? a < b : a > b;
}

}  // namespace

std::optional<double> RegretCurve::first_time_at_most(double level) const {
  for (const auto& s : steps) {
    if (s.regret <= level) return s.time;
  }
  return std::nullopt;
}

std::optional<double> RegretCurve::first_time_below(double level) const {
  for (const auto& s : steps) {
    if (s.regret < level) return s.time;
  }
  return std::nullopt;
}

double best_value(std::span<const TimedValue> values, Orientation orientation) {
  if (values.empty()) throw Error(ErrorCode::empty_history, "no trials");
  double best = values.front().value;
  for (const auto& v : values) {
    if (better(v.value, best, orientation)) best = v.value;
  }
  return best;
}

RegretCurve regret_curve(std::span<const TimedValue> values, Orientation orientation,
                         std::optional<double> reference) {
  if (values.empty()) throw Error(ErrorCode::empty_history, "no trials");
  RegretCurve curve;
  curve.orientation = orientation;
  curve.reference_best = reference.value_or(best_value(values, orientation));
  double best = values.front().value;
  double last_time = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto& v = values[i];
    if (i > 0 && !(v.time > last_time)) {
      throw Error(ErrorCode::validation_error, "regret times must strictly increase");
    }
    last_time = v.time;
    if (better(v.value, best, orientation)) best = v.value;
    const double regret = orientation == Orientation::minimize
                              ? best - curve.reference_best
                              : curve.reference_best - best;
    curve.steps.push_back({v.time, best, regret});
  }
  return curve;
}

std::vector<TimedValue> timed_losses(const History& history, LossView view) {
  std::vector<TimedValue> out;
  out.reserve(history.size());
  for (const auto& r : history.records()) out.push_back({r.cumulative_time, r.loss_for(view)});
  return out;
}

RegretCurve regret_curve(const History& history, Orientation orientation,
                         std::optional<double> reference, LossView view) {
  if (history.empty()) throw Error(ErrorCode::empty_history, "no trials");
  const auto values = timed_losses(history, view);
  return regret_curve(values, orientation, reference);
}

double speedup_at(const RegretCurve& baseline, const RegretCurve& method, double level,
                  CrossingRule rule) {
  if (baseline.steps.empty() || method.steps.empty()) {
    throw Error(ErrorCode::empty_history, "speedup of an empty curve");
  }
  const auto method_time = method.first_time_at_most(level);
  const auto baseline_reach = baseline.first_time_at_most(level);
  if (!method_time || !baseline_reach) {
    throw Error(ErrorCode::level_not_reached,
                "regret level " + std::to_string(level) + " not reached by " +
                    (!baseline_reach ? "the baseline" : "the method"));
  }
  double baseline_time = *baseline_reach;
  if (rule == CrossingRule::aggressive) {
    baseline_time = baseline.first_time_below(level).value_or(baseline.end_time());
  }
  return baseline_time / *method_time;
}

PairReport compare_pair(std::span<const TimedValue> baseline,
                        std::span<const TimedValue> method, Orientation orientation,
                        CrossingRule rule, std::string label) {
  const double b_best = best_value(baseline, orientation);
  const double m_best = best_value(method, orientation);
  const double shared = better(m_best, b_best, orientation) ? m_best : b_best;

  PairReport pair;
  pair.label = std::move(label);
  pair.baseline = regret_curve(baseline, orientation, shared);
  pair.method = regret_curve(method, orientation, shared);

  // Walk the baseline's attained levels: its first step and every improvement.
  const auto& steps = pair.baseline.steps;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (i > 0 && !(steps[i].regret < steps[i - 1].regret)) continue;
    LevelSpeedup ls{};
    ls.level = steps[i].regret;
    ls.baseline_time = steps[i].time;
    const auto reached = pair.method.first_time_at_most(ls.level);
    ls.censored = !reached;
    ls.method_time = reached.value_or(pair.method.end_time());
    if (reached) {
      ls.speedup = speedup_at(pair.baseline, pair.method, ls.level, rule);
    } else {
      double numerator = ls.baseline_time;
      if (rule == CrossingRule::aggressive) {
        numerator = pair.baseline.first_time_below(ls.level).value_or(pair.baseline.end_time());
      }
      ls.speedup = numerator / ls.method_time;
    }
    pair.levels.push_back(ls);
  }
  pair.final_speedup = pair.levels.back().speedup;
  pair.gain = orientation == Orientation::minimize ? b_best - m_best : m_best - b_best;
  return pair;
}

SpeedupReport summarize(const std::vector<std::vector<TimedValue>>& baselines,
                        const std::vector<std::vector<TimedValue>>& methods,
                        Orientation orientation, CrossingRule rule,
                        const std::vector<std::string>& labels) {
  if (baselines.size() != methods.size() || baselines.empty()) {
    throw Error(ErrorCode::unpaired_runs,
                std::to_string(baselines.size()) + " baseline runs vs " +
                    std::to_string(methods.size()) + " method runs");
  }
  SpeedupReport report;
  double level_sum = 0.0;
  std::size_t level_count = 0;
  double final_sum = 0.0;
  double gain_sum = 0.0;
  for (std::size_t k = 0; k < baselines.size(); ++k) {
    PairReport pair = compare_pair(baselines[k], methods[k], orientation, rule,
                                   k < labels.size() ? labels[k] : std::to_string(k));
    for (const auto& ls : pair.levels) {
      level_sum += ls.speedup;
      ++level_count;
      report.max_speedup = std::max(report.max_speedup, ls.speedup);
      if (ls.censored) ++report.censored_levels;
    }
    final_sum += pair.final_speedup;
    gain_sum += pair.gain;
    report.pairs.push_back(std::move(pair));
  }
  const auto n = static_cast<double>(baselines.size());
  report.mean_speedup = level_sum / static_cast<double>(level_count);
  report.final_speedup = final_sum / n;
  report.final_gain = gain_sum / n;
  return report;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::empty_input, "median of nothing");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace subnet_hpo
