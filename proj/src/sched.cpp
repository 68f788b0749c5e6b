#include "subnet_hpo/sched.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "subnet_hpo/error.hpp"

namespace subnet_hpo {

// ---------------------------------------------------------------------------
// History

History::History(std::vector<TrialRecord> records) {
  for (auto& r : records) append(std::move(r));
}

const TrialRecord& History::at(std::size_t id) const {
  if (id >= records_.size()) {
    throw Error(ErrorCode::unknown_source_trial,
                "trial " + std::to_string(id) + " not in history");
  }
  return records_[id];
}

void History::append(TrialRecord record) {
  if (record.id != records_.size()) {
    throw Error(ErrorCode::validation_error,
                "trial id " + std::to_string(record.id) + " out of sequence");
  }
  if (!(record.cost > 0.0) ||
      (!records_.empty() && !(record.cumulative_time > records_.back().cumulative_time))) {
    throw Error(ErrorCode::validation_error,
                "trial " + std::to_string(record.id) + " does not advance time");
  }
  records_.push_back(std::move(record));
}

bool History::has_complete_trial() const {
  return std::any_of(records_.begin(), records_.end(), [](const TrialRecord& r) {
    return r.plan.kind == PlanKind::complete;
  });
}

std::vector<std::size_t> History::trained_trials(GroupId group) const {
  std::vector<std::size_t> out;
  for (const auto& r : records_) {
    if (r.trained_unfrozen(group)) out.push_back(r.id);
  }
  return out;
}

std::vector<Assignment> History::distinct_assignments(const GroupedConfigSpace& space,
                                                      GroupId group) const {
  std::vector<Assignment> out;
  std::set<std::string> seen;
  for (std::size_t id : trained_trials(group)) {
    Assignment part = space.project(records_[id].config, group);
    if (seen.insert(canonical_text(part)).second) out.push_back(std::move(part));
  }
  return out;
}

std::optional<std::size_t> History::best_source(const GroupedConfigSpace& space,
                                                GroupId group,
                                                const Assignment& part) const {
  const std::string key = canonical_text(part);
  const auto slot = static_cast<std::size_t>(group.index() - 1);
  std::optional<std::size_t> best;
  for (std::size_t id : trained_trials(group)) {
    const auto& r = records_[id];
    if (canonical_text(space.project(r.config, group)) != key) continue;
    if (!best || r.group_losses[slot] < records_[*best].group_losses[slot]) best = id;
  }
  return best;
}

ObservationSet History::observations(LossView view) const {
  ObservationSet obs;
  for (const auto& r : records_) {
    obs.configs.push_back(r.config);
    obs.losses.push_back(r.loss_for(view));
  }
  return obs;
}

ObservationSet History::group_observations(const GroupedConfigSpace& space,
                                           GroupId group) const {
  ObservationSet obs;
  const auto slot = static_cast<std::size_t>(group.index() - 1);
  for (std::size_t id : trained_trials(group)) {
    obs.configs.push_back(space.project(records_[id].config, group));
    obs.losses.push_back(records_[id].group_losses[slot]);
  }
  return obs;
}

// ---------------------------------------------------------------------------
// Parameters and small formulas

void SchedulerParams::validate() const {
  if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::validation_error, "v must lie in [0, 1]");
  if (!(o >= 0.0 && o <= 1.0)) throw Error(ErrorCode::validation_error, "o must lie in [0, 1]");
  if (!(lambda_aux >= 0.0)) {
    throw Error(ErrorCode::validation_error, "lambda_aux must be >= 0");
  }
  tpe.validate();
}

std::size_t SchedulerParams::full_gate(const GroupedConfigSpace& space) const {
  const std::size_t minimum = space.dim() + 1;
  if (min_complete && *min_complete < minimum) {
    throw Error(ErrorCode::validation_error,
                "min_complete must be at least dim(C) + 1 = " + std::to_string(minimum));
  }
  return min_complete.value_or(minimum);
}

double combine_loss(double merge_loss, std::span<const double> group_losses,
                    double lambda_aux) {
  double sum = 0.0;
  for (double l : group_losses) sum += l;
  return merge_loss + lambda_aux * sum;
}

double max_speedup_bound(std::uint64_t complete_models, int subnet_count) {
  return std::pow(static_cast<double>(complete_models), subnet_count - 1);
}

std::uint64_t transfer_combo_count(std::uint64_t complete_models, int subnet_count) {
  std::uint64_t total = 1;
  for (int i = 0; i < subnet_count; ++i) total *= complete_models;
  return total - complete_models;
}

std::string to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::random: return "random";
    case SchedulerKind::bo: return "bo";
    case SchedulerKind::dcbo: return "dcbo";
    case SchedulerKind::sabo: return "sabo";
  }
  return "unknown";
}

std::optional<SchedulerKind> parse_scheduler(const std::string& name) {
  for (auto kind : {SchedulerKind::random, SchedulerKind::bo, SchedulerKind::dcbo,
                    SchedulerKind::sabo}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Steps

namespace {

Proposal random_complete(const GroupedConfigSpace& space, Rng& rng, std::string branch) {
  return Proposal{space.sample_uniform(rng), TrainingPlan::complete(), std::move(branch)};
}

bool group_ready(const History& history, const GroupedConfigSpace& space) {
  for (GroupId g : space.subnet_groups()) {
    if (history.distinct_assignments(space, g).size() <= space.dim(g)) return false;
  }
  return true;
}

TrainingPlan plan_from(std::map<GroupId, std::size_t> frozen) {
  TrainingPlan plan;
  plan.kind = frozen.empty() ? PlanKind::complete : PlanKind::transfer;
  plan.frozen_sources = std::move(frozen);
  return plan;
}

std::size_t pick(std::size_t n, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Freezes every restricted group at the best trial that trained its chosen
// assignment.
std::map<GroupId, std::size_t> frozen_for(const History& history,
                                          const GroupedConfigSpace& space,
                                          const Configuration& config,
                                          const std::vector<GroupId>& groups) {
  std::map<GroupId, std::size_t> frozen;
  for (GroupId g : groups) {
    auto source = history.best_source(space, g, space.project(config, g));
    if (!source) {
      throw Error(ErrorCode::unknown_source_trial,
                  "no trained source for the selected " + g.label() + " assignment");
    }
    frozen.emplace(g, *source);
  }
  return frozen;
}

}  // namespace

Proposal random_step(const GroupedConfigSpace& space, Rng& rng) {
  return random_complete(space, rng, "random");
}

Proposal bo_step(const History& history, const GroupedConfigSpace& space,
                 const SchedulerParams& params, Rng& rng) {
  const double u_explore = uniform01(rng);
  if (history.size() < params.full_gate(space) || u_explore < params.v) {
    return random_complete(space, rng, "bo-random");
  }
  return Proposal{propose_tpe(space, history.observations(LossView::merge), params.tpe, rng),
                  TrainingPlan::complete(), "bo-tpe"};
}

Proposal dcbo_step(const History& history, const GroupedConfigSpace& space,
                   const SchedulerParams& params, Rng& rng) {
  const double u_explore = uniform01(rng);
  const double u_complete = uniform01(rng);
  const bool groups_ok = group_ready(history, space);
  const bool full_ok = history.size() >= params.full_gate(space);
  const auto subnets = space.subnet_groups();

  // 1. Nothing to transfer from yet.
  if (!groups_ok && !history.has_complete_trial()) {
    return random_complete(space, rng, "dc1-bootstrap");
  }

  // 2. Exploration: a random complete model or a random recombination.
  if (u_explore < params.v) {
    if (u_complete < params.o) return random_complete(space, rng, "dc2-random-complete");
    std::map<GroupId, Assignment> parts;
    std::map<GroupId, std::size_t> frozen;
    for (GroupId g : subnets) {
      const auto sources = history.trained_trials(g);
      if (sources.empty()) return random_complete(space, rng, "dc2-random-complete");
      const std::size_t id = sources[pick(sources.size(), rng)];
      parts.emplace(g, space.project(history.at(id).config, g));
      frozen.emplace(g, id);
    }
    parts.emplace(GroupId::merge(), space.sample_group_uniform(GroupId::merge(), rng));
    return Proposal{space.compose(parts), plan_from(std::move(frozen)),
                    "dc2-random-transfer"};
  }

  // 3. Enough trials for TPE over the whole space.
  if (full_ok) {
    const ObservationSet obs = history.observations();
    if (u_complete < params.o) {
      return Proposal{propose_tpe(space, obs, params.tpe, rng), TrainingPlan::complete(),
                      "dc3-tpe-complete"};
    }
    Restrictions restrictions;
    for (GroupId g : subnets) restrictions.emplace(g, history.distinct_assignments(space, g));
    Configuration config = propose_focal_tpe(space, obs, restrictions, params.tpe, rng);
    auto frozen = frozen_for(history, space, config, subnets);
    return Proposal{std::move(config), plan_from(std::move(frozen)), "dc3-focal-transfer"};
  }

  // 4. Enough trials per subnet for group-wise TPE.
  if (groups_ok) {
    std::map<GroupId, Assignment> parts;
    if (u_complete < params.o) {
      for (GroupId g : subnets) {
        parts.emplace(g, propose_group_tpe(space, g, history.group_observations(space, g),
                                           params.tpe, rng));
      }
      parts.emplace(GroupId::merge(), space.sample_group_uniform(GroupId::merge(), rng));
      return Proposal{space.compose(parts), TrainingPlan::complete(),
                      "dc4-group-tpe-complete"};
    }
    std::map<GroupId, std::size_t> frozen;
    for (GroupId g : subnets) {
      const auto allowed = history.distinct_assignments(space, g);
      const std::size_t k = select_group_focal(
          space, g, history.group_observations(space, g), allowed, params.tpe);
      frozen.emplace(g, *history.best_source(space, g, allowed[k]));
      parts.emplace(g, allowed[k]);
    }
    parts.emplace(GroupId::merge(), space.sample_group_uniform(GroupId::merge(), rng));
    return Proposal{space.compose(parts), plan_from(std::move(frozen)),
                    "dc4-group-focal-transfer"};
  }

  // 5. Keep sampling complete models until a TPE gate opens.
  return random_complete(space, rng, "dc5-random-complete");
}

Proposal sabo_step(const History& history, const GroupedConfigSpace& space,
                   const SchedulerParams& params, const ImportanceVector& importance,
                   Rng& rng) {
  const double u_explore = uniform01(rng);
  const double u_complete = uniform01(rng);
  const auto subnets = space.subnet_groups();

  if (!group_ready(history, space) && !history.has_complete_trial()) {
    return random_complete(space, rng, "sa1-bootstrap");
  }
  if (importance.p.size() != subnets.size()) {
    throw Error(ErrorCode::dimension_mismatch, "importance vector length");
  }
  if (u_explore < params.v && u_complete < params.o) {
    return random_complete(space, rng, "sa2-random-complete");
  }

  if (history.size() < params.full_gate(space)) {
    std::map<GroupId, Assignment> parts;
    std::map<GroupId, std::size_t> frozen;
    for (GroupId g : subnets) {
      const double p = importance.p[static_cast<std::size_t>(g.index() - 1)];
      const auto sources = history.trained_trials(g);
      if (p < uniform01(rng) && !sources.empty()) {
        const std::size_t id = sources[pick(sources.size(), rng)];
        parts.emplace(g, space.project(history.at(id).config, g));
        frozen.emplace(g, id);
      } else {
        parts.emplace(g, space.sample_group_uniform(g, rng));
      }
    }
    parts.emplace(GroupId::merge(), space.sample_group_uniform(GroupId::merge(), rng));
    const bool transfer = !frozen.empty();
    return Proposal{space.compose(parts), plan_from(std::move(frozen)),
                    transfer ? "sa3-random-transfer" : "sa3-random-complete"};
  }

  Restrictions restrictions;
  std::vector<GroupId> restricted;
  for (GroupId g : subnets) {
    const double p = importance.p[static_cast<std::size_t>(g.index() - 1)];
    if (p < uniform01(rng)) {
      auto allowed = history.distinct_assignments(space, g);
      if (allowed.empty()) continue;
      restrictions.emplace(g, std::move(allowed));
      restricted.push_back(g);
    }
  }
  Configuration config =
      propose_focal_tpe(space, history.observations(), restrictions, params.tpe, rng);
  auto frozen = frozen_for(history, space, config, restricted);
  const bool transfer = !frozen.empty();
  return Proposal{std::move(config), plan_from(std::move(frozen)),
                  transfer ? "sa4-focal-transfer" : "sa4-tpe-complete"};
}

// ---------------------------------------------------------------------------
// Importance

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::empty_input, "percentile of nothing");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

ImportanceVector sabo_importance(std::span<const History* const> folds, int group_count) {
  constexpr double kFloor = 1e-6;
  if (folds.empty()) throw Error(ErrorCode::no_group_losses, "no folds");
  std::vector<double> score(static_cast<std::size_t>(group_count), 0.0);
  for (int i = 1; i <= group_count; ++i) {
    const GroupId g = GroupId::subnet(i);
    const auto slot = static_cast<std::size_t>(i - 1);
    double sum = 0.0;
    for (const History* fold : folds) {
      std::vector<double> performance;
      for (std::size_t id : fold->trained_trials(g)) {
        const auto& r = fold->at(id);
        if (r.group_losses.size() <= slot) {
          throw Error(ErrorCode::no_group_losses, "trial lacks " + g.label() + " loss");
        }
        performance.push_back(-r.group_losses[slot]);
      }
      if (performance.empty()) {
        throw Error(ErrorCode::no_group_losses, g.label() + " was never trained");
      }
      sum += percentile(std::move(performance), 90.0);
    }
    score[slot] = sum / static_cast<double>(folds.size());
  }

  ImportanceVector out;
  const double lowest = *std::min_element(score.begin(), score.end());
  const bool flat = std::all_of(score.begin(), score.end(),
                                [&](double s) { return s == score.front(); });
  if (flat) {
    out.p.assign(score.size(), 1.0 / static_cast<double>(score.size()));
    return out;
  }
  double total = 0.0;
  for (double s : score) total += (s - lowest) + kFloor;
  for (double s : score) out.p.push_back(((s - lowest) + kFloor) / total);
  return out;
}

ImportanceVector sabo_importance(const History& history, int group_count) {
  const History* folds[] = {&history};
  return sabo_importance(std::span<const History* const>(folds), group_count);
}

// ---------------------------------------------------------------------------
// Execution

namespace {

TrialRecord evaluate_proposal(const Proposal& proposal,
                              const SurrogateObjective& objective,
                              const History& history, const SchedulerParams& params,
                              Rng& rng) {
  std::map<GroupId, QualityState> frozen;
  for (const auto& [group, source] : proposal.plan.frozen_sources) {
    if (source >= history.size()) {
      throw Error(ErrorCode::unknown_source_trial,
                  "trial " + std::to_string(source) + " does not exist");
    }
    const auto& record = history.at(source);
    auto state = record.states.find(group);
    if (state == record.states.end()) {
      throw Error(ErrorCode::unknown_source_trial,
                  "trial " + std::to_string(source) + " has no state for " +
                      group.label());
    }
    frozen.emplace(group, state->second);
  }
  if ((proposal.plan.kind == PlanKind::transfer) == frozen.empty()) {
    throw Error(ErrorCode::validation_error,
                "transfer plans freeze at least one group, complete plans none");
  }

  Outcome outcome = frozen.empty() ? objective.eval_complete(proposal.config, rng)
                                   : objective.eval_transfer(proposal.config, frozen, rng);
  TrialRecord record;
  record.id = history.size();
  record.config = proposal.config;
  record.plan = proposal.plan;
  record.merge_loss = outcome.merge_loss;
  record.group_losses = std::move(outcome.group_losses);
  record.loss = combine_loss(record.merge_loss, record.group_losses, params.lambda_aux);
  record.states = std::move(outcome.states);
  record.cost = outcome.cost;
  record.cumulative_time = history.elapsed() + outcome.cost;
  record.branch = proposal.branch;
  return record;
}

}  // namespace

const TrialRecord& execute_trial(const Proposal& proposal,
                                 const SurrogateObjective& objective,
                                 History& history, const SchedulerParams& params,
                                 Rng& rng) {
  history.append(evaluate_proposal(proposal, objective, history, params, rng));
  return history.back();
}

void run_until(SchedulerKind kind, const SurrogateObjective& objective,
               const SchedulerParams& params, double budget, RunState& state,
               const TrialCallback& on_trial) {
  params.validate();
  if (!(budget > 0.0) || budget < objective.min_complete_cost()) {
    throw Error(ErrorCode::budget_too_small,
                "budget " + std::to_string(budget) + " is below one complete trial (" +
                    std::to_string(objective.min_complete_cost()) + ")");
  }
  const auto& space = objective.space();
  while (state.history.elapsed() < budget) {
    const std::uint64_t key = state.keys.next();
    Rng rng(key);
    Proposal proposal;
    switch (kind) {
      case SchedulerKind::random:
        proposal = random_step(space, rng);
        break;
      case SchedulerKind::bo:
        proposal = bo_step(state.history, space, params, rng);
        break;
      case SchedulerKind::dcbo:
        proposal = dcbo_step(state.history, space, params, rng);
        break;
      case SchedulerKind::sabo: {
        ImportanceVector importance;
        if (state.history.empty()) {
          importance.p.assign(static_cast<std::size_t>(space.group_count()),
                              1.0 / space.group_count());
        } else {
          importance = sabo_importance(state.history, space.group_count());
        }
        proposal = sabo_step(state.history, space, params, importance, rng);
        break;
      }
    }
    TrialRecord record = evaluate_proposal(proposal, objective, state.history, params, rng);
    record.rng_seed = key;
    record.rng_state = state.keys.state();
    state.history.append(std::move(record));
    if (on_trial) on_trial(state.history.back());
  }
}

History run(SchedulerKind kind, const SurrogateObjective& objective,
            const SchedulerParams& params, double budget, std::uint64_t seed,
            std::uint64_t fold) {
  RunState state{History{}, key_stream_for(seed, fold)};
  run_until(kind, objective, params, budget, state);
  return std::move(state.history);
}

double fresh_training_share(const History& history, const SurrogateObjective& objective,
                            std::span<const GroupId> groups) {
  const auto& space = objective.space();
  const double rho = objective.cost_model().transfer_ratio;
  double total = 0.0;
  double fresh = 0.0;
  for (const auto& r : history.records()) {
    total += r.cost;
    double all = 0.0;
    double unfrozen_subnets = 0.0;
    for (GroupId g : space.groups()) {
      const double s = objective.size(g, space.project(r.config, g));
      all += s;
      if (g.is_subnet() && r.trained_unfrozen(g)) unfrozen_subnets += s;
    }
    const double work = r.plan.frozen_sources.empty()
                            ? all
                            : rho * all + (1.0 - rho) * unfrozen_subnets;
    for (GroupId g : groups) {
      if (!r.trained_unfrozen(g)) continue;
      fresh += r.cost * objective.size(g, space.project(r.config, g)) / work;
    }
  }
  return total > 0.0 ? fresh / total : 0.0;
}

}  // namespace subnet_hpo
