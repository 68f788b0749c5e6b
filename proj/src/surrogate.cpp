#include "subnet_hpo/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "subnet_hpo/error.hpp"

namespace subnet_hpo {

void SurrogateSpec::validate() const {
  if (group_count < 1) {
    throw Error(ErrorCode::validation_error, "group_count must be positive");
  }
  if (signal_weights.size() != static_cast<std::size_t>(group_count)) {
    throw Error(ErrorCode::validation_error,
                "signal_weights needs one entry per subnet group");
  }
  bool any_signal = false;
  for (double w : signal_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw Error(ErrorCode::validation_error, "signal_weights must be >= 0");
    }
    any_signal = any_signal || w > 0.0;
  }
  if (!any_signal) {
    throw Error(ErrorCode::validation_error, "signal_weights are all zero");
  }
  if (!(noise_sigma >= 0.0)) {
    throw Error(ErrorCode::validation_error, "noise_sigma must be >= 0");
  }
  if (landscape_components < 1) {
    throw Error(ErrorCode::validation_error, "landscape_components must be >= 1");
  }
  if (!(bump_width_lo > 0.0 && bump_width_lo <= bump_width_hi)) {
    throw Error(ErrorCode::validation_error,
                "bump widths need 0 < bump_width_lo <= bump_width_hi");
  }
  if (!(squash_gain > 0.0)) {
    throw Error(ErrorCode::validation_error, "squash_gain must be > 0");
  }
  if (!(zero_weight_quality_cap >= 0.0 && zero_weight_quality_cap <= 1.0)) {
    throw Error(ErrorCode::validation_error,
                "zero_weight_quality_cap must lie in [0, 1]");
  }
}

void CostModel::validate() const {
  if (!(base_complete_cost > 0.0)) {
    throw Error(ErrorCode::validation_error, "base_complete_cost must be > 0");
  }
  if (!(transfer_ratio > 0.0 && transfer_ratio < 1.0)) {
    throw Error(ErrorCode::validation_error, "transfer_ratio must lie in (0, 1)");
  }
  if (!(epoch_jitter >= 0.0 && epoch_jitter < 1.0)) {
    throw Error(ErrorCode::validation_error, "epoch_jitter must lie in [0, 1)");
  }
  for (const auto& [name, w] : size_weights) {
    if (!(w >= 0.0)) {
      throw Error(ErrorCode::validation_error,
                  "size_weights." + name + " must be >= 0");
    }
  }
}

std::uint64_t assignment_hash(const Assignment& part) {
  return fnv1a64(canonical_text(part));
}

SurrogateObjective SurrogateObjective::make(SurrogateSpec spec, CostModel cost,
                                            GroupedConfigSpace space) {
  if (spec.group_count != space.group_count()) {
    throw Error(ErrorCode::group_count_mismatch,
                "surrogate has " + std::to_string(spec.group_count) +
                    " groups, space " + std::to_string(space.group_count()));
  }
  spec.validate();
  cost.validate();
  for (const auto& [name, w] : cost.size_weights) {
    if (space.find(name) == nullptr) {
      throw Error(ErrorCode::validation_error,
                  "size_weights names unknown parameter '" + name + "'");
    }
  }
  SurrogateObjective objective(std::move(spec), std::move(cost), std::move(space));
  const auto& s = objective.spec_;

  double total = std::accumulate(s.signal_weights.begin(), s.signal_weights.end(), 0.0);
  for (double w : s.signal_weights) objective.weights_.push_back(w / total);

  for (GroupId g : objective.space_.groups()) {
    const auto tag = static_cast<std::uint64_t>(g.is_merge() ? 0 : g.index());
    std::seed_seq seq{static_cast<std::uint32_t>(s.landscape_seed),
                      static_cast<std::uint32_t>(s.landscape_seed >> 32),
                      static_cast<std::uint32_t>(tag), 0x5eedU};
    Rng rng(seq);
    const std::size_t d = objective.space_.dim(g);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> width(s.bump_width_lo, s.bump_width_hi);
    std::uniform_real_distribution<double> minor(0.2, 0.7);
    Landscape land;
    for (int k = 0; k < s.landscape_components; ++k) {
      Bump bump;
      bump.centre.resize(d);
      for (auto& c : bump.centre) c = unit(rng);
      bump.width = width(rng);
      // One dominant optimum per group, the rest are local bumps.
      bump.amplitude = (k == 0) ? 1.0 : minor(rng);
      land.bumps.push_back(std::move(bump));
    }
    if (g.is_subnet() && objective.weights_[static_cast<std::size_t>(g.index() - 1)] == 0.0) {
      land.cap = s.zero_weight_quality_cap;
    }
    objective.landscapes_.emplace(g, std::move(land));
  }
  return objective;
}

std::vector<double> SurrogateObjective::normalized_coords(GroupId group,
                                                          const Assignment& part) const {
  std::vector<double> x;
  for (std::size_t i : space_.group_indices(group)) {
    const auto& def = space_.defs()[i];
    x.push_back(space_.normalized(def, part.at(def.name)));
  }
  return x;
}

double SurrogateObjective::quality(GroupId group, const Assignment& part) const {
  const Landscape& land = landscapes_.at(group);
  const std::vector<double> x = normalized_coords(group, part);
  double sum = 0.0;
  for (const auto& bump : land.bumps) {
    double r2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      r2 += (x[k] - bump.centre[k]) * (x[k] - bump.centre[k]);
    }
    sum += bump.amplitude * std::exp(-r2 / (2.0 * bump.width * bump.width));
  }
  return land.cap * (1.0 - std::exp(-spec_.squash_gain * sum));
}

double SurrogateObjective::lipschitz_bound(GroupId group) const {
  // |grad a exp(-r^2 / 2s^2)| peaks at r = s with value a e^{-1/2} / s; the
  // squash has slope at most cap * gain; normalizing divides by the range.
  const Landscape& land = landscapes_.at(group);
  double bump_bound = 0.0;
  for (const auto& bump : land.bumps) {
    bump_bound += bump.amplitude * std::exp(-0.5) / bump.width;
  }
  double min_range = std::numeric_limits<double>::infinity();
  for (const auto& d : space_.encoded_dims(group)) {
    if (d.hi > d.lo) min_range = std::min(min_range, d.hi - d.lo);
  }
  if (!std::isfinite(min_range)) return 0.0;
  return land.cap * spec_.squash_gain * bump_bound / min_range;
}

double SurrogateObjective::size(GroupId group, const Assignment& part) const {
  double s = 1.0;
  for (std::size_t i : space_.group_indices(group)) {
    const auto& def = space_.defs()[i];
    auto it = cost_.size_weights.find(def.name);
    if (it != cost_.size_weights.end()) {
      s += it->second * space_.normalized(def, part.at(def.name));
    }
  }
  return s;
}

double SurrogateObjective::complete_cost_noiseless(const Configuration& config) const {
  double total = 0.0;
  for (GroupId g : space_.groups()) total += size(g, space_.project(config, g));
  return cost_.base_complete_cost * total;
}

double SurrogateObjective::expected_complete_cost() const {
  // Every normalized coordinate has mean 1/2 under uniform sampling.
  double total = 0.0;
  for (GroupId g : space_.groups()) {
    total += 1.0;
    for (std::size_t i : space_.group_indices(g)) {
      auto it = cost_.size_weights.find(space_.defs()[i].name);
      if (it != cost_.size_weights.end()) total += 0.5 * it->second;
    }
  }
  return cost_.base_complete_cost * total;
}

double SurrogateObjective::min_complete_cost() const {
  return cost_.base_complete_cost * static_cast<double>(space_.groups().size()) *
         (1.0 - cost_.epoch_jitter);
}

Outcome SurrogateObjective::eval_complete(const Configuration& config, Rng& rng) const {
  return evaluate(config, {}, rng);
}

Outcome SurrogateObjective::eval_transfer(const Configuration& config,
                                          const std::map<GroupId, QualityState>& frozen,
                                          Rng& rng) const {
  return evaluate(config, frozen, rng);
}

Outcome SurrogateObjective::evaluate(const Configuration& config,
                                     const std::map<GroupId, QualityState>& frozen,
                                     Rng& rng) const {
  space_.validate(config);
  for (const auto& [group, state] : frozen) {
    if (!group.is_subnet() || group.index() > space_.group_count()) {
      throw Error(ErrorCode::unknown_group, "cannot freeze " + group.label());
    }
    if (state.group != group ||
        state.trained_config_hash != assignment_hash(space_.project(config, group))) {
      throw Error(ErrorCode::hash_mismatch,
                  "state for " + group.label() +
                      " was trained on a different assignment");
    }
  }

  auto noise = [&]() {
    if (spec_.noise_sigma == 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, spec_.noise_sigma)(rng);
  };

  Outcome out;
  double signal = 0.0;
  double total_size = 0.0;
  double fresh_subnet_size = 0.0;
  for (GroupId g : space_.subnet_groups()) {
    const Assignment part = space_.project(config, g);
    const double s = size(g, part);
    total_size += s;
    auto it = frozen.find(g);
    QualityState state;
    if (it != frozen.end()) {
      state = it->second;
    } else {
      state = QualityState{g, quality(g, part), assignment_hash(part)};
      fresh_subnet_size += s;
    }
    signal += weights_[static_cast<std::size_t>(g.index() - 1)] * state.quality;
    out.group_losses.push_back(std::max(0.0, 1.0 - state.quality + noise()));
    out.states.emplace(g, state);
  }
  const Assignment merge_part = space_.project(config, GroupId::merge());
  const double q_merge = quality(GroupId::merge(), merge_part);
  total_size += size(GroupId::merge(), merge_part);
  out.states.emplace(GroupId::merge(),
                     QualityState{GroupId::merge(), q_merge, assignment_hash(merge_part)});
  out.merge_loss = std::max(0.0, 1.0 - q_merge * signal + noise());

  const double jitter = std::uniform_real_distribution<double>(
      1.0 - cost_.epoch_jitter, 1.0 + cost_.epoch_jitter)(rng);
  const double rho = cost_.transfer_ratio;
  const double work = frozen.empty()
                          ? total_size
                          : rho * total_size + (1.0 - rho) * fresh_subnet_size;
  out.cost = cost_.base_complete_cost * work * jitter;
  out.epochs_equivalent = out.cost / expected_complete_cost();
  return out;
}

GroupedConfigSpace layered_space(int group_count) {
  std::vector<HyperparameterDef> defs;
  const std::vector<std::string> activations{"relu", "elu", "tanh"};
  for (int i = 1; i <= group_count; ++i) {
    const std::string p = "s" + std::to_string(i) + "_";
    const GroupId g = GroupId::subnet(i);
    defs.push_back({p + "layers", IntegerRange{1, 6}, g});
    defs.push_back({p + "width", ContinuousRange{16.0, 512.0, true}, g});
    defs.push_back({p + "dropout", ContinuousRange{0.0, 0.6}, g});
    defs.push_back({p + "activation", CategoricalChoices{activations}, g});
  }
  defs.push_back({"m_layers", IntegerRange{1, 4}, GroupId::merge()});
  defs.push_back({"m_width", ContinuousRange{16.0, 256.0, true}, GroupId::merge()});
  defs.push_back({"m_lr", ContinuousRange{1e-4, 1e-1, true}, GroupId::merge()});
  return GroupedConfigSpace::build(std::move(defs), group_count);
}

CostModel layered_cost_model(const GroupedConfigSpace& space,
                             double target_mean_complete_cost) {
  CostModel cost;
  double expected_size = 0.0;
  for (GroupId g : space.groups()) {
    expected_size += 1.0;
    for (std::size_t i : space.group_indices(g)) {
      const auto& name = space.defs()[i].name;
      if (name.ends_with("layers") || name.ends_with("width")) {
        cost.size_weights[name] = 1.0;
        expected_size += 0.5;
      }
    }
  }
  cost.base_complete_cost = target_mean_complete_cost / expected_size;
  return cost;
}

namespace {

// Mean complete training time of the BO models in the DCCC analog, seconds.
constexpr double kMeanCompleteSeconds = 516.0;

Benchmark layered_benchmark(std::string name, std::vector<double> weights,
                            std::uint64_t seed) {
  const int n = static_cast<int>(weights.size());
  GroupedConfigSpace space = layered_space(n);
  SurrogateSpec spec;
  spec.group_count = n;
  spec.signal_weights = std::move(weights);
  spec.landscape_seed = seed;
  CostModel cost = layered_cost_model(space, kMeanCompleteSeconds);
  return Benchmark{std::move(name), std::move(space), std::move(spec), std::move(cost)};
}

}  // namespace

std::vector<Benchmark> standard_benchmarks() {
  std::vector<Benchmark> out;
  out.push_back(layered_benchmark("dc-4", {1.0, 1.0, 1.0, 1.0}, 4041));
  out.push_back(layered_benchmark("dc-9", std::vector<double>(9, 1.0), 9091));
  out.push_back(layered_benchmark("sa-noise", {0.5, 0.0, 0.5, 0.0}, 7071));
  return out;
}

Benchmark find_benchmark(const std::string& name) {
  for (auto& b : standard_benchmarks()) {
    if (b.name == name) return b;
  }
  throw Error(ErrorCode::validation_error, "unknown benchmark '" + name + "'");
}

}  // namespace subnet_hpo
