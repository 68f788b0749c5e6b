#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "subnet_hpo/rng.hpp"
#include "subnet_hpo/space.hpp"

namespace subnet_hpo {

struct SurrogateSpec {
  int group_count = 1;
  /// One weight per subnet group, normalized to sum 1 on construction. A zero
  /// weight marks a noise input.
  std::vector<double> signal_weights;
  std::uint64_t landscape_seed = 0;
  double noise_sigma = 0.02;
  int landscape_components = 8;
  /// Landscape shape: bump widths (normalized coordinates) and the gain of the
  /// 1 - exp(-gain * S) squash.
  double bump_width_lo = 0.25;
  double bump_width_hi = 0.6;
  double squash_gain = 3.0;
  /// Quality ceiling of zero-weight groups; a subnetwork fed noise cannot fit
  /// its own head well.
  double zero_weight_quality_cap = 0.25;

  void validate() const;
};

struct CostModel {
  double base_complete_cost = 1.0;  // resource units per unit of group size
  double transfer_ratio = 0.39;
  double epoch_jitter = 0.1;
  /// Size-bearing parameters: size(g, c_g) = 1 + sum weight * normalized value.
  std::map<std::string, double> size_weights;

  void validate() const;
};

/// Trained state of one group carried between trials.
struct QualityState {
  GroupId group = GroupId::merge();
  double quality = 0.0;
  std::uint64_t trained_config_hash = 0;

  bool operator==(const QualityState&) const = default;
};

std::uint64_t assignment_hash(const Assignment& part);

struct Outcome {
  double merge_loss = 0.0;
  std::vector<double> group_losses;  // subnet 1..I
  std::map<GroupId, QualityState> states;
  double cost = 0.0;
  double epochs_equivalent = 0.0;  // cost in units of the expected complete cost
};

/// Seeded synthetic multi-subnetwork objective with per-group quality
/// landscapes and a transfer-aware cost.
class SurrogateObjective {
 public:
  /// Throws GroupCountMismatch.
  static SurrogateObjective make(SurrogateSpec spec, CostModel cost,
                                 GroupedConfigSpace space);

  const GroupedConfigSpace& space() const noexcept { return space_; }
  const SurrogateSpec& spec() const noexcept { return spec_; }
  const CostModel& cost_model() const noexcept { return cost_; }
  /// Normalized signal weight of subnet `i` (1-based).
  double weight(int i) const { return weights_.at(static_cast<std::size_t>(i - 1)); }

  /// Landscape value of a group assignment, in [0, 1].
  double quality(GroupId group, const Assignment& part) const;
  double lipschitz_bound(GroupId group) const;

  double size(GroupId group, const Assignment& part) const;
  double complete_cost_noiseless(const Configuration& config) const;
  /// Mean complete cost under uniform sampling of the space.
  double expected_complete_cost() const;
  /// Cheapest possible complete trial (smallest sizes, lowest jitter).
  double min_complete_cost() const;

  Outcome eval_complete(const Configuration& config, Rng& rng) const;
  /// Frozen groups keep their carried quality; throws HashMismatch when a
  /// state was not trained on the configuration's assignment for its group.
  Outcome eval_transfer(const Configuration& config,
                        const std::map<GroupId, QualityState>& frozen,
                        Rng& rng) const;

 private:
  struct Bump {
    std::vector<double> centre;
    double width;
    double amplitude;
  };
  struct Landscape {
    std::vector<Bump> bumps;
    double cap = 1.0;
  };

  SurrogateObjective(SurrogateSpec spec, CostModel cost, GroupedConfigSpace space)
      : spec_(std::move(spec)), cost_(std::move(cost)), space_(std::move(space)) {}

  std::vector<double> normalized_coords(GroupId group, const Assignment& part) const;
  Outcome evaluate(const Configuration& config,
                   const std::map<GroupId, QualityState>& frozen, Rng& rng) const;

  SurrogateSpec spec_;
  CostModel cost_;
  GroupedConfigSpace space_;
  std::vector<double> weights_;
  std::map<GroupId, Landscape> landscapes_;
};

struct Benchmark {
  std::string name;
  GroupedConfigSpace space;
  SurrogateSpec spec;
  CostModel cost;

  SurrogateObjective objective() const {
    return SurrogateObjective::make(spec, cost, space);
  }
};

/// dc-4, dc-9 and sa-noise.
std::vector<Benchmark> standard_benchmarks();
/// Throws ValidationError for an unknown name.
Benchmark find_benchmark(const std::string& name);

/// Benchmark spaces are built from this per-subnet template plus a merge
/// group; exposed so configs can reuse it.
GroupedConfigSpace layered_space(int group_count);
CostModel layered_cost_model(const GroupedConfigSpace& space,
                             double target_mean_complete_cost);

}  // namespace subnet_hpo
