#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "subnet_hpo/rng.hpp"
#include "subnet_hpo/space.hpp"

namespace subnet_hpo {

struct TpeParams {
  double alpha = 0.15;         // good-set quantile
  int n_candidates = 24;       // acquisition samples drawn from l(c)
  double bandwidth_floor = 1e-3;
  double prior_weight = 0.05;  // uniform mixing weight, per dimension

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

struct QuantileSplit {
  std::vector<std::size_t> good;
  std::vector<std::size_t> bad;
};

/// Lower losses are better. |good| = max(1, ceil(alpha * n)); ties go to the
/// earlier index. Throws EmptyInput.
QuantileSplit split_by_quantile(std::span<const double> losses, double alpha);

/// Product-kernel Parzen estimator over encoded configurations. Real and
/// integer dimensions use Gaussian kernels, categorical dimensions a
/// frequency kernel; every per-dimension kernel is mixed with the uniform
/// density of that dimension at weight prior_weight.
class KdeModel {
 public:
  /// Scott's rule per dimension, floored. Throws EmptyObservations.
  static KdeModel fit(std::vector<EncodedDim> dims,
                      std::vector<std::vector<double>> points,
                      const TpeParams& params);

  double density(std::span<const double> x) const;
  double log_density(std::span<const double> x) const;
  /// Log density of the marginal over the listed dimensions; `x` holds one
  /// coordinate per listed dimension.
  double log_marginal(std::span<const double> x,
                      std::span<const std::size_t> dims) const;

  /// One coordinate drawn from the kernel centred on `point` in dimension
  /// `dim`, snapped to the dimension's lattice and bounds.
  double sample_coordinate(std::size_t point, std::size_t dim, Rng& rng) const;
  /// Draws a full point: a kernel centre uniformly, then every dimension.
  std::vector<double> sample(Rng& rng) const;

  std::size_t size() const noexcept { return points_.size(); }
  std::size_t dim() const noexcept { return dims_.size(); }
  const std::vector<double>& bandwidths() const noexcept { return bandwidths_; }
  const std::vector<EncodedDim>& dims() const noexcept { return dims_; }
  const std::vector<std::vector<double>>& points() const noexcept { return points_; }

 private:
  double log_kernel(std::size_t dim, double x, double centre) const;

  std::vector<EncodedDim> dims_;
  std::vector<std::vector<double>> points_;
  std::vector<double> bandwidths_;
  double prior_weight_ = 0.0;
};

KdeModel fit_kde(const GroupedConfigSpace& space,
                 std::span<const Configuration> configs, const TpeParams& params);

/// Parallel configurations (full or single-group) and their losses.
struct ObservationSet {
  std::vector<Assignment> configs;
  std::vector<double> losses;
};

/// Allowed verbatim assignments per restricted group.
using Restrictions = std::map<GroupId, std::vector<Assignment>>;

/// Good/bad density pair fitted on one observation set.
struct DensityRatioModel {
  KdeModel good;
  KdeModel bad;

  /// log l(x) - log g(x); NaN collapses to -inf.
  double log_ratio(std::span<const double> x) const;
};

DensityRatioModel fit_density_ratio(const std::vector<EncodedDim>& dims,
                                    const std::vector<std::vector<double>>& points,
                                    std::span<const double> losses,
                                    const TpeParams& params);

/// Index of the best-scoring encoded candidate. A later candidate replaces the
/// incumbent only when it wins by more than 1e-12 in log space.
std::size_t argmax_log_ratio(const DensityRatioModel& model,
                             const std::vector<std::vector<double>>& candidates);

/// Throws InsufficientObservations when |obs| < dim(space) + 1.
Configuration propose_tpe(const GroupedConfigSpace& space, const ObservationSet& obs,
                          const TpeParams& params, Rng& rng);

/// Scores the supplied candidates instead of sampling them.
Configuration propose_tpe_over(const GroupedConfigSpace& space,
                               const ObservationSet& obs, const TpeParams& params,
                               std::span<const Configuration> candidates);

/// Restricted groups are filled verbatim from their allowed entries, drawn in
/// proportion to l's marginal density; remaining groups are sampled from l.
/// Throws InsufficientObservations or EmptyRestriction.
Configuration propose_focal_tpe(const GroupedConfigSpace& space,
                                const ObservationSet& obs,
                                const Restrictions& restrictions,
                                const TpeParams& params, Rng& rng);

/// Throws InvalidConfiguration if a candidate violates the restrictions.
Configuration propose_focal_tpe_over(const GroupedConfigSpace& space,
                                     const ObservationSet& obs,
                                     const Restrictions& restrictions,
                                     const TpeParams& params,
                                     std::span<const Configuration> candidates);

/// TPE confined to one group; `obs` holds that group's partial assignments.
Assignment propose_group_tpe(const GroupedConfigSpace& space, GroupId group,
                             const ObservationSet& obs, const TpeParams& params,
                             Rng& rng);

/// Index into `allowed` maximizing the group's l/g.
std::size_t select_group_focal(const GroupedConfigSpace& space, GroupId group,
                               const ObservationSet& obs,
                               std::span<const Assignment> allowed,
                               const TpeParams& params);

}  // namespace subnet_hpo
