#include "subnet_hpo/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "subnet_hpo/error.hpp"

namespace subnet_hpo {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTieTolerance = 1e-12;

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

double log_mean_exp(const std::vector<double>& terms) {
  double hi = *std::max_element(terms.begin(), terms.end());
  if (hi == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - hi);
  return hi + std::log(sum) - std::log(static_cast<double>(terms.size()));
}

// Support width of the uniform component.
double uniform_width(const EncodedDim& d) {
  switch (d.kind) {
    case EncodedDim::Kind::real:
      return d.hi - d.lo;
    case EncodedDim::Kind::integer:
      return d.hi - d.lo + 1.0;
    case EncodedDim::Kind::categorical:
      return static_cast<double>(d.n_choices);
  }
  return 1.0;
}

bool in_support(const EncodedDim& d, double x) {
  switch (d.kind) {
    case EncodedDim::Kind::real:
      return x >= d.lo && x <= d.hi;
    case EncodedDim::Kind::integer:
      return x >= d.lo - 0.5 && x <= d.hi + 0.5;
    case EncodedDim::Kind::categorical:
      return x >= 0.0 && x <= d.hi;
  }
  return false;
}

void check_observations(const ObservationSet& obs, std::size_t needed) {
  if (obs.configs.size() != obs.losses.size()) {
    throw Error(ErrorCode::dimension_mismatch,
                "observation configs and losses differ in length");
  }
  for (double l : obs.losses) {
    if (!std::isfinite(l)) {
      throw Error(ErrorCode::invalid_configuration, "non-finite loss");
    }
  }
  if (obs.configs.size() < needed) {
    throw Error(ErrorCode::insufficient_observations,
                std::to_string(obs.configs.size()) + " observations, need " +
                    std::to_string(needed));
  }
}

// Indices of the dims owned by each group, positions in the full encoding.
struct GroupLayout {
  std::vector<GroupId> groups;
  std::vector<std::vector<std::size_t>> dims;
};

GroupLayout layout_of(const GroupedConfigSpace& space) {
  GroupLayout layout;
  for (GroupId g : space.groups()) {
    layout.groups.push_back(g);
    layout.dims.push_back(space.group_indices(g));
  }
  return layout;
}

DensityRatioModel fit_full(const GroupedConfigSpace& space,
                           const ObservationSet& obs, const TpeParams& params) {
  params.validate();
  check_observations(obs, space.dim() + 1);
  std::vector<std::vector<double>> points;
  points.reserve(obs.configs.size());
  for (const auto& c : obs.configs) {
    space.validate(c);
    points.push_back(space.encode(c));
  }
  return fit_density_ratio(space.encoded_dims(), points, obs.losses, params);
}

void check_restrictions(const GroupedConfigSpace& space,
                        const Restrictions& restrictions) {
  for (const auto& [group, allowed] : restrictions) {
    if (allowed.empty()) {
      throw Error(ErrorCode::empty_restriction,
                  group.label() + " has no allowed assignments");
    }
    for (const auto& a : allowed) space.validate_group(a, group);
  }
}

Configuration score_candidates(const GroupedConfigSpace& space,
                               const DensityRatioModel& model,
                               std::span<const Configuration> candidates) {
  if (candidates.empty()) {
    throw Error(ErrorCode::empty_input, "no candidates to score");
  }
  std::vector<std::vector<double>> encoded;
  encoded.reserve(candidates.size());
  for (const auto& c : candidates) {
    space.validate(c);
    encoded.push_back(space.encode(c));
  }
  return candidates[argmax_log_ratio(model, encoded)];
}

}  // namespace

void TpeParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::validation_error, "alpha must lie in (0, 1)");
  }
  if (n_candidates < 1) {
    throw Error(ErrorCode::validation_error, "n_candidates must be >= 1");
  }
  if (!(bandwidth_floor > 0.0)) {
    throw Error(ErrorCode::validation_error, "bandwidth_floor must be > 0");
  }
  if (!(prior_weight >= 0.0 && prior_weight <= 1.0)) {
    throw Error(ErrorCode::validation_error, "prior_weight must lie in [0, 1]");
  }
}

QuantileSplit split_by_quantile(std::span<const double> losses, double alpha) {
  if (losses.empty()) throw Error(ErrorCode::empty_input, "no losses to split");
  const std::size_t n = losses.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return losses[a] < losses[b]; });
  auto n_good = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(n)));
  n_good = std::clamp<std::size_t>(n_good, 1, n);
  QuantileSplit split;
  split.good.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_good));
  split.bad.assign(order.begin() + static_cast<std::ptrdiff_t>(n_good), order.end());
  std::sort(split.good.begin(), split.good.end());
  std::sort(split.bad.begin(), split.bad.end());
  return split;
}

KdeModel KdeModel::fit(std::vector<EncodedDim> dims,
                       std::vector<std::vector<double>> points,
                       const TpeParams& params) {
  if (points.empty()) {
    throw Error(ErrorCode::empty_observations, "KDE needs at least one point");
  }
  for (const auto& p : points) {
    if (p.size() != dims.size()) {
      throw Error(ErrorCode::dimension_mismatch, "KDE point length");
    }
  }
  KdeModel model;
  model.prior_weight_ = params.prior_weight;
  const double m = static_cast<double>(points.size());
  const double d = static_cast<double>(dims.size());
  const double scott = std::pow(m, -1.0 / (d + 4.0));
  model.bandwidths_.resize(dims.size(), params.bandwidth_floor);
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (dims[k].kind == EncodedDim::Kind::categorical) continue;
    double mean = 0.0;
    for (const auto& p : points) mean += p[k];
    mean /= m;
    double var = 0.0;
    for (const auto& p : points) var += (p[k] - mean) * (p[k] - mean);
    var /= m;
    model.bandwidths_[k] = std::max(std::sqrt(var) * scott, params.bandwidth_floor);
  }
  model.dims_ = std::move(dims);
  model.points_ = std::move(points);
  return model;
}

double KdeModel::log_kernel(std::size_t dim, double x, double centre) const {
  const EncodedDim& d = dims_[dim];
  const double w = prior_weight_;
  double log_uniform = (w > 0.0 && in_support(d, x))
                           ? std::log(w) - std::log(uniform_width(d))
                           : kNegInf;
  double log_base = kNegInf;
  if (w < 1.0) {
    if (d.kind == EncodedDim::Kind::categorical) {
      log_base = (std::round(x) == std::round(centre)) ? std::log1p(-w) : kNegInf;
    } else {
      const double h = bandwidths_[dim];
      const double z = (x - centre) / h;
      log_base = std::log1p(-w) - 0.5 * z * z - std::log(h) -
                 0.5 * std::log(2.0 * std::numbers::pi);
    }
  }
  return log_add(log_base, log_uniform);
}

double KdeModel::log_density(std::span<const double> x) const {
  if (x.size() != dims_.size()) {
    throw Error(ErrorCode::dimension_mismatch,
                "point has " + std::to_string(x.size()) + " coordinates, model " +
                    std::to_string(dims_.size()));
  }
  std::vector<double> terms(points_.size(), 0.0);
  for (std::size_t j = 0; j < points_.size(); ++j) {
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      terms[j] += log_kernel(k, x[k], points_[j][k]);
    }
  }
  return log_mean_exp(terms);
}

double KdeModel::density(std::span<const double> x) const {
  return std::exp(log_density(x));
}

double KdeModel::log_marginal(std::span<const double> x,
                              std::span<const std::size_t> dims) const {
  if (x.size() != dims.size()) {
    throw Error(ErrorCode::dimension_mismatch, "marginal coordinate count");
  }
  std::vector<double> terms(points_.size(), 0.0);
  for (std::size_t j = 0; j < points_.size(); ++j) {
    for (std::size_t k = 0; k < dims.size(); ++k) {
      terms[j] += log_kernel(dims[k], x[k], points_[j][dims[k]]);
    }
  }
  return log_mean_exp(terms);
}

double KdeModel::sample_coordinate(std::size_t point, std::size_t dim,
                                   Rng& rng) const {
  const EncodedDim& d = dims_[dim];
  const double centre = points_[point][dim];
  const bool from_prior = uniform01(rng) < prior_weight_;
  switch (d.kind) {
    case EncodedDim::Kind::real: {
      if (from_prior) return std::uniform_real_distribution<double>(d.lo, d.hi)(rng);
      double x = centre + bandwidths_[dim] * std::normal_distribution<double>()(rng);
      return std::clamp(x, d.lo, d.hi);
    }
    case EncodedDim::Kind::integer: {
      if (from_prior) {
        return static_cast<double>(std::uniform_int_distribution<long long>(
            static_cast<long long>(d.lo), static_cast<long long>(d.hi))(rng));
      }
      double x = centre + bandwidths_[dim] * std::normal_distribution<double>()(rng);
      return std::clamp(std::round(x), d.lo, d.hi);
    }
    case EncodedDim::Kind::categorical: {
      if (from_prior) {
        return static_cast<double>(
            std::uniform_int_distribution<std::size_t>(0, d.n_choices - 1)(rng));
      }
      return centre;
    }
  }
  return centre;
}

std::vector<double> KdeModel::sample(Rng& rng) const {
  std::size_t j = std::uniform_int_distribution<std::size_t>(0, points_.size() - 1)(rng);
  std::vector<double> x(dims_.size());
  for (std::size_t k = 0; k < dims_.size(); ++k) x[k] = sample_coordinate(j, k, rng);
  return x;
}

KdeModel fit_kde(const GroupedConfigSpace& space,
                 std::span<const Configuration> configs, const TpeParams& params) {
  std::vector<std::vector<double>> points;
  for (const auto& c : configs) {
    space.validate(c);
    points.push_back(space.encode(c));
  }
  return KdeModel::fit(space.encoded_dims(), std::move(points), params);
}

double DensityRatioModel::log_ratio(std::span<const double> x) const {
  double r = good.log_density(x) - bad.log_density(x);
  return std::isnan(r) ? kNegInf : r;
}

DensityRatioModel fit_density_ratio(const std::vector<EncodedDim>& dims,
                                    const std::vector<std::vector<double>>& points,
                                    std::span<const double> losses,
                                    const TpeParams& params) {
  QuantileSplit split = split_by_quantile(losses, params.alpha);
  std::vector<std::vector<double>> good;
  std::vector<std::vector<double>> bad;
  for (std::size_t i : split.good) good.push_back(points[i]);
  for (std::size_t i : split.bad) bad.push_back(points[i]);
  // Every observation is "good" only for tiny n with alpha near 1; g then
  // falls back to the full set.
  if (bad.empty()) bad = points;
  return DensityRatioModel{KdeModel::fit(dims, std::move(good), params),
                           KdeModel::fit(dims, std::move(bad), params)};
}

std::size_t argmax_log_ratio(const DensityRatioModel& model,
                             const std::vector<std::vector<double>>& candidates) {
  std::size_t best = 0;
  double best_score = kNegInf;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double score = model.log_ratio(candidates[i]);
    if (i == 0 || score > best_score + kTieTolerance) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

Configuration propose_tpe(const GroupedConfigSpace& space, const ObservationSet& obs,
                          const TpeParams& params, Rng& rng) {
  return propose_focal_tpe(space, obs, Restrictions{}, params, rng);
}

Configuration propose_tpe_over(const GroupedConfigSpace& space,
                               const ObservationSet& obs, const TpeParams& params,
                               std::span<const Configuration> candidates) {
  DensityRatioModel model = fit_full(space, obs, params);
  return score_candidates(space, model, candidates);
}

Configuration propose_focal_tpe(const GroupedConfigSpace& space,
                                const ObservationSet& obs,
                                const Restrictions& restrictions,
                                const TpeParams& params, Rng& rng) {
  DensityRatioModel model = fit_full(space, obs, params);
  check_restrictions(space, restrictions);
  const GroupLayout layout = layout_of(space);

  // Selection weights for each restricted group's allowed entries.
  std::map<GroupId, std::discrete_distribution<std::size_t>> pickers;
  for (const auto& [group, allowed] : restrictions) {
    const auto& dims = space.group_indices(group);
    std::vector<double> logs;
    logs.reserve(allowed.size());
    for (const auto& a : allowed) {
      logs.push_back(model.good.log_marginal(space.encode_group(a, group), dims));
    }
    double hi = *std::max_element(logs.begin(), logs.end());
    std::vector<double> weights(logs.size(), 1.0);
    if (hi != kNegInf) {
      for (std::size_t k = 0; k < logs.size(); ++k) weights[k] = std::exp(logs[k] - hi);
    }
    pickers.emplace(group, std::discrete_distribution<std::size_t>(weights.begin(),
                                                                   weights.end()));
  }

  std::vector<Configuration> candidates;
  candidates.reserve(static_cast<std::size_t>(params.n_candidates));
  const auto& defs = space.defs();
  for (int c = 0; c < params.n_candidates; ++c) {
    std::size_t centre = std::uniform_int_distribution<std::size_t>(
        0, model.good.size() - 1)(rng);
    Configuration candidate;
    for (std::size_t g = 0; g < layout.groups.size(); ++g) {
      auto picker = pickers.find(layout.groups[g]);
      if (picker != pickers.end()) {
        const auto& chosen = restrictions.at(layout.groups[g])[picker->second(rng)];
        candidate.insert(chosen.begin(), chosen.end());
        continue;
      }
      for (std::size_t k : layout.dims[g]) {
        double x = model.good.sample_coordinate(centre, k, rng);
        candidate.emplace(defs[k].name, decode_value(defs[k], x));
      }
    }
    candidates.push_back(std::move(candidate));
  }
  return score_candidates(space, model, candidates);
}

Configuration propose_focal_tpe_over(const GroupedConfigSpace& space,
                                     const ObservationSet& obs,
                                     const Restrictions& restrictions,
                                     const TpeParams& params,
                                     std::span<const Configuration> candidates) {
  DensityRatioModel model = fit_full(space, obs, params);
  check_restrictions(space, restrictions);
  for (const auto& candidate : candidates) {
    for (const auto& [group, allowed] : restrictions) {
      std::string key = canonical_text(space.project(candidate, group));
      bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const Assignment& a) {
        return canonical_text(a) == key;
      });
      if (!ok) {
        throw Error(ErrorCode::invalid_configuration,
                    "candidate leaves the allowed set of " + group.label());
      }
    }
  }
  return score_candidates(space, model, candidates);
}

namespace {

DensityRatioModel fit_group(const GroupedConfigSpace& space, GroupId group,
                            const ObservationSet& obs, const TpeParams& params) {
  params.validate();
  check_observations(obs, space.dim(group) + 1);
  std::vector<std::vector<double>> points;
  for (const auto& c : obs.configs) {
    space.validate_group(c, group);
    points.push_back(space.encode_group(c, group));
  }
  return fit_density_ratio(space.encoded_dims(group), points, obs.losses, params);
}

}  // namespace

Assignment propose_group_tpe(const GroupedConfigSpace& space, GroupId group,
                             const ObservationSet& obs, const TpeParams& params,
                             Rng& rng) {
  DensityRatioModel model = fit_group(space, group, obs, params);
  std::vector<Assignment> candidates;
  std::vector<std::vector<double>> encoded;
  for (int c = 0; c < params.n_candidates; ++c) {
    Assignment a = space.decode_group(model.good.sample(rng), group);
    encoded.push_back(space.encode_group(a, group));
    candidates.push_back(std::move(a));
  }
  return candidates[argmax_log_ratio(model, encoded)];
}

std::size_t select_group_focal(const GroupedConfigSpace& space, GroupId group,
                               const ObservationSet& obs,
                               std::span<const Assignment> allowed,
                               const TpeParams& params) {
  if (allowed.empty()) {
    throw Error(ErrorCode::empty_restriction, group.label() + " has no allowed entries");
  }
  DensityRatioModel model = fit_group(space, group, obs, params);
  std::vector<std::vector<double>> encoded;
  for (const auto& a : allowed) {
    space.validate_group(a, group);
    encoded.push_back(space.encode_group(a, group));
  }
  return argmax_log_ratio(model, encoded);
}

}  // namespace subnet_hpo
