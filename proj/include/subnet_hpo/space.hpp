#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "subnet_hpo/rng.hpp"

namespace subnet_hpo {

/// A hyperparameter group: one subnetwork (1-based index) or the merge head.
class GroupId {
 public:
  static GroupId subnet(int index) { return GroupId(index); }
  static GroupId merge() { return GroupId(kMergeIndex); }

  bool is_merge() const noexcept { return index_ == kMergeIndex; }
  bool is_subnet() const noexcept { return !is_merge(); }
  /// Subnet index (1-based). Meaningless for the merge group.
  int index() const noexcept { return index_; }

  /// "subnet3" or "merge".
  std::string label() const;
  static std::optional<GroupId> parse(const std::string& label);

  // Subnets order by index, merge sorts last.
  auto operator<=>(const GroupId&) const = default;

 private:
  static constexpr int kMergeIndex = 1 << 30;
  explicit GroupId(int index) : index_(index) {}
  int index_;
};

struct ContinuousRange {
  double lo;
  double hi;
  bool log_scale = false;
};

struct IntegerRange {
  std::int64_t lo;
  std::int64_t hi;
};

struct CategoricalChoices {
  std::vector<std::string> choices;
};

using ParamKind = std::variant<ContinuousRange, IntegerRange, CategoricalChoices>;

struct HyperparameterDef {
  std::string name;
  ParamKind kind;
  GroupId group;
};

/// Continuous values are doubles, integers int64, categoricals the choice
/// string.
using ParamValue = std::variant<double, std::int64_t, std::string>;

/// Full configuration or a partial (single group) assignment.
using Assignment = std::map<std::string, ParamValue>;
using Configuration = Assignment;

/// Per-dimension description of the encoded domain, consumed by the KDEs.
struct EncodedDim {
  enum class Kind { real, integer, categorical };
  Kind kind;
  double lo;  // encoded bounds (log10 applied for log-scale params)
  double hi;
  std::size_t n_choices = 0;
};

/// Hyperparameter space partitioned into subnet groups 1..I plus a merge
/// group. Immutable after construction.
class GroupedConfigSpace {
 public:
  /// Throws DuplicateName, EmptyGroup or BadBounds.
  static GroupedConfigSpace build(std::vector<HyperparameterDef> defs,
                                  int group_count);

  int group_count() const noexcept { return group_count_; }
  std::size_t dim() const noexcept { return defs_.size(); }
  std::size_t dim(GroupId group) const;

  /// Subnets 1..I followed by merge.
  std::vector<GroupId> groups() const;
  std::vector<GroupId> subnet_groups() const;
  bool has_group(GroupId group) const;

  const std::vector<HyperparameterDef>& defs() const noexcept { return defs_; }
  /// Indices into defs() owned by `group`, in definition order.
  const std::vector<std::size_t>& group_indices(GroupId group) const;
  const HyperparameterDef* find(const std::string& name) const;

  Configuration sample_uniform(Rng& rng) const;
  Assignment sample_group_uniform(GroupId group, Rng& rng) const;

  Assignment project(const Configuration& config, GroupId group) const;
  /// Throws MissingGroup or OverlappingNames.
  Configuration compose(const std::map<GroupId, Assignment>& parts) const;

  /// Throws InvalidConfiguration naming the offending parameter.
  void validate(const Configuration& config) const;
  void validate_group(const Assignment& part, GroupId group) const;

  std::vector<double> encode(const Configuration& config) const;
  std::vector<double> encode_group(const Assignment& part, GroupId group) const;
  std::vector<EncodedDim> encoded_dims() const;
  std::vector<EncodedDim> encoded_dims(GroupId group) const;

  /// Inverse of encode for points off the lattice: clamps to bounds, rounds
  /// integer and categorical coordinates.
  Configuration decode(const std::vector<double>& encoded) const;
  Assignment decode_group(const std::vector<double>& encoded,
                          GroupId group) const;

  /// Position of a value inside its encoded range, in [0, 1].
  double normalized(const HyperparameterDef& def, const ParamValue& value) const;

 private:
  GroupedConfigSpace() = default;

  std::vector<HyperparameterDef> defs_;
  int group_count_ = 0;
  std::map<GroupId, std::vector<std::size_t>> by_group_;
  std::map<std::string, std::size_t> by_name_;
};

double encode_value(const HyperparameterDef& def, const ParamValue& value);
ParamValue decode_value(const HyperparameterDef& def, double coordinate);
EncodedDim encoded_dim(const HyperparameterDef& def);
ParamValue sample_value(const HyperparameterDef& def, Rng& rng);

/// Canonical text of an assignment, stable across runs; used for hashing and
/// equality keys.
std::string canonical_text(const Assignment& part);

}  // namespace subnet_hpo
