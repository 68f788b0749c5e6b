#include "subnet_hpo/space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "subnet_hpo/error.hpp"

namespace subnet_hpo {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_bounds(const HyperparameterDef& def) {
  std::visit(
      overloaded{
          [&](const ContinuousRange& r) {
            if (!(r.lo < r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
              throw Error(ErrorCode::bad_bounds,
                          "continuous '" + def.name + "' needs lo < hi");
            }
            if (r.log_scale && r.lo <= 0.0) {
              throw Error(ErrorCode::bad_bounds,
                          "log-scale '" + def.name + "' needs lo > 0");
            }
          },
          [&](const IntegerRange& r) {
            if (r.lo > r.hi) {
              throw Error(ErrorCode::bad_bounds,
                          "integer '" + def.name + "' needs lo <= hi");
            }
          },
          [&](const CategoricalChoices& c) {
            if (c.choices.empty()) {
              throw Error(ErrorCode::bad_bounds,
                          "categorical '" + def.name + "' has no choices");
            }
            std::set<std::string> seen(c.choices.begin(), c.choices.end());
            if (seen.size() != c.choices.size()) {
              throw Error(ErrorCode::bad_bounds,
                          "categorical '" + def.name + "' repeats a choice");
            }
          },
      },
      def.kind);
}

std::size_t choice_index(const HyperparameterDef& def,
                         const CategoricalChoices& c, const ParamValue& value) {
  const auto* s = std::get_if<std::string>(&value);
  if (s == nullptr) {
    throw Error(ErrorCode::invalid_configuration,
                "'" + def.name + "' expects a choice string");
  }
  auto it = std::find(c.choices.begin(), c.choices.end(), *s);
  if (it == c.choices.end()) {
    throw Error(ErrorCode::invalid_configuration,
                "'" + def.name + "' has no choice '" + *s + "'");
  }
  return static_cast<std::size_t>(it - c.choices.begin());
}

void check_value(const HyperparameterDef& def, const ParamValue& value) {
  std::visit(
      overloaded{
          [&](const ContinuousRange& r) {
            const auto* v = std::get_if<double>(&value);
            if (v == nullptr || !(*v >= r.lo && *v <= r.hi)) {
              throw Error(ErrorCode::invalid_configuration,
                          "'" + def.name + "' out of range or not a real");
            }
          },
          [&](const IntegerRange& r) {
            const auto* v = std::get_if<std::int64_t>(&value);
            if (v == nullptr || *v < r.lo || *v > r.hi) {
              throw Error(ErrorCode::invalid_configuration,
                          "'" + def.name + "' out of range or not an integer");
            }
          },
          [&](const CategoricalChoices& c) { choice_index(def, c, value); },
      },
      def.kind);
}

}  // namespace

std::string GroupId::label() const {
  return is_merge() ? std::string("merge") : "subnet" + std::to_string(index_);
}

std::optional<GroupId> GroupId::parse(const std::string& label) {
  if (label == "merge") return merge();
  static constexpr std::string_view kPrefix = "subnet";
  if (label.size() <= kPrefix.size() || label.compare(0, kPrefix.size(), kPrefix) != 0) {
    return std::nullopt;
  }
  int index = 0;
  for (std::size_t i = kPrefix.size(); i < label.size(); ++i) {
    if (label[i] < '0' || label[i] > '9' || index > 1000000) return std::nullopt;
    index = index * 10 + (label[i] - '0');
  }
  if (index < 1) return std::nullopt;
  return subnet(index);
}

EncodedDim encoded_dim(const HyperparameterDef& def) {
  return std::visit(
      overloaded{
          [](const ContinuousRange& r) {
            return r.log_scale ? EncodedDim{EncodedDim::Kind::real,
                                            std::log10(r.lo), std::log10(r.hi)}
                               : EncodedDim{EncodedDim::Kind::real, r.lo, r.hi};
          },
          [](const IntegerRange& r) {
            return EncodedDim{EncodedDim::Kind::integer,
                              static_cast<double>(r.lo),
                              static_cast<double>(r.hi)};
          },
          [](const CategoricalChoices& c) {
            return EncodedDim{EncodedDim::Kind::categorical, 0.0,
                              static_cast<double>(c.choices.size() - 1),
                              c.choices.size()};
          },
      },
      def.kind);
}

double encode_value(const HyperparameterDef& def, const ParamValue& value) {
  return std::visit(
      overloaded{
          [&](const ContinuousRange& r) {
            double v = std::get<double>(value);
            return r.log_scale ? std::log10(v) : v;
          },
          [&](const IntegerRange&) {
            return static_cast<double>(std::get<std::int64_t>(value));
          },
          [&](const CategoricalChoices& c) {
            return static_cast<double>(choice_index(def, c, value));
          },
      },
      def.kind);
}

ParamValue decode_value(const HyperparameterDef& def, double coordinate) {
  return std::visit(
      overloaded{
          [&](const ContinuousRange& r) -> ParamValue {
            double v = r.log_scale ? std::pow(10.0, coordinate) : coordinate;
            return std::clamp(v, r.lo, r.hi);
          },
          [&](const IntegerRange& r) -> ParamValue {
            double rounded = std::round(coordinate);
            rounded = std::clamp(rounded, static_cast<double>(r.lo),
                                 static_cast<double>(r.hi));
            return static_cast<std::int64_t>(rounded);
          },
          [&](const CategoricalChoices& c) -> ParamValue {
            double rounded = std::clamp(std::round(coordinate), 0.0,
                                        static_cast<double>(c.choices.size() - 1));
            return c.choices[static_cast<std::size_t>(rounded)];
          },
      },
      def.kind);
}

ParamValue sample_value(const HyperparameterDef& def, Rng& rng) {
  return std::visit(
      overloaded{
          [&](const ContinuousRange& r) -> ParamValue {
            if (r.log_scale) {
              std::uniform_real_distribution<double> u(std::log10(r.lo),
                                                       std::log10(r.hi));
              return std::clamp(std::pow(10.0, u(rng)), r.lo, r.hi);
            }
            std::uniform_real_distribution<double> u(r.lo, r.hi);
            return std::clamp(u(rng), r.lo, r.hi);
          },
          [&](const IntegerRange& r) -> ParamValue {
            return std::uniform_int_distribution<std::int64_t>(r.lo, r.hi)(rng);
          },
          [&](const CategoricalChoices& c) -> ParamValue {
            std::uniform_int_distribution<std::size_t> u(0, c.choices.size() - 1);
            return c.choices[u(rng)];
          },
      },
      def.kind);
}

std::string canonical_text(const Assignment& part) {
  std::string out;
  char buf[64];
  for (const auto& [name, value] : part) {
    out += name;
    out += '=';
    std::visit(overloaded{
                   [&](double v) {
                     std::snprintf(buf, sizeof buf, "%a", v);
                     out += buf;
                   },
                   [&](std::int64_t v) { out += std::to_string(v) + "i"; },
                   [&](const std::string& v) { out += '"' + v + '"'; },
               },
               value);
    out += ';';
  }
  return out;
}

GroupedConfigSpace GroupedConfigSpace::build(std::vector<HyperparameterDef> defs,
                                             int group_count) {
  if (group_count < 1) {
    throw Error(ErrorCode::empty_group, "group_count must be positive");
  }
  if (defs.empty()) {
    throw Error(ErrorCode::empty_group, "space has no parameters");
  }
  GroupedConfigSpace space;
  space.group_count_ = group_count;
  for (std::size_t i = 0; i < defs.size(); ++i) {
    const auto& def = defs[i];
    check_bounds(def);
    if (def.group.is_subnet() &&
        (def.group.index() < 1 || def.group.index() > group_count)) {
      throw Error(ErrorCode::unknown_group,
                  "'" + def.name + "' names group " + def.group.label());
    }
    if (!space.by_name_.emplace(def.name, i).second) {
      throw Error(ErrorCode::duplicate_name, "'" + def.name + "' defined twice");
    }
    space.by_group_[def.group].push_back(i);
  }
  for (GroupId g : space.groups()) {
    if (!space.by_group_.contains(g)) {
      throw Error(ErrorCode::empty_group, g.label() + " owns no parameters");
    }
  }
  space.defs_ = std::move(defs);
  return space;
}

std::vector<GroupId> GroupedConfigSpace::groups() const {
  std::vector<GroupId> out = subnet_groups();
  out.push_back(GroupId::merge());
  return out;
}

std::vector<GroupId> GroupedConfigSpace::subnet_groups() const {
  std::vector<GroupId> out;
  out.reserve(static_cast<std::size_t>(group_count_));
  for (int i = 1; i <= group_count_; ++i) out.push_back(GroupId::subnet(i));
  return out;
}

bool GroupedConfigSpace::has_group(GroupId group) const {
  return by_group_.contains(group);
}

const std::vector<std::size_t>& GroupedConfigSpace::group_indices(
    GroupId group) const {
  auto it = by_group_.find(group);
  if (it == by_group_.end()) {
    throw Error(ErrorCode::unknown_group, group.label());
  }
  return it->second;
}

std::size_t GroupedConfigSpace::dim(GroupId group) const {
  return group_indices(group).size();
}

const HyperparameterDef* GroupedConfigSpace::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : &defs_[it->second];
}

Configuration GroupedConfigSpace::sample_uniform(Rng& rng) const {
  Configuration config;
  for (const auto& def : defs_) config.emplace(def.name, sample_value(def, rng));
  return config;
}

Assignment GroupedConfigSpace::sample_group_uniform(GroupId group, Rng& rng) const {
  Assignment part;
  for (std::size_t i : group_indices(group)) {
    part.emplace(defs_[i].name, sample_value(defs_[i], rng));
  }
  return part;
}

Assignment GroupedConfigSpace::project(const Configuration& config,
                                       GroupId group) const {
  Assignment part;
  for (std::size_t i : group_indices(group)) {
    auto it = config.find(defs_[i].name);
    if (it == config.end()) {
      throw Error(ErrorCode::invalid_configuration,
                  "missing '" + defs_[i].name + "'");
    }
    part.emplace(it->first, it->second);
  }
  return part;
}

Configuration GroupedConfigSpace::compose(
    const std::map<GroupId, Assignment>& parts) const {
  Configuration config;
  for (GroupId g : groups()) {
    if (!parts.contains(g)) {
      throw Error(ErrorCode::missing_group, g.label() + " has no assignment");
    }
  }
  for (const auto& [group, part] : parts) {
    if (!has_group(group)) {
      throw Error(ErrorCode::unknown_group, group.label());
    }
    for (const auto& [name, value] : part) {
      if (!config.emplace(name, value).second) {
        throw Error(ErrorCode::overlapping_names,
                    "'" + name + "' assigned by more than one group");
      }
    }
  }
  // Names landing in the wrong group surface either as an overlap above or as
  // a missing parameter of the owning group here.
  for (const auto& [group, part] : parts) {
    for (const auto& [name, value] : part) {
      const auto* def = find(name);
      if (def != nullptr && def->group != group) {
        throw Error(ErrorCode::overlapping_names,
                    "'" + name + "' belongs to " + def->group.label() +
                        ", not " + group.label());
      }
    }
  }
  validate(config);
  return config;
}

void GroupedConfigSpace::validate(const Configuration& config) const {
  for (const auto& def : defs_) {
    auto it = config.find(def.name);
    if (it == config.end()) {
      throw Error(ErrorCode::invalid_configuration, "missing '" + def.name + "'");
    }
    check_value(def, it->second);
  }
  if (config.size() != defs_.size()) {
    for (const auto& [name, value] : config) {
      if (find(name) == nullptr) {
        throw Error(ErrorCode::invalid_configuration, "unknown '" + name + "'");
      }
    }
  }
}

void GroupedConfigSpace::validate_group(const Assignment& part,
                                        GroupId group) const {
  const auto& indices = group_indices(group);
  for (std::size_t i : indices) {
    auto it = part.find(defs_[i].name);
    if (it == part.end()) {
      throw Error(ErrorCode::invalid_configuration,
                  "missing '" + defs_[i].name + "'");
    }
    check_value(defs_[i], it->second);
  }
  if (part.size() != indices.size()) {
    throw Error(ErrorCode::invalid_configuration,
                "assignment for " + group.label() + " has foreign names");
  }
}

std::vector<double> GroupedConfigSpace::encode(const Configuration& config) const {
  std::vector<double> out;
  out.reserve(defs_.size());
  for (const auto& def : defs_) out.push_back(encode_value(def, config.at(def.name)));
  return out;
}

std::vector<double> GroupedConfigSpace::encode_group(const Assignment& part,
                                                     GroupId group) const {
  std::vector<double> out;
  for (std::size_t i : group_indices(group)) {
    out.push_back(encode_value(defs_[i], part.at(defs_[i].name)));
  }
  return out;
}

std::vector<EncodedDim> GroupedConfigSpace::encoded_dims() const {
  std::vector<EncodedDim> out;
  out.reserve(defs_.size());
  for (const auto& def : defs_) out.push_back(encoded_dim(def));
  return out;
}

std::vector<EncodedDim> GroupedConfigSpace::encoded_dims(GroupId group) const {
  std::vector<EncodedDim> out;
  for (std::size_t i : group_indices(group)) out.push_back(encoded_dim(defs_[i]));
  return out;
}

Configuration GroupedConfigSpace::decode(const std::vector<double>& encoded) const {
  if (encoded.size() != defs_.size()) {
    throw Error(ErrorCode::dimension_mismatch, "decode length");
  }
  Configuration config;
  for (std::size_t i = 0; i < defs_.size(); ++i) {
    config.emplace(defs_[i].name, decode_value(defs_[i], encoded[i]));
  }
  return config;
}

Assignment GroupedConfigSpace::decode_group(const std::vector<double>& encoded,
                                            GroupId group) const {
  const auto& indices = group_indices(group);
  if (encoded.size() != indices.size()) {
    throw Error(ErrorCode::dimension_mismatch, "decode_group length");
  }
  Assignment part;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto& def = defs_[indices[k]];
    part.emplace(def.name, decode_value(def, encoded[k]));
  }
  return part;
}

double GroupedConfigSpace::normalized(const HyperparameterDef& def,
                                      const ParamValue& value) const {
  EncodedDim d = encoded_dim(def);
  if (d.hi <= d.lo) return 0.0;
  return std::clamp((encode_value(def, value) - d.lo) / (d.hi - d.lo), 0.0, 1.0);
}

}  // namespace subnet_hpo
