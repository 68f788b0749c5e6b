#include "subnet_hpo/experiment.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "subnet_hpo/error.hpp"

namespace subnet_hpo {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::validation_error, key + ": " + what);
}

/// Object view that remembers which keys were read, so leftovers can be
/// reported as unknown.
class Section {
 public:
  Section(const json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) {
      invalid(prefix_.empty() ? "config" : prefix_.substr(0, prefix_.size() - 1),
              "expected a table");
    }
  }

  std::string path(const std::string& key) const { return prefix_ + key; }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::optional<double> number(const std::string& key) {
    const json* j = get(key);
    if (!j) return std::nullopt;
    if (!j->is_number()) invalid(path(key), "expected a number");
    const double x = j->get<double>();
    if (!std::isfinite(x)) invalid(path(key), "must be finite");
    return x;
  }

  std::optional<std::int64_t> integer(const std::string& key) {
    const json* j = get(key);
    if (!j) return std::nullopt;
    if (!j->is_number_integer()) invalid(path(key), "expected an integer");
    return j->get<std::int64_t>();
  }

  std::optional<std::string> string(const std::string& key) {
    const json* j = get(key);
    if (!j) return std::nullopt;
    if (!j->is_string()) invalid(path(key), "expected a string");
    return j->get<std::string>();
  }

  void reject_unknown() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) {
        throw Error(ErrorCode::unknown_key, "unknown key '" + path(key) + "'");
      }
    }
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::set<std::string> seen_;
};

void check_range(const std::string& key, double x, double lo, double hi, bool open_lo,
                 bool open_hi) {
  const bool ok = (open_lo ? x > lo : x >= lo) && (open_hi ? x < hi : x <= hi);
  if (!ok) {
    std::ostringstream msg;
    msg << "must lie in " << (open_lo ? "(" : "[") << lo << ", " << hi << (open_hi ? ")" : "]");
    invalid(key, msg.str());
  }
}

json def_to_json(const HyperparameterDef& d) {
  json j = {{"name", d.name}, {"group", d.group.label()}};
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ContinuousRange>) {
          j["kind"] = "continuous";
          j["lo"] = k.lo;
          j["hi"] = k.hi;
          j["log"] = k.log_scale;
        } else if constexpr (std::is_same_v<K, IntegerRange>) {
          j["kind"] = "integer";
          j["lo"] = k.lo;
          j["hi"] = k.hi;
        } else {
          j["kind"] = "categorical";
          j["choices"] = k.choices;
        }
      },
      d.kind);
  return j;
}

HyperparameterDef def_from_json(const json& j, const std::string& prefix) {
  Section s(j, prefix);
  HyperparameterDef d{"", IntegerRange{0, 0}, GroupId::merge()};
  d.name = s.string("name").value_or("");
  if (d.name.empty()) invalid(s.path("name"), "required");
  const auto group = s.string("group");
  if (!group) invalid(s.path("group"), "required");
  const auto g = GroupId::parse(*group);
  if (!g) invalid(s.path("group"), "expected 'subnetN' or 'merge'");
  d.group = *g;
  const auto type = s.string("kind");
  if (!type) invalid(s.path("kind"), "required");
  if (*type == "continuous") {
    const auto lo = s.number("lo");
    const auto hi = s.number("hi");
    if (!lo || !hi) invalid(s.path(lo ? "hi" : "lo"), "required");
    bool log_scale = false;
    if (const json* l = s.get("log")) {
      if (!l->is_boolean()) invalid(s.path("log"), "expected a boolean");
      log_scale = l->get<bool>();
    }
    d.kind = ContinuousRange{*lo, *hi, log_scale};
  } else if (*type == "integer") {
    const auto lo = s.integer("lo");
    const auto hi = s.integer("hi");
    if (!lo || !hi) invalid(s.path(lo ? "hi" : "lo"), "required");
    d.kind = IntegerRange{*lo, *hi};
  } else if (*type == "categorical") {
    const json* c = s.get("choices");
    if (!c || !c->is_array()) invalid(s.path("choices"), "expected an array of strings");
    CategoricalChoices choices;
    for (const auto& x : *c) {
      if (!x.is_string()) invalid(s.path("choices"), "expected an array of strings");
      choices.choices.push_back(x.get<std::string>());
    }
    d.kind = std::move(choices);
  } else {
    invalid(s.path("kind"), "expected continuous, integer or categorical");
  }
  s.reject_unknown();
  return d;
}

void read_surrogate(Section& s, SurrogateSpec& spec) {
  if (auto x = s.integer("group_count")) spec.group_count = static_cast<int>(*x);
  if (const json* w = s.get("signal_weights")) {
    if (!w->is_array()) invalid(s.path("signal_weights"), "expected an array of numbers");
    spec.signal_weights.clear();
    for (const auto& x : *w) {
      if (!x.is_number()) invalid(s.path("signal_weights"), "expected an array of numbers");
      spec.signal_weights.push_back(x.get<double>());
    }
  }
  if (auto x = s.integer("landscape_seed")) {
    if (*x < 0) invalid(s.path("landscape_seed"), "must be >= 0");
    spec.landscape_seed = static_cast<std::uint64_t>(*x);
  }
  if (auto x = s.number("noise_sigma")) spec.noise_sigma = *x;
  if (auto x = s.integer("landscape_components")) spec.landscape_components = static_cast<int>(*x);
  if (auto x = s.number("bump_width_lo")) spec.bump_width_lo = *x;
  if (auto x = s.number("bump_width_hi")) spec.bump_width_hi = *x;
  if (auto x = s.number("squash_gain")) spec.squash_gain = *x;
  if (auto x = s.number("zero_weight_quality_cap")) spec.zero_weight_quality_cap = *x;
  s.reject_unknown();
}

/// Returns the requested mean complete cost, if the cost table asked for
/// calibration instead of a raw base cost.
std::optional<double> read_cost(Section& s, CostModel& cost) {
  const auto base = s.number("base_complete_cost");
  const auto mean = s.number("mean_complete_cost");
  if (base && mean) invalid(s.path("mean_complete_cost"), "conflicts with base_complete_cost");
  if (base) cost.base_complete_cost = *base;
  if (mean && !(*mean > 0.0)) invalid(s.path("mean_complete_cost"), "must be > 0");
  if (auto x = s.number("transfer_ratio")) cost.transfer_ratio = *x;
  if (auto x = s.number("epoch_jitter")) cost.epoch_jitter = *x;
  if (const json* w = s.get("size_weights")) {
    if (!w->is_object()) invalid(s.path("size_weights"), "expected a table of numbers");
    cost.size_weights.clear();
    for (const auto& [name, x] : w->items()) {
      if (!x.is_number()) invalid(s.path("size_weights." + name), "expected a number");
      cost.size_weights[name] = x.get<double>();
    }
  }
  s.reject_unknown();
  return mean;
}

/// Re-raises a validation failure from a component with the section prefix.
template <typename F>
void validated(const std::string& prefix, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::validation_error) throw;
    std::string msg = e.what();
    const std::string tag = std::string(to_string(ErrorCode::validation_error)) + ": ";
    if (msg.rfind(tag, 0) == 0) msg = msg.substr(tag.size());
    throw Error(ErrorCode::validation_error, prefix + msg);
  }
}

json toml_node_to_json(const toml::node& node, const std::string& where) {
  if (const auto* t = node.as_table()) {
    json out = json::object();
    for (const auto& [k, v] : *t) {
      const std::string key(k.str());
      out[key] = toml_node_to_json(v, where.empty() ? key : where + "." + key);
    }
    return out;
  }
  if (const auto* a = node.as_array()) {
    json out = json::array();
    for (const auto& v : *a) out.push_back(toml_node_to_json(v, where));
    return out;
  }
  if (const auto* s = node.as_string()) return s->get();
  if (const auto* i = node.as_integer()) return i->get();
  if (const auto* f = node.as_floating_point()) return f->get();
  if (const auto* b = node.as_boolean()) return b->get();
  throw Error(ErrorCode::parse_error, where + ": dates and times are not supported");
}

}  // namespace

json ExperimentPlan::canonical() const {
  const SurrogateSpec& s = problem.spec;
  const CostModel& c = problem.cost;
  json space = json::array();
  for (const auto& d : problem.space.defs()) space.push_back(def_to_json(d));
  json min_complete = params.min_complete ? json(*params.min_complete) : json(nullptr);
  return json{
      {"scheduler", to_string(scheduler)},
      {"budget", budget},
      {"params",
       {{"v", params.v},
        {"o", params.o},
        {"lambda_aux", params.lambda_aux},
        {"min_complete", min_complete},
        {"alpha", params.tpe.alpha},
        {"n_candidates", params.tpe.n_candidates},
        {"bandwidth_floor", params.tpe.bandwidth_floor},
        {"prior_weight", params.tpe.prior_weight}}},
      {"surrogate",
       {{"group_count", s.group_count},
        {"signal_weights", s.signal_weights},
        {"landscape_seed", s.landscape_seed},
        {"noise_sigma", s.noise_sigma},
        {"landscape_components", s.landscape_components},
        {"bump_width_lo", s.bump_width_lo},
        {"bump_width_hi", s.bump_width_hi},
        {"squash_gain", s.squash_gain},
        {"zero_weight_quality_cap", s.zero_weight_quality_cap}}},
      {"cost",
       {{"base_complete_cost", c.base_complete_cost},
        {"transfer_ratio", c.transfer_ratio},
        {"epoch_jitter", c.epoch_jitter},
        {"size_weights", c.size_weights}}},
      {"space", space},
  };
}

std::string ExperimentPlan::digest() const { return to_hex64(fnv1a64(canonical().dump())); }

namespace {

/// Resolves the benchmark, inline space, surrogate and cost sections.
Benchmark read_problem(Section& top, const std::optional<std::string>& benchmark) {
  const json* space = top.get("space");
  std::optional<Benchmark> named;
  if (benchmark) {
    if (space) invalid("space", "cannot be combined with benchmark");
    validated("benchmark: ", [&] { named = find_benchmark(*benchmark); });
  } else {
    if (!space) invalid("benchmark", "required unless an inline space is given");
    if (!space->is_array() || space->empty()) invalid("space", "expected a nonempty array");
  }
  SurrogateSpec spec = named ? named->spec : SurrogateSpec{};
  CostModel cost = named ? named->cost : CostModel{};

  const json* surrogate = top.get("surrogate");
  if (surrogate) {
    Section s(*surrogate, "surrogate.");
    read_surrogate(s, spec);
  } else if (!named) {
    invalid("surrogate", "required unless a benchmark is given");
  }

  std::optional<GroupedConfigSpace> built;
  if (named) {
    built = named->space;
  } else {
    std::vector<HyperparameterDef> defs;
    for (std::size_t i = 0; i < space->size(); ++i) {
      defs.push_back(def_from_json((*space)[i], "space[" + std::to_string(i) + "]."));
    }
    try {
      built = GroupedConfigSpace::build(std::move(defs), spec.group_count);
    } catch (const Error& e) {
      invalid("space", e.what());
    }
  }

  std::optional<double> mean_cost;
  if (const json* c = top.get("cost")) {
    Section s(*c, "cost.");
    mean_cost = read_cost(s, cost);
  }

  validated("surrogate.", [&] { spec.validate(); });
  validated("cost.", [&] { cost.validate(); });
  if (spec.group_count != built->group_count()) {
    invalid("surrogate.group_count", "does not match the space's subnet groups");
  }
  for (const auto& [name, w] : cost.size_weights) {
    if (!built->find(name)) invalid("cost.size_weights." + name, "names no parameter of the space");
  }
  Benchmark problem{named ? named->name : "inline", std::move(*built), spec, cost};
  if (mean_cost) {
    problem.cost.base_complete_cost = 1.0;
    const double unit = problem.objective().expected_complete_cost();
    problem.cost.base_complete_cost = *mean_cost / unit;
  }
  return problem;
}

}  // namespace

ExperimentPlan plan_from_json(const json& doc) {
  Section top(doc, "");

  const auto scheduler = top.string("scheduler");
  if (!scheduler) invalid("scheduler", "required");
  const auto kind = parse_scheduler(*scheduler);
  if (!kind) invalid("scheduler", "expected random, bo, dcbo or sabo");

  const auto benchmark = top.string("benchmark");
  ExperimentPlan plan{.benchmark = benchmark, .problem = read_problem(top, benchmark)};
  plan.scheduler = *kind;
  const SurrogateObjective objective = plan.problem.objective();

  const auto budget = top.number("budget");
  const auto multiple = top.number("budget_multiple");
  if (budget && multiple) invalid("budget_multiple", "conflicts with budget");
  if (!budget && !multiple) invalid("budget", "required");
  if (budget) {
    plan.budget = *budget;
    if (!(plan.budget > 0.0)) invalid("budget", "must be > 0");
  } else {
    if (!(*multiple > 0.0)) invalid("budget_multiple", "must be > 0");
    plan.budget = *multiple * objective.expected_complete_cost();
  }
  if (plan.budget < objective.min_complete_cost()) {
    invalid(budget ? "budget" : "budget_multiple", "smaller than the cheapest complete trial");
  }

  const json* seeds = top.get("seeds");
  if (!seeds) invalid("seeds", "required");
  if (!seeds->is_array() || seeds->empty()) invalid("seeds", "expected a nonempty array");
  for (const auto& s : *seeds) {
    if (!s.is_number_integer() || s.get<std::int64_t>() < 0) {
      invalid("seeds", "expected nonnegative integers");
    }
    plan.seeds.push_back(s.get<std::uint64_t>());
  }
  if (auto folds = top.integer("folds")) {
    if (*folds < 1) invalid("folds", "must be >= 1");
    plan.folds = static_cast<std::uint64_t>(*folds);
  }
  if (auto out = top.string("output")) plan.output = *out;

  SchedulerParams& p = plan.params;
  if (auto x = top.number("v")) p.v = *x;
  if (auto x = top.number("o")) p.o = *x;
  if (auto x = top.number("lambda_aux")) p.lambda_aux = *x;
  if (auto x = top.integer("min_complete")) {
    if (*x < 1) invalid("min_complete", "must be >= 1");
    p.min_complete = static_cast<std::size_t>(*x);
  }
  if (auto x = top.number("alpha")) p.tpe.alpha = *x;
  if (auto x = top.integer("n_candidates")) {
    if (*x < 1) invalid("n_candidates", "must be >= 1");
    p.tpe.n_candidates = static_cast<std::size_t>(*x);
  }
  if (auto x = top.number("bandwidth_floor")) p.tpe.bandwidth_floor = *x;
  if (auto x = top.number("prior_weight")) p.tpe.prior_weight = *x;
  check_range("v", p.v, 0.0, 1.0, false, false);
  check_range("o", p.o, 0.0, 1.0, false, false);
  if (!(p.lambda_aux >= 0.0)) invalid("lambda_aux", "must be >= 0");
  check_range("alpha", p.tpe.alpha, 0.0, 1.0, true, true);
  if (!(p.tpe.bandwidth_floor > 0.0)) invalid("bandwidth_floor", "must be > 0");
  check_range("prior_weight", p.tpe.prior_weight, 0.0, 1.0, false, false);
  if (p.min_complete && *p.min_complete < plan.problem.space.dim() + 1) {
    invalid("min_complete", "must be at least the space dimension plus one (" +
                                std::to_string(plan.problem.space.dim() + 1) + ")");
  }

  top.reject_unknown();
  return plan;
}

json toml_to_json(const std::string& text) {
  try {
    const toml::table table = toml::parse(text);
    return toml_node_to_json(table, "");
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << e.description() << " at line " << e.source().begin.line;
    throw Error(ErrorCode::parse_error, msg.str());
  }
}

ExperimentPlan parse_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  json doc;
  if (path.extension() == ".toml") {
    doc = toml_to_json(buffer.str());
  } else {
    try {
      doc = json::parse(buffer.str());
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::parse_error, e.what());
    }
  }
  return plan_from_json(doc);
}

}  // namespace subnet_hpo
