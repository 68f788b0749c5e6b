#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "oracles.hpp"
#include "subnet_hpo/sched.hpp"

using namespace testing;

namespace {

SurrogateObjective layered_objective(int groups, double jitter = 0.1) {
  SurrogateSpec spec;
  spec.group_count = groups;
  spec.signal_weights.assign(static_cast<std::size_t>(groups), 1.0);
  spec.landscape_seed = 17;
  auto space = layered_space(groups);
  auto cost = layered_cost_model(space, 100.0);
  cost.epoch_jitter = jitter;
  return SurrogateObjective::make(spec, cost, space);
}

History complete_history(const SurrogateObjective& obj, std::size_t n, std::uint64_t seed) {
  History h;
  Rng rng(seed);
  SchedulerParams params;
  for (std::size_t i = 0; i < n; ++i) execute_trial(random_step(obj.space(), rng), obj, h, params, rng);
  return h;
}

/// Hand-made record with the given per-group losses.
TrialRecord record(std::size_t id, std::vector<double> group_losses) {
  TrialRecord r;
  r.id = id;
  r.group_losses = std::move(group_losses);
  r.cost = 1.0;
  r.cumulative_time = static_cast<double>(id + 1);
  return r;
}

std::string branch_family(const std::string& label) { return label.substr(0, 3); }

}  // namespace

TEST_CASE("combine_loss") {
  CHECK(combine_loss(1.0, std::vector<double>{0.5, 0.5}, 0.1) == doctest::Approx(1.1).epsilon(1e-12));
  CHECK(combine_loss(0.37, std::vector<double>{0.5, 0.9}, 0.0) == 0.37);
  CHECK(combine_loss(0.2, std::vector<double>{0.1, 0.3, 0.6}, 0.5) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("scheduler parameters") {
  SchedulerParams p;
  CHECK(p.v == doctest::Approx(1.0 / 3.0));
  CHECK(p.o == 0.2);
  CHECK(p.lambda_aux == 0.1);
  p.v = 1.5;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::validation_error);
  p.v = 0.5;
  p.lambda_aux = -1;
  CHECK(code_of([&] { p.validate(); }) == ErrorCode::validation_error);
  SchedulerParams q;
  CHECK(q.full_gate(small_space()) == small_space().dim() + 1);
}

TEST_CASE("bo_step") {
  auto obj = layered_objective(2);
  const auto& space = obj.space();
  SchedulerParams params;

  SUBCASE("empty history is random and complete") {
    Rng rng(1);
    auto p = bo_step(History{}, space, params, rng);
    CHECK(p.plan == TrainingPlan::complete());
    CHECK(p.branch == "bo-random");
  }
  SUBCASE("past the gate with v=0 it replays the TPE proposal") {
    params.v = 0.0;
    const auto h = complete_history(obj, space.dim() + 1, 2);
    for (std::uint64_t s = 0; s < 20; ++s) {
      Rng a(s), b(s);
      auto p = bo_step(h, space, params, a);
      uniform01(b);
      auto expected = propose_tpe(space, h.observations(LossView::merge), params.tpe, b);
      CHECK(p.config == expected);
      CHECK(p.branch == "bo-tpe");
      CHECK(p.plan.kind == PlanKind::complete);
    }
  }
  SUBCASE("v=1 always explores") {
    params.v = 1.0;
    const auto h = complete_history(obj, 30, 3);
    Rng rng(4);
    for (int i = 0; i < 100; ++i) CHECK(bo_step(h, space, params, rng).branch == "bo-random");
  }
}

TEST_CASE("dcbo_step") {
  auto obj = layered_objective(2);
  const auto& space = obj.space();
  SchedulerParams params;

  SUBCASE("fresh history bootstraps") {
    Rng rng(5);
    auto p = dcbo_step(History{}, space, params, rng);
    CHECK(p.branch == "dc1-bootstrap");
    CHECK(p.plan.kind == PlanKind::complete);
  }
  SUBCASE("random transfers copy parents verbatim") {
    params.v = 1.0;
    params.o = 0.0;
    const auto h = complete_history(obj, 3, 6);
    Rng rng(7);
    for (int i = 0; i < 500; ++i) {
      const auto p = dcbo_step(h, space, params, rng);
      REQUIRE(p.branch == "dc2-random-transfer");
      CHECK(p.plan.kind == PlanKind::transfer);
      CHECK(p.plan.frozen_sources.size() == 2);
      for (const auto& [g, id] : p.plan.frozen_sources) {
        CHECK(space.project(p.config, g) == space.project(h.at(id).config, g));
      }
      space.validate(p.config);
    }
  }
  SUBCASE("random transfers reach T^I patterns") {
    params.v = 1.0;
    params.o = 0.0;
    const auto h = complete_history(obj, 2, 8);
    std::set<std::vector<std::size_t>> patterns;
    Rng rng(9);
    for (int i = 0; i < 400; ++i) {
      const auto p = dcbo_step(h, space, params, rng);
      std::vector<std::size_t> pattern;
      for (const auto& [g, id] : p.plan.frozen_sources) pattern.push_back(id);
      patterns.insert(pattern);
    }
    CHECK(patterns.size() == 4);
    const auto single_parent = std::count_if(patterns.begin(), patterns.end(), [](const auto& v) {
      return std::all_of(v.begin(), v.end(), [&](std::size_t x) { return x == v.front(); });
    });
    CHECK(single_parent == 2);
    CHECK(patterns.size() - static_cast<std::size_t>(single_parent) == transfer_combo_count(2, 2));
  }
  SUBCASE("TPE transfers freeze the best trainer of each chosen assignment") {
    params.v = 0.0;
    params.o = 0.0;
    const auto h = complete_history(obj, space.dim() + 5, 10);
    Rng rng(11);
    for (int i = 0; i < 20; ++i) {
      const auto p = dcbo_step(h, space, params, rng);
      REQUIRE(p.branch == "dc3-focal-transfer");
      for (GroupId g : space.subnet_groups()) {
        const auto part = space.project(p.config, g);
        const auto id = p.plan.frozen_sources.at(g);
        CHECK(space.project(h.at(id).config, g) == part);
        for (const auto& r : h.records()) {
          if (space.project(r.config, g) == part) {
            CHECK(r.group_losses[g.index() - 1] >= h.at(id).group_losses[g.index() - 1]);
          }
        }
      }
    }
  }
  SUBCASE("all five branches occur") {
    std::set<std::string> seen;
    for (std::uint64_t run = 0; run < 40; ++run) {
      History h;
      Rng rng(100 + run);
      for (int i = 0; i < 50; ++i) {
        const auto p = dcbo_step(h, space, params, rng);
        seen.insert(branch_family(p.branch));
        execute_trial(p, obj, h, params, rng);
      }
    }
    CHECK(seen == std::set<std::string>{"dc1", "dc2", "dc3", "dc4", "dc5"});
  }
}

TEST_CASE("sabo importance") {
  SUBCASE("identical groups share equally") {
    std::vector<TrialRecord> rs;
    for (std::size_t i = 0; i < 8; ++i) {
      const double l = 0.1 * static_cast<double>(i);
      rs.push_back(record(i, {l, l, l}));
    }
    const auto p = sabo_importance(History(rs), 3).p;
    for (double x : p) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("dominated group falls to the floor") {
    History h({record(0, {-0.9, -0.3}), record(1, {-0.9, -0.3})});
    const auto p = sabo_importance(h, 2).p;
    CHECK(p[0] == doctest::Approx(0.999998).epsilon(1e-6));
    CHECK(p[0] == doctest::Approx((0.6 + 1e-6) / (0.6 + 2e-6)).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(1e-6 / (0.6 + 2e-6)).epsilon(1e-9));
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("matches the percentile oracle") {
    Rng rng(12);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<History> folds;
      const int fold_count = 1 + rep % 3;
      for (int f = 0; f < fold_count; ++f) {
        std::vector<TrialRecord> rs;
        for (std::size_t i = 0; i < 10; ++i) rs.push_back(record(i, {uniform01(rng), uniform01(rng), uniform01(rng)}));
        folds.emplace_back(rs);
      }
      std::vector<double> s(3, 0.0);
      for (int g = 0; g < 3; ++g) {
        for (const auto& h : folds) {
          std::vector<double> scores;
          for (const auto& r : h.records()) scores.push_back(-r.group_losses[g]);
          s[g] += oracle::percentile(scores, 90) / fold_count;
        }
      }
      const double lo = *std::min_element(s.begin(), s.end());
      double total = 0;
      for (double x : s) total += x - lo + 1e-6;
      std::vector<const History*> ptrs;
      for (const auto& h : folds) ptrs.push_back(&h);
      const auto p = sabo_importance(ptrs, 3).p;
      for (int g = 0; g < 3; ++g) CHECK(p[g] == doctest::Approx((s[g] - lo + 1e-6) / total).epsilon(1e-9));
    }
  }
  SUBCASE("requires group losses") {
    CHECK(code_of([] { sabo_importance(History{}, 2); }) == ErrorCode::no_group_losses);
    History h({record(0, {0.5})});
    CHECK(code_of([&] { sabo_importance(h, 2); }) == ErrorCode::no_group_losses);
  }
  SUBCASE("percentile") {
    CHECK(percentile({1, 2, 3, 4, 5}, 90) == doctest::Approx(4.6));
    CHECK(percentile({7}, 90) == 7);
    CHECK(percentile({3, 1}, 0) == 1);
    CHECK(percentile({3, 1}, 100) == 3);
    CHECK(code_of([] { percentile({}, 50); }) == ErrorCode::empty_input);
  }
}

TEST_CASE("sabo_step freezing frequencies") {
  SchedulerParams params;
  params.v = 0.0;
  params.min_complete = 100000;

  SUBCASE("an important group is never frozen") {
    auto obj = layered_objective(4);
    const auto h = complete_history(obj, 2, 13);
    ImportanceVector imp{{1.0, 0.0, 0.0, 0.0}};
    std::vector<int> frozen(4, 0);
    Rng rng(14);
    for (int i = 0; i < 1000; ++i) {
      const auto p = sabo_step(h, obj.space(), params, imp, rng);
      for (const auto& [g, id] : p.plan.frozen_sources) ++frozen[g.index() - 1];
    }
    CHECK(frozen[0] == 0);
    for (int g = 1; g < 4; ++g) CHECK(frozen[g] >= 950);
  }
  SUBCASE("uniform importance freezes each group half the time") {
    auto obj = layered_objective(2);
    const auto h = complete_history(obj, 2, 15);
    ImportanceVector imp{{0.5, 0.5}};
    std::vector<int> frozen(2, 0);
    Rng rng(16);
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const auto p = sabo_step(h, obj.space(), params, imp, rng);
      for (const auto& [g, id] : p.plan.frozen_sources) ++frozen[g.index() - 1];
    }
    for (int f : frozen) CHECK(std::abs(f / static_cast<double>(n) - 0.5) <= 0.05);
  }
  SUBCASE("fully frozen TPE proposals come from observed assignments") {
    auto obj = layered_objective(2);
    SchedulerParams tpe_params;
    tpe_params.v = 0.0;
    const auto h = complete_history(obj, obj.space().dim() + 3, 17);
    ImportanceVector imp{{0.5, 0.5}};
    Rng rng(18);
    int checked = 0;
    for (int i = 0; i < 60; ++i) {
      const auto p = sabo_step(h, obj.space(), tpe_params, imp, rng);
      if (p.plan.frozen_sources.size() != 2) continue;
      ++checked;
      CHECK(p.plan.kind == PlanKind::transfer);
      for (GroupId g : obj.space().subnet_groups()) {
        const auto allowed = h.distinct_assignments(obj.space(), g);
        CHECK(std::find(allowed.begin(), allowed.end(), obj.space().project(p.config, g)) != allowed.end());
      }
    }
    CHECK(checked > 0);
  }
}

TEST_CASE("execute_trial") {
  auto obj = layered_objective(2, 0.0);
  SchedulerParams params;
  auto h = complete_history(obj, 4, 19);

  SUBCASE("complete trials train every group") {
    for (const auto& r : h.records()) {
      CHECK(r.states.size() == 3);
      CHECK(std::abs(r.loss - combine_loss(r.merge_loss, r.group_losses, params.lambda_aux)) < 1e-9);
    }
  }
  SUBCASE("transfers inherit states and cost less") {
    Rng rng(20);
    auto config = obj.space().sample_uniform(rng);
    for (const auto& [k, v] : obj.space().project(h.at(3).config, S(1))) config[k] = v;
    Proposal p{config, TrainingPlan{PlanKind::transfer, {{S(1), 3}}}, "manual"};
    const auto& r = execute_trial(p, obj, h, params, rng);
    CHECK(r.states.at(S(1)) == h.at(3).states.at(S(1)));
    CHECK(r.cost < obj.complete_cost_noiseless(config));
    CHECK(std::abs(r.loss - combine_loss(r.merge_loss, r.group_losses, params.lambda_aux)) < 1e-9);
    CHECK(r.cumulative_time == doctest::Approx(h.at(3).cumulative_time + r.cost).epsilon(1e-15));
  }
  SUBCASE("unknown sources") {
    Rng rng(21);
    Proposal p{h.at(0).config, TrainingPlan{PlanKind::transfer, {{S(1), 99}}}, "manual"};
    CHECK(code_of([&] { execute_trial(p, obj, h, params, rng); }) == ErrorCode::unknown_source_trial);
  }
}

TEST_CASE("run") {
  auto bench = find_benchmark("dc-4");
  auto obj = bench.objective();
  SchedulerParams params;

  SUBCASE("budget gate") {
    const double r = obj.min_complete_cost();
    for (auto kind : {SchedulerKind::random, SchedulerKind::bo, SchedulerKind::dcbo, SchedulerKind::sabo}) {
      CHECK(run(kind, obj, params, r, 1).size() == 1);
    }
    CHECK(code_of([&] { run(SchedulerKind::bo, obj, params, r * 0.5, 1); }) == ErrorCode::budget_too_small);
  }
  SUBCASE("determinism") {
    const double r = 30 * obj.expected_complete_cost();
    for (auto kind : {SchedulerKind::bo, SchedulerKind::dcbo, SchedulerKind::sabo}) {
      const auto a = run(kind, obj, params, r, 7);
      const auto b = run(kind, obj, params, r, 7);
      CHECK(a.records() == b.records());
      CHECK(a.records() != run(kind, obj, params, r, 8).records());
    }
  }
  SUBCASE("resource accounting and labels") {
    const double r = 40 * obj.expected_complete_cost();
    for (auto kind : {SchedulerKind::random, SchedulerKind::bo, SchedulerKind::dcbo, SchedulerKind::sabo}) {
      const auto h = run(kind, obj, params, r, 3);
      double total = 0, max_cost = 0, last = 0;
      for (const auto& rec : h.records()) {
        total += rec.cost;
        max_cost = std::max(max_cost, rec.cost);
        CHECK(rec.cumulative_time > last);
        last = rec.cumulative_time;
        CHECK(!rec.branch.empty());
        CHECK(rec.cost > 0);
        CHECK(std::abs(rec.loss - combine_loss(rec.merge_loss, rec.group_losses, params.lambda_aux)) < 1e-9);
        for (const auto& [g, id] : rec.plan.frozen_sources) {
          CHECK(id < rec.id);
          CHECK(rec.states.at(g) == h.at(id).states.at(g));
          CHECK(bench.space.project(rec.config, g) == bench.space.project(h.at(id).config, g));
        }
      }
      CHECK(total > r - max_cost);
      CHECK(total < r + max_cost);
      CHECK(total == doctest::Approx(h.elapsed()));
    }
  }
  SUBCASE("dcbo fits more trials into the same budget") {
    const double r = 50 * obj.expected_complete_cost();
    int wins = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      if (run(SchedulerKind::dcbo, obj, params, r, seed).size() >
          run(SchedulerKind::bo, obj, params, r, seed).size()) {
        ++wins;
      }
    }
    CHECK(wins >= 9);
  }
}

TEST_CASE("transfer combinatorics") {
  CHECK(max_speedup_bound(10, 3) == 100);
  CHECK(max_speedup_bound(7, 1) == 1);
  CHECK(max_speedup_bound(2, 2) == 2);
  CHECK(transfer_combo_count(10, 3) == 990);
  CHECK(transfer_combo_count(5, 1) == 0);
  for (std::uint64_t t = 1; t <= 4; ++t) {
    for (int i = 1; i <= 4; ++i) {
      // Every assignment of a parent to each subnet, minus the single-parent ones.
      std::uint64_t total = 1;
      for (int k = 0; k < i; ++k) total *= t;
      std::uint64_t cross = 0;
      for (std::uint64_t code = 0; code < total; ++code) {
        std::set<std::uint64_t> parents;
        std::uint64_t c = code;
        for (int k = 0; k < i; ++k) {
          parents.insert(c % t);
          c /= t;
        }
        if (parents.size() > 1) ++cross;
      }
      CHECK(transfer_combo_count(t, i) == cross);
      CHECK(max_speedup_bound(t, 1) == 1);
    }
  }
}
