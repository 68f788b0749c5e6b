#include <json.hpp>

#include "helpers.hpp"
#include "subnet_hpo/experiment.hpp"

using namespace testing;
using nlohmann::json;

namespace {

json minimal() { return {{"benchmark", "dc-4"}, {"scheduler", "dcbo"}, {"budget", 1e5}, {"seeds", {1}}}; }

}  // namespace

TEST_CASE("minimal config takes every default") {
  const auto plan = plan_from_json(minimal());
  CHECK(plan.benchmark == "dc-4");
  CHECK(plan.scheduler == SchedulerKind::dcbo);
  CHECK(plan.budget == 1e5);
  CHECK(plan.seeds == std::vector<std::uint64_t>{1});
  CHECK(plan.folds == 1);
  CHECK(plan.params.v == doctest::Approx(1.0 / 3.0));
  CHECK(plan.params.o == 0.2);
  CHECK(plan.params.lambda_aux == 0.1);
  CHECK(plan.params.tpe.alpha == 0.15);
  CHECK(plan.problem.cost.transfer_ratio == 0.39);
  CHECK(plan.problem.space.group_count() == 4);
}

TEST_CASE("config validation names the key") {
  auto doc = minimal();
  doc["v"] = 1.5;
  CHECK(code_of([&] { plan_from_json(doc); }) == ErrorCode::validation_error);
  CHECK(message_of([&] { plan_from_json(doc); }).find("ValidationError: v:") == 0);

  doc = minimal();
  doc.erase("scheduler");
  CHECK(code_of([&] { plan_from_json(doc); }) == ErrorCode::validation_error);
  CHECK(message_of([&] { plan_from_json(doc); }).find("scheduler") != std::string::npos);

  doc = minimal();
  doc["budjet"] = 3;
  CHECK(code_of([&] { plan_from_json(doc); }) == ErrorCode::unknown_key);
  CHECK(message_of([&] { plan_from_json(doc); }).find("budjet") != std::string::npos);

  doc = minimal();
  doc["surrogate"] = {{"noise_sigmaa", 0.1}};
  CHECK(message_of([&] { plan_from_json(doc); }).find("surrogate.noise_sigmaa") != std::string::npos);

  doc = minimal();
  doc["seeds"] = json::array();
  CHECK(message_of([&] { plan_from_json(doc); }).find("ValidationError: seeds:") == 0);

  doc = minimal();
  doc["budget"] = 1.0;
  CHECK(message_of([&] { plan_from_json(doc); }).find("ValidationError: budget:") == 0);

  doc = minimal();
  doc["scheduler"] = "grid";
  CHECK(code_of([&] { plan_from_json(doc); }) == ErrorCode::validation_error);
}

TEST_CASE("budget multiples and overrides") {
  auto doc = minimal();
  doc.erase("budget");
  doc["budget_multiple"] = 200;
  doc["surrogate"] = {{"noise_sigma", 0.0}};
  doc["cost"] = {{"transfer_ratio", 0.5}};
  const auto plan = plan_from_json(doc);
  CHECK(plan.budget == doctest::Approx(200 * plan.problem.objective().expected_complete_cost()));
  CHECK(plan.problem.spec.noise_sigma == 0.0);
  CHECK(plan.problem.cost.transfer_ratio == 0.5);
}

TEST_CASE("digest covers what shapes a run") {
  const auto a = plan_from_json(minimal());
  auto doc = minimal();
  doc["seeds"] = {4, 5};
  doc["output"] = "elsewhere";
  CHECK(plan_from_json(doc).digest() == a.digest());
  doc["o"] = 0.3;
  CHECK(plan_from_json(doc).digest() != a.digest());
}

TEST_CASE("inline problems") {
  json doc = {
      {"scheduler", "bo"},
      {"budget", 50.0},
      {"seeds", {0}},
      {"space",
       {{{"name", "x"}, {"group", "subnet1"}, {"kind", "continuous"}, {"lo", 0.0}, {"hi", 1.0}},
        {{"name", "k"}, {"group", "merge"}, {"kind", "integer"}, {"lo", 1}, {"hi", 3}}}},
      {"surrogate", {{"group_count", 1}, {"signal_weights", {1.0}}}},
      {"cost", {{"mean_complete_cost", 10.0}, {"size_weights", {{"x", 1.0}}}}}};
  const auto plan = plan_from_json(doc);
  CHECK_FALSE(plan.benchmark);
  CHECK(plan.problem.space.dim() == 2);
  CHECK(plan.problem.objective().expected_complete_cost() == doctest::Approx(10.0));
  doc["cost"]["size_weights"] = {{"nope", 1.0}};
  CHECK(code_of([&] { plan_from_json(doc); }) == ErrorCode::validation_error);
}

TEST_CASE("config files") {
  TempDir dir("config");
  spit(dir.path() / "a.toml",
       "benchmark = \"sa-noise\"\nscheduler = \"sabo\"\nbudget = 1e5\nseeds = [1, 2]\n"
       "[surrogate]\nnoise_sigma = 0.01\n");
  const auto plan = parse_experiment_config(dir.path() / "a.toml");
  CHECK(plan.scheduler == SchedulerKind::sabo);
  CHECK(plan.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(plan.problem.spec.noise_sigma == 0.01);

  spit(dir.path() / "a.json", minimal().dump());
  CHECK(parse_experiment_config(dir.path() / "a.json").scheduler == SchedulerKind::dcbo);

  spit(dir.path() / "bad.toml", "benchmark = [\n");
  CHECK(code_of([&] { parse_experiment_config(dir.path() / "bad.toml"); }) == ErrorCode::parse_error);
  spit(dir.path() / "bad.json", "{");
  CHECK(code_of([&] { parse_experiment_config(dir.path() / "bad.json"); }) == ErrorCode::parse_error);
  CHECK(code_of([&] { parse_experiment_config(dir.path() / "none.json"); }) == ErrorCode::io_error);
}
