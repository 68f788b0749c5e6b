#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"

using namespace testing;

TEST_CASE("dimensions add up across groups") {
  std::vector<HyperparameterDef> defs;
  const int sizes[] = {4, 4, 3};
  for (int g = 1; g <= 3; ++g) {
    for (int k = 0; k < sizes[g - 1]; ++k) {
      defs.push_back(real("s" + std::to_string(g) + "_" + std::to_string(k), 0, 1, S(g)));
    }
  }
  defs.push_back(real("m0", 0, 1, M()));
  defs.push_back(integer("m1", 0, 3, M()));
  auto space = GroupedConfigSpace::build(defs, 3);
  CHECK(space.dim() == 13);
  CHECK(space.dim(S(1)) == 4);
  std::size_t total = 0;
  for (GroupId g : space.groups()) total += space.dim(g);
  CHECK(total == space.dim());

  auto tiny = GroupedConfigSpace::build({real("x", 0, 1, S(1)), real("y", 0, 1, M())}, 1);
  CHECK(tiny.dim() == 2);
}

TEST_CASE("build rejects malformed definitions") {
  CHECK(code_of([] { GroupedConfigSpace::build({real("x", 1.0, 0.5, S(1)), real("m", 0, 1, M())}, 1); }) ==
        ErrorCode::bad_bounds);
  CHECK(code_of([] { GroupedConfigSpace::build({real("x", 0.0, 1.0, S(1), true), real("m", 0, 1, M())}, 1); }) ==
        ErrorCode::bad_bounds);
  CHECK(code_of([] { GroupedConfigSpace::build({integer("x", 3, 2, S(1)), real("m", 0, 1, M())}, 1); }) ==
        ErrorCode::bad_bounds);
  CHECK(code_of([] { GroupedConfigSpace::build({categorical("x", {}, S(1)), real("m", 0, 1, M())}, 1); }) ==
        ErrorCode::bad_bounds);
  CHECK(code_of([] {
          GroupedConfigSpace::build({real("x", 0, 1, S(1)), real("x", 0, 1, M())}, 1);
        }) == ErrorCode::duplicate_name);
  CHECK(code_of([] {
          GroupedConfigSpace::build({real("x", 0, 1, S(1)), real("m", 0, 1, M())}, 2);
        }) == ErrorCode::empty_group);
  CHECK(code_of([] {
          GroupedConfigSpace::build({real("x", 0, 1, S(1)), real("m", 0, 1, M())}, 0);
        }) == ErrorCode::empty_group);
  CHECK(code_of([] {
          GroupedConfigSpace::build({real("x", 0, 1, S(1)), real("y", 0, 1, S(3)), real("m", 0, 1, M())}, 2);
        }) == ErrorCode::unknown_group);
  CHECK(code_of([] { GroupedConfigSpace::build({real("x", 0, 1, S(1))}, 1); }) ==
        ErrorCode::empty_group);
}

TEST_CASE("group labels round trip") {
  CHECK(S(3).label() == "subnet3");
  CHECK(M().label() == "merge");
  CHECK(GroupId::parse("subnet12") == S(12));
  CHECK(GroupId::parse("merge") == M());
  CHECK_FALSE(GroupId::parse("subnet0").has_value());
  CHECK_FALSE(GroupId::parse("subnet").has_value());
  CHECK_FALSE(GroupId::parse("net1").has_value());
  CHECK(S(2) < M());
  CHECK(S(1) < S(2));
}

TEST_CASE("uniform sampling") {
  SUBCASE("degenerate integer range") {
    auto space = GroupedConfigSpace::build({integer("z", 0, 0, S(1)), real("m", 0, 1, M())}, 1);
    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
      CHECK(std::get<std::int64_t>(space.sample_uniform(rng).at("z")) == 0);
    }
  }
  SUBCASE("log scale is uniform in log10") {
    auto space = GroupedConfigSpace::build({real("lr", 1e-4, 1e-1, S(1), true), real("m", 0, 1, M())}, 1);
    Rng rng(7);
    std::vector<double> logs;
    for (int i = 0; i < 10000; ++i) {
      logs.push_back(std::log10(std::get<double>(space.sample_uniform(rng).at("lr"))));
    }
    std::nth_element(logs.begin(), logs.begin() + 5000, logs.end());
    CHECK(std::abs(logs[5000] + 2.5) <= 0.1);
  }
  SUBCASE("fixed seed reproduces") {
    auto space = small_space();
    Rng a(42), b(42);
    CHECK(space.sample_uniform(a) == space.sample_uniform(b));
  }
  SUBCASE("every draw validates") {
    auto space = small_space();
    Rng rng(3);
    for (int i = 0; i < 10000; ++i) CHECK_NOTHROW(space.validate(space.sample_uniform(rng)));
  }
}

TEST_CASE("group sampling") {
  auto space = GroupedConfigSpace::build(
      {integer("k", 1, 3, S(1)), real("r", 0, 1, S(2)), categorical("only", {"one"}, M())}, 2);
  Rng rng(5);
  CHECK(std::get<std::string>(space.sample_group_uniform(M(), rng).at("only")) == "one");
  auto part = space.sample_group_uniform(S(2), rng);
  CHECK(part.size() == 1);
  CHECK(part.contains("r"));
  // P(some value of {1,2,3} missing in 100 draws) <= 3 (2/3)^100 < 1e-15.
  std::set<std::int64_t> seen;
  for (int i = 0; i < 100; ++i) seen.insert(std::get<std::int64_t>(space.sample_group_uniform(S(1), rng).at("k")));
  CHECK(seen == std::set<std::int64_t>{1, 2, 3});
  CHECK(code_of([&] { space.sample_group_uniform(S(3), rng); }) == ErrorCode::unknown_group);
}

TEST_CASE("compose and project") {
  auto space = small_space();
  Rng rng(11);
  const Configuration a = space.sample_uniform(rng);
  const Configuration b = space.sample_uniform(rng);

  std::map<GroupId, Assignment> parts;
  for (GroupId g : space.groups()) parts[g] = space.project(a, g);
  CHECK(space.compose(parts) == a);

  auto no_merge = parts;
  no_merge.erase(M());
  CHECK(code_of([&] { space.compose(no_merge); }) == ErrorCode::missing_group);

  auto overlap = parts;
  overlap[S(2)]["a"] = 0.5;
  CHECK(code_of([&] { space.compose(overlap); }) == ErrorCode::overlapping_names);

  auto mixed = parts;
  mixed[M()] = space.project(b, M());
  const Configuration c = space.compose(mixed);
  for (const auto& def : space.defs()) {
    const Configuration& expected = def.group.is_merge() ? b : a;
    CHECK(c.at(def.name) == expected.at(def.name));
  }
}

TEST_CASE("validation names the offending parameter") {
  auto space = small_space();
  Rng rng(2);
  Configuration c = space.sample_uniform(rng);
  auto bad = c;
  bad["a"] = 1.5;
  CHECK(message_of([&] { space.validate(bad); }).find("'a'") != std::string::npos);
  bad = c;
  bad["c"] = std::string("w");
  CHECK(code_of([&] { space.validate(bad); }) == ErrorCode::invalid_configuration);
  bad = c;
  bad["b"] = 2.0;  // an integer parameter holding a double
  CHECK(code_of([&] { space.validate(bad); }) == ErrorCode::invalid_configuration);
  bad = c;
  bad.erase("m");
  CHECK(code_of([&] { space.validate(bad); }) == ErrorCode::invalid_configuration);
  bad = c;
  bad["extra"] = 1.0;
  CHECK(code_of([&] { space.validate(bad); }) == ErrorCode::invalid_configuration);
}

TEST_CASE("encoding") {
  auto space = small_space();
  const Configuration c{{"a", 0.25}, {"b", std::int64_t{4}}, {"c", std::string("y")},
                        {"d", 1e-3}, {"m", 0.5}};
  const std::vector<double> expected{0.25, 4.0, 1.0, -3.0, 0.5};
  const auto encoded = space.encode(c);
  REQUIRE(encoded.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) CHECK(encoded[i] == doctest::Approx(expected[i]).epsilon(1e-15));
  CHECK(space.decode(encoded) == c);

  Rng rng(9);
  std::set<std::vector<double>> codes;
  std::set<std::string> texts;
  for (int i = 0; i < 1000; ++i) {
    auto x = space.sample_uniform(rng);
    if (texts.insert(canonical_text(x)).second) codes.insert(space.encode(x));
  }
  CHECK(codes.size() == texts.size());
}

TEST_CASE("decode clamps and rounds") {
  auto space = small_space();
  const Configuration c = space.decode({-1.0, 4.6, 2.7, 5.0, 2.0});
  CHECK(std::get<double>(c.at("a")) == 0.0);
  CHECK(std::get<std::int64_t>(c.at("b")) == 5);
  CHECK(std::get<std::string>(c.at("c")) == "z");
  CHECK(std::get<double>(c.at("d")) == doctest::Approx(1.0));
  CHECK(std::get<double>(c.at("m")) == 1.0);
  CHECK(code_of([&] { space.decode({0.0}); }) == ErrorCode::dimension_mismatch);
}

TEST_CASE("canonical text distinguishes value types") {
  Assignment a{{"x", std::int64_t{1}}};
  Assignment b{{"x", 1.0}};
  Assignment c{{"x", std::string("1")}};
  CHECK(canonical_text(a) != canonical_text(b));
  CHECK(canonical_text(b) != canonical_text(c));
  CHECK(canonical_text(a) == canonical_text(Assignment{{"x", std::int64_t{1}}}));
}
