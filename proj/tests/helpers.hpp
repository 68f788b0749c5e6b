#pragma once

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "subnet_hpo/error.hpp"
#include "subnet_hpo/space.hpp"

namespace testing {

using namespace subnet_hpo;

inline HyperparameterDef real(const std::string& name, double lo, double hi, GroupId g,
                              bool log = false) {
  return {name, ContinuousRange{lo, hi, log}, g};
}
inline HyperparameterDef integer(const std::string& name, std::int64_t lo, std::int64_t hi,
                                 GroupId g) {
  return {name, IntegerRange{lo, hi}, g};
}
inline HyperparameterDef categorical(const std::string& name, std::vector<std::string> choices,
                                     GroupId g) {
  return {name, CategoricalChoices{std::move(choices)}, g};
}

inline GroupId S(int i) { return GroupId::subnet(i); }
inline GroupId M() { return GroupId::merge(); }

/// Two subnets with one parameter of every kind between them, plus a merge.
inline GroupedConfigSpace small_space() {
  return GroupedConfigSpace::build(
      {real("a", 0.0, 1.0, S(1)), integer("b", 1, 5, S(1)),
       categorical("c", {"x", "y", "z"}, S(2)), real("d", 1e-3, 1.0, S(2), true),
       real("m", 0.0, 1.0, M())},
      2);
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::io_error;
}

template <typename F>
std::string message_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  FAIL("expected an Error");
  return {};
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("subnet_hpo_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

}  // namespace testing
