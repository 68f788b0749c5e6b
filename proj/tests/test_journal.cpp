#include "helpers.hpp"
#include "subnet_hpo/journal.hpp"

using namespace testing;

namespace {

JournalHeader header() { return {"00ff00ff00ff00ff", "dcbo", 3, 1, 12345.5}; }

}  // namespace

TEST_CASE("journal lines round trip exactly") {
  auto obj = find_benchmark("dc-4").objective();
  const auto h = run(SchedulerKind::dcbo, obj, SchedulerParams{}, 40 * obj.expected_complete_cost(), 5);
  REQUIRE(h.size() > 10);
  bool saw_transfer = false;
  for (const auto& r : h.records()) {
    saw_transfer = saw_transfer || r.plan.kind == PlanKind::transfer;
    const auto line = journal_line(r);
    CHECK(line.find('\n') == std::string::npos);
    CHECK(parse_journal_line(line) == r);
  }
  CHECK(saw_transfer);
  CHECK(parse_header_line(header_line(header())) == header());
}

TEST_CASE("journal files") {
  TempDir dir("journal");
  const auto path = dir.path() / "j.jsonl";
  auto obj = find_benchmark("dc-4").objective();
  const auto h = run(SchedulerKind::sabo, obj, SchedulerParams{}, 10 * obj.expected_complete_cost(), 6);
  {
    auto w = JournalWriter::create(path, header());
    for (const auto& r : h.records()) w.append(r);
  }
  auto j = read_journal(path);
  CHECK(j.header == header());
  CHECK(j.records == h.records());
  CHECK_FALSE(j.dropped_partial_line);
  CHECK(j.valid_bytes == std::filesystem::file_size(path));

  SUBCASE("a torn final line is dropped and cut on resume") {
    const auto whole = slurp(path);
    spit(path, whole + journal_line(h.back()).substr(0, 40));
    auto torn = read_journal(path);
    CHECK(torn.dropped_partial_line);
    CHECK(torn.records == h.records());
    CHECK(torn.valid_bytes == whole.size());
    { auto w = JournalWriter::resume(path, torn.valid_bytes); }
    CHECK(slurp(path) == whole);
  }
  SUBCASE("malformed content") {
    spit(path, slurp(path) + "{not json}\n");
    CHECK(code_of([&] { read_journal(path); }) == ErrorCode::parse_error);
    spit(path, "");
    CHECK(code_of([&] { read_journal(path); }) == ErrorCode::parse_error);
  }
  SUBCASE("missing file") {
    CHECK(code_of([&] { read_journal(dir.path() / "absent.jsonl"); }) == ErrorCode::io_error);
  }
}
