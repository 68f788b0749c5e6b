#include "subnet_hpo/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <utility>

#include <json.hpp>

#include "subnet_hpo/error.hpp"
#include "subnet_hpo/journal.hpp"

namespace subnet_hpo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io_error, "cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  return out;
}

void run_one(const ExperimentPlan& plan, const SurrogateObjective& objective,
             const fs::path& path, const JournalHeader& header, RunSummary& summary) {
  RunState state{History{}, key_stream_for(header.seed, header.fold)};
  std::optional<JournalWriter> writer;
  if (fs::exists(path)) {
    Journal journal = read_journal(path);
    if (journal.header != header) {
      throw Error(ErrorCode::resume_mismatch,
                  path.string() + " was written by a different experiment (digest " +
                      journal.header.plan_digest + ", expected " + header.plan_digest + ")");
    }
    if (!journal.records.empty()) state.keys = KeyStream(journal.records.back().rng_state);
    state.history = History(std::move(journal.records));
    writer.emplace(JournalWriter::resume(path, journal.valid_bytes));
    ++summary.resumed;
  } else {
    writer.emplace(JournalWriter::create(path, header));
  }
  run_until(plan.scheduler, objective, plan.params, plan.budget, state,
            [&](const TrialRecord& record) {
              writer->append(record);
              ++summary.trials_added;
            });
  ++summary.journals;
}

struct RunKey {
  std::uint64_t seed;
  std::uint64_t fold;
  auto operator<=>(const RunKey&) const = default;
};

std::string key_label(const RunKey& k) {
  return "seed" + std::to_string(k.seed) + "_fold" + std::to_string(k.fold);
}

std::map<RunKey, History> load_runs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::io_error, dir.string() + " is not a directory");
  std::map<RunKey, History> runs;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() != ".jsonl") continue;
    Journal journal = read_journal(entry.path());
    if (journal.records.empty()) continue;
    const RunKey key{journal.header.seed, journal.header.fold};
    if (runs.contains(key)) {
      throw Error(ErrorCode::unpaired_runs,
                  dir.string() + " holds two journals for " + key_label(key));
    }
    runs.emplace(key, History(std::move(journal.records)));
  }
  return runs;
}

void write_curve_rows(std::ostream& out, const std::string& series, const RegretCurve& curve) {
  for (const auto& s : curve.steps) {
    out << series << ',' << json(s.time).dump() << ',' << json(s.best_so_far).dump() << ','
        << json(s.regret).dump() << '\n';
  }
}

json report_json(const SpeedupReport& report, CrossingRule rule) {
  json pairs = json::array();
  for (const auto& p : report.pairs) {
    json levels = json::array();
    for (const auto& l : p.levels) {
      levels.push_back({{"level", l.level},
                        {"baseline_time", l.baseline_time},
                        {"method_time", l.method_time},
                        {"speedup", l.speedup},
                        {"censored", l.censored}});
    }
    pairs.push_back({{"label", p.label},
                     {"reference_best", p.baseline.reference_best},
                     {"baseline_final_best", p.baseline.final_best()},
                     {"method_final_best", p.method.final_best()},
                     {"baseline_final_regret", p.baseline.final_regret()},
                     {"method_final_regret", p.method.final_regret()},
                     {"final_speedup", p.final_speedup},
                     {"gain", p.gain},
                     {"levels", levels}});
  }
  return json{{"crossing_rule", rule == CrossingRule::conservative ? "conservative" : "aggressive"},
              {"mean_speedup", report.mean_speedup},
              {"max_speedup", report.max_speedup},
              {"final_speedup", report.final_speedup},
              {"final_gain", report.final_gain},
              {"censored_levels", report.censored_levels},
              {"pairs", pairs}};
}

}  // namespace

std::string journal_name(SchedulerKind kind, std::uint64_t seed, std::uint64_t fold) {
  return to_string(kind) + "_seed" + std::to_string(seed) + "_fold" + std::to_string(fold) + ".jsonl";
}

std::uint64_t seed_offset_from_env() {
  const char* raw = std::getenv("SUBNET_HPO_SEED_OFFSET");
  if (!raw || !*raw) return 0;
  const std::string text(raw);
  std::uint64_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || end != text.data() + text.size()) {
    throw Error(ErrorCode::validation_error,
                "SUBNET_HPO_SEED_OFFSET: expected a nonnegative integer, got '" + text + "'");
  }
  return value;
}

RunSummary cmd_run(const ExperimentPlan& plan, const fs::path& out_dir, std::uint64_t seed_offset) {
  const fs::path dir = out_dir.empty() ? plan.output : out_dir;
  ensure_dir(dir);
  const SurrogateObjective objective = plan.problem.objective();
  const std::string digest = plan.digest();
  RunSummary summary;
  for (std::uint64_t base_seed : plan.seeds) {
    const std::uint64_t seed = base_seed + seed_offset;
    for (std::uint64_t fold = 0; fold < plan.folds; ++fold) {
      const JournalHeader header{digest, to_string(plan.scheduler), seed, fold, plan.budget};
      run_one(plan, objective, dir / journal_name(plan.scheduler, seed, fold), header, summary);
    }
  }
  return summary;
}

SpeedupReport cmd_compare(const fs::path& baseline_dir, const fs::path& method_dir,
                          const fs::path& out_file, CrossingRule rule) {
  const auto baseline = load_runs(baseline_dir);
  const auto method = load_runs(method_dir);
  for (const auto& [key, h] : baseline) {
    if (!method.contains(key)) {
      throw Error(ErrorCode::unpaired_runs, key_label(key) + " missing from " + method_dir.string());
    }
  }
  for (const auto& [key, h] : method) {
    if (!baseline.contains(key)) {
      throw Error(ErrorCode::unpaired_runs,
                  key_label(key) + " missing from " + baseline_dir.string());
    }
  }
  if (baseline.empty()) throw Error(ErrorCode::unpaired_runs, "no journals to compare");

  std::vector<std::vector<TimedValue>> b_values, m_values;
  std::vector<std::string> labels;
  for (const auto& [key, h] : baseline) {
    b_values.push_back(timed_losses(h));
    m_values.push_back(timed_losses(method.at(key)));
    labels.push_back(key_label(key));
  }
  const SpeedupReport report = summarize(b_values, m_values, Orientation::minimize, rule, labels);

  if (out_file.has_parent_path()) ensure_dir(out_file.parent_path());
  open_out(out_file) << report_json(report, rule).dump(2) << '\n';
  for (const auto& pair : report.pairs) {
    fs::path csv = out_file;
    csv.replace_filename(out_file.stem().string() + "_" + pair.label + ".csv");
    auto out = open_out(csv);
    out << "series,time,best,regret\n";
    write_curve_rows(out, "baseline", pair.baseline);
    write_curve_rows(out, "method", pair.method);
    if (!out) throw Error(ErrorCode::io_error, "write failed on " + csv.string());
  }
  return report;
}

fs::path cmd_report(const fs::path& journal_path, const fs::path& csv_dir) {
  Journal journal = read_journal(journal_path);
  if (journal.records.empty()) {
    throw Error(ErrorCode::empty_history, journal_path.string() + " holds no trials");
  }
  const History history(std::move(journal.records));
  const RegretCurve curve = regret_curve(history);
  ensure_dir(csv_dir);
  const fs::path csv = csv_dir / (journal_path.stem().string() + "_regret.csv");
  auto out = open_out(csv);
  out << "time,best,regret\n";
  for (const auto& s : curve.steps) {
    out << json(s.time).dump() << ',' << json(s.best_so_far).dump() << ',' << json(s.regret).dump()
        << '\n';
  }
  if (!out) throw Error(ErrorCode::io_error, "write failed on " + csv.string());
  return csv;
}

int exit_code_for(const Error& error) { return error.code() == ErrorCode::io_error ? 2 : 1; }

}  // namespace subnet_hpo
