#include <CLI11.hpp>
#include <iostream>

#include "subnet_hpo/cli.hpp"
#include "subnet_hpo/error.hpp"

using namespace subnet_hpo;

int main(int argc, char** argv) {
  CLI::App app{"Hyperparameter optimization for multi-subnetwork models"};
  app.require_subcommand(1);

  std::string config, out_dir;
  auto* run = app.add_subcommand("run", "Run an experiment, resuming existing journals");
  run->add_option("--config", config, "Experiment config (.toml or .json)")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the config)");

  std::string baseline, method, report_out;
  bool aggressive = false;
  auto* compare = app.add_subcommand("compare", "Speedup report of method runs against a baseline");
  compare->add_option("--baseline", baseline, "Baseline journal directory")->required();
  compare->add_option("--method", method, "Method journal directory")->required();
  compare->add_option("--out", report_out, "JSON report path")->required();
  compare->add_flag("--aggressive-speedup", aggressive,
                    "Time the baseline when it first drops strictly below each level");

  std::string journal, csv_dir;
  auto* report = app.add_subcommand("report", "Regret curve CSV of one journal");
  report->add_option("--in", journal, "Journal file")->required();
  report->add_option("--csv", csv_dir, "Directory for the CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      const ExperimentPlan plan = parse_experiment_config(config);
      const RunSummary s = cmd_run(plan, out_dir, seed_offset_from_env());
      std::cout << s.journals << " journal(s), " << s.trials_added << " new trial(s), "
                << s.resumed << " resumed\n";
    } else if (*compare) {
      const SpeedupReport r = cmd_compare(
          baseline, method, report_out,
          aggressive ? CrossingRule::aggressive : CrossingRule::conservative);
      std::cout << "pairs " << r.pairs.size() << "  mean speedup " << r.mean_speedup
                << "  max " << r.max_speedup << "  final " << r.final_speedup << "  gain "
                << r.final_gain << '\n';
    } else if (*report) {
      std::cout << cmd_report(journal, csv_dir).string() << '\n';
    }
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
