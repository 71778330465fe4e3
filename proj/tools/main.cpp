#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "ppesmoc/harness.hpp"
#include "ppesmoc/problems.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Batch constrained multi-objective Bayesian optimisation"};
  app.require_subcommand(1);

  std::string config_path, output_override;
  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("--config", config_path, "Config file (key = value lines)")->required();
  run->add_option("--out", output_override, "Override output_dir");

  std::string dir, summary_path;
  auto* agg = app.add_subcommand("aggregate", "Summarise the rep_*.csv files of a run directory");
  agg->add_option("--dir", dir, "Run directory")->required();
  agg->add_option("--output", summary_path, "Summary CSV (default <dir>/summary.csv)");

  auto* list = app.add_subcommand("bench-list", "List the available problems");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ppesmoc::ExperimentConfig config = ppesmoc::load_config(config_path);
      if (!output_override.empty()) config.output_dir = output_override;
      const auto records = ppesmoc::run_experiments(config);
      int failed = 0;
      for (const auto& r : records) {
        const double final_gap = r.rows.empty() ? 0.0 : r.rows.back().log_gap;
        std::cout << "rep " << r.repetition << ": " << r.status << ", " << r.evaluations()
                  << " evaluations, final log gap " << std::setprecision(6) << final_gap << '\n';
        if (r.status != "ok") ++failed;
      }
      if (!config.output_dir.empty()) {
        std::ofstream out(std::filesystem::path(config.output_dir) / "summary.csv");
        ppesmoc::write_summary_csv(ppesmoc::aggregate(records), out);
        std::cout << "wrote " << config.output_dir << '\n';
      }
      return failed == 0 ? 0 : 2;
    }
    if (*agg) {
      const auto records = ppesmoc::read_records(dir);
      if (records.empty()) {
        std::cerr << "no rep_*.csv files in " << dir << '\n';
        return 1;
      }
      const auto rows = ppesmoc::aggregate(records);
      if (summary_path.empty()) summary_path = (std::filesystem::path(dir) / "summary.csv").string();
      std::ofstream out(summary_path);
      ppesmoc::write_summary_csv(rows, out);
      ppesmoc::write_summary_csv(rows, std::cout);
      return 0;
    }
    if (*list) {
      for (const auto& name : ppesmoc::benchmark_names()) {
        const auto p = ppesmoc::make_benchmark(name);
        std::cout << name << "  d=" << p.dim << " K=" << p.num_objectives
                  << " J=" << p.num_constraints << '\n';
      }
      std::cout << "synthetic  d,K,J from synthetic_* config keys\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
