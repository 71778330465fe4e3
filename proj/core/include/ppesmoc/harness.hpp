#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ppesmoc/problems.hpp"
#include "ppesmoc/types.hpp"

namespace ppesmoc {

enum class Method { PPESMOC, PSPesmoc, Random };

Method parse_method(const std::string& name);
std::string method_name(Method method);

enum class InfeasibleScoring {
  Zero,  // a recommendation with any truly infeasible point scores hv = 0
  Drop,  // truly infeasible points are removed before scoring
};

struct ExperimentConfig {
  std::string problem = "constr";
  // Synthetic problem ("synthetic") parameters.
  std::uint64_t synthetic_seed = 1;
  int synthetic_dim = 2;
  int synthetic_objectives = 2;
  int synthetic_constraints = 2;
  double synthetic_lengthscale = 0.25;
  // none | range (1% of each function's range) | a number (noise variance).
  std::string noise = "none";

  Method method = Method::PPESMOC;
  int batch_size = 4;
  int iterations = 10;
  int repetitions = 1;
  std::uint64_t seed = 0;
  int threads = 1;

  int num_hyper = 10;
  int burn_in = 100;
  int warm_burn_in = 10;
  int pareto_samples = 10;
  int pareto_grid = 1000;
  int pareto_max = 50;
  int num_features = 500;
  int ep_max_sweeps = 200;
  int n_restarts = 5;
  int max_iters = 100;

  int recommend_grid = 10000;
  double feasibility_threshold = 0.95;
  int hv_grid = 400;
  InfeasibleScoring infeasible = InfeasibleScoring::Zero;

  std::string output_dir;
};

// Flat "key = value" lines; '#' starts a comment. Unknown keys throw.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
std::string config_to_text(const ExperimentConfig& config);

ProblemSpec resolve_problem(const ExperimentConfig& config);

struct IterationRow {
  int iteration = 0;
  double seconds = 0.0;
  Points batch;         // problem units
  Matrix observations;  // batch rows x (objectives then constraints)
  double hv = 0.0;
  double log_gap = 0.0;
  int refits = 0;
};

struct RunRecord {
  int repetition = 0;
  std::uint64_t seed = 0;
  std::string status = "ok";
  double hv_truth = 0.0;
  Vector reference;
  std::vector<IterationRow> rows;

  int evaluations() const;
};

RunRecord run_experiment(const ExperimentConfig& config, int repetition);

// All repetitions, concurrently when config.threads > 1. Writes one CSV per
// repetition and a manifest when config.output_dir is set.
std::vector<RunRecord> run_experiments(const ExperimentConfig& config);

void write_record_csv(const RunRecord& record, std::ostream& out);
std::string record_csv_name(int repetition);

struct SummaryRow {
  int iteration = 0;
  int count = 0;
  double mean_log_gap = 0.0;
  double stderr_log_gap = 0.0;
  double median_seconds = 0.0;
  double mad_seconds = 0.0;
};

// Per-iteration mean and standard error of the log gap, median and median
// absolute deviation of the selection time.
std::vector<SummaryRow> aggregate(const std::vector<RunRecord>& records);
// Reads every rep_*.csv in dir.
std::vector<RunRecord> read_records(const std::string& dir);
void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);

}  // namespace ppesmoc
