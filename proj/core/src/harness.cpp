#include "ppesmoc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ppesmoc/acquisition.hpp"
#include "ppesmoc/baselines.hpp"
#include "ppesmoc/metrics.hpp"

namespace ppesmoc {

Method parse_method(const std::string& name) {
  if (name == "ppesmoc") return Method::PPESMOC;
  if (name == "ps_pesmoc") return Method::PSPesmoc;
  if (name == "random") return Method::Random;
  throw std::invalid_argument("unknown method: " + name);
}

std::string method_name(Method method) {
  switch (method) {
    case Method::PPESMOC: return "ppesmoc";
    case Method::PSPesmoc: return "ps_pesmoc";
    case Method::Random: return "random";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Field {
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field number(T ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) {
            std::size_t pos = 0;
            if constexpr (std::is_floating_point_v<T>) c.*member = std::stod(v, &pos);
            else if constexpr (std::is_same_v<T, std::uint64_t>) c.*member = std::stoull(v, &pos);
            else c.*member = static_cast<T>(std::stol(v, &pos));
            if (pos != v.size()) throw std::invalid_argument("bad number: " + v);
          },
          [member](const ExperimentConfig& c) {
            std::ostringstream os;
            os << std::setprecision(17) << c.*member;
            return os.str();
          }};
}

Field text(std::string ExperimentConfig::*member) {
  return {[member](ExperimentConfig& c, const std::string& v) { c.*member = v; },
          [member](const ExperimentConfig& c) { return c.*member; }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = {
      {"problem", text(&ExperimentConfig::problem)},
      {"synthetic_seed", number(&ExperimentConfig::synthetic_seed)},
      {"synthetic_dim", number(&ExperimentConfig::synthetic_dim)},
      {"synthetic_objectives", number(&ExperimentConfig::synthetic_objectives)},
      {"synthetic_constraints", number(&ExperimentConfig::synthetic_constraints)},
      {"synthetic_lengthscale", number(&ExperimentConfig::synthetic_lengthscale)},
      {"noise", text(&ExperimentConfig::noise)},
      {"method",
       {[](ExperimentConfig& c, const std::string& v) { c.method = parse_method(v); },
        [](const ExperimentConfig& c) { return method_name(c.method); }}},
      {"batch_size", number(&ExperimentConfig::batch_size)},
      {"iterations", number(&ExperimentConfig::iterations)},
      {"repetitions", number(&ExperimentConfig::repetitions)},
      {"seed", number(&ExperimentConfig::seed)},
      {"threads", number(&ExperimentConfig::threads)},
      {"num_hyper", number(&ExperimentConfig::num_hyper)},
      {"burn_in", number(&ExperimentConfig::burn_in)},
      {"warm_burn_in", number(&ExperimentConfig::warm_burn_in)},
      {"pareto_samples", number(&ExperimentConfig::pareto_samples)},
      {"pareto_grid", number(&ExperimentConfig::pareto_grid)},
      {"pareto_max", number(&ExperimentConfig::pareto_max)},
      {"num_features", number(&ExperimentConfig::num_features)},
      {"ep_max_sweeps", number(&ExperimentConfig::ep_max_sweeps)},
      {"n_restarts", number(&ExperimentConfig::n_restarts)},
      {"max_iters", number(&ExperimentConfig::max_iters)},
      {"recommend_grid", number(&ExperimentConfig::recommend_grid)},
      {"feasibility_threshold", number(&ExperimentConfig::feasibility_threshold)},
      {"hv_grid", number(&ExperimentConfig::hv_grid)},
      {"infeasible",
       {[](ExperimentConfig& c, const std::string& v) {
          if (v == "zero") c.infeasible = InfeasibleScoring::Zero;
          else if (v == "drop") c.infeasible = InfeasibleScoring::Drop;
          else throw std::invalid_argument("infeasible must be zero or drop");
        },
        [](const ExperimentConfig& c) {
          return std::string(c.infeasible == InfeasibleScoring::Zero ? "zero" : "drop");
        }}},
      {"output_dir", text(&ExperimentConfig::output_dir)},
  };
  return table;
}

void validate(const ExperimentConfig& c) {
  if (c.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (c.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (c.repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (c.threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (c.num_hyper < 1 || c.pareto_samples < 1) throw std::invalid_argument("sample counts must be >= 1");
  if (c.n_restarts < 1) throw std::invalid_argument("n_restarts must be >= 1");
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(number) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end())
      throw std::invalid_argument("config line " + std::to_string(number) + ": unknown key " + key);
    try {
      it->second.set(config, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(number) + ": " + e.what());
    }
  }
  validate(config);
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return parse_config(in);
}

std::string config_to_text(const ExperimentConfig& config) {
  std::ostringstream os;
  for (const auto& [key, field] : fields()) os << key << " = " << field.get(config) << '\n';
  return os.str();
}

ProblemSpec resolve_problem(const ExperimentConfig& config) {
  ProblemSpec problem;
  if (config.problem == "synthetic") {
    KernelParams kernel;
    kernel.amplitude2 = 1.0;
    kernel.lengthscales = Vector::Constant(config.synthetic_dim, config.synthetic_lengthscale);
    kernel.noise_var = 0.0;
    problem = make_synthetic(config.synthetic_seed, config.synthetic_dim,
                             config.synthetic_objectives, config.synthetic_constraints, kernel)
                  .spec;
  } else {
    problem = make_benchmark(config.problem);
  }
  if (config.noise == "none") return problem;
  if (config.noise == "range") return with_range_noise(std::move(problem));
  std::size_t pos = 0;
  const double var = std::stod(config.noise, &pos);
  if (pos != config.noise.size() || var < 0.0)
    throw std::invalid_argument("noise must be none, range or a variance");
  problem.noise_std_objectives.setConstant(std::sqrt(var));
  problem.noise_std_constraints.setConstant(std::sqrt(var));
  return problem;
}

int RunRecord::evaluations() const {
  int n = 0;
  for (const auto& r : rows) n += static_cast<int>(r.batch.rows());
  return n;
}

namespace {

Vector to_problem(const Bounds& bounds, const Vector& u) {
  return bounds.col(0) + u.cwiseProduct(bounds.col(1) - bounds.col(0));
}

double score_recommendation(const ProblemSpec& problem, const Recommendation& rec,
                            const Vector& ref, InfeasibleScoring rule) {
  std::vector<Vector> kept;
  for (Eigen::Index i = 0; i < rec.points.rows(); ++i) {
    const Evaluation e = evaluate(problem, to_problem(problem.bounds, rec.points.row(i).transpose()));
    const bool feasible = e.constraints.size() == 0 || e.constraints.minCoeff() >= 0.0;
    if (!feasible) {
      if (rule == InfeasibleScoring::Zero) return 0.0;
      continue;
    }
    kept.push_back(e.objectives);
  }
  Matrix front(kept.size(), problem.num_objectives);
  for (std::size_t i = 0; i < kept.size(); ++i) front.row(i) = kept[i].transpose();
  return hypervolume_2d(front, ref);
}

}  // namespace

RunRecord run_experiment(const ExperimentConfig& config, int repetition) {
  RunRecord record;
  record.repetition = repetition;
  record.seed = derive_seed(config.seed, static_cast<std::uint64_t>(repetition));
  Rng select_rng(derive_seed(record.seed, 1));
  Rng eval_rng(derive_seed(record.seed, 2));
  Rng fit_rng(derive_seed(record.seed, 3));
  Rng rec_rng(derive_seed(record.seed, 4));

  try {
    validate(config);
    const ProblemSpec problem = resolve_problem(config);
    if (problem.num_objectives != 2)
      throw std::invalid_argument("harness: hypervolume scoring needs two objectives");
    const int d = problem.dim;
    const int k_count = problem.num_objectives;
    const int g_count = k_count + problem.num_constraints;
    const Bounds unit = unit_bounds(d);
    record.reference = reference_point(problem, config.hv_grid);
    record.hv_truth = true_hypervolume(problem, record.reference, config.hv_grid);

    SurrogateOptions sopts;
    sopts.num_hyper = config.num_hyper;
    sopts.slice.burn_in = config.burn_in;
    sopts.warm_burn_in = config.warm_burn_in;
    ContextOptions copts;
    copts.num_pareto_samples = config.pareto_samples;
    copts.pareto.grid_size = config.pareto_grid;
    copts.pareto.max_points = config.pareto_max;
    copts.pareto.num_features = config.num_features;
    copts.ep.max_sweeps = config.ep_max_sweeps;
    OptimizeOptions oopts;
    oopts.n_restarts = config.n_restarts;
    oopts.max_iters = config.max_iters;
    const ContextBuilder builder = [&](const SurrogateSet& s, Rng& rng) {
      return build_context(s, unit, copts, rng);
    };

    Points x_unit(0, d);
    std::vector<Vector> y(g_count, Vector(0));
    SurrogateSet surrogates;
    bool fitted = false;

    for (int t = 0; t < config.iterations; ++t) {
      IterationRow row;
      row.iteration = t;
      const auto start = std::chrono::steady_clock::now();
      Points batch;
      if (t == 0 || config.method == Method::Random) {
        batch = random_batch(unit, config.batch_size, select_rng);
      } else if (config.method == Method::PPESMOC) {
        const AcquisitionContext ctx = builder(surrogates, select_rng);
        batch = optimize_batch(ctx, config.batch_size, oopts, select_rng).x;
        row.refits = 1;
      } else {
        SequentialBatch sb =
            parallel_sequential(builder, surrogates, config.batch_size, oopts, select_rng);
        batch = std::move(sb.x);
        row.refits = sb.refits;
      }
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

      const int nb = static_cast<int>(batch.rows());
      row.batch.resize(nb, d);
      row.observations.resize(nb, g_count);
      const Eigen::Index n_old = x_unit.rows();
      x_unit.conservativeResize(n_old + nb, d);
      for (auto& v : y) v.conservativeResize(n_old + nb);
      for (int b = 0; b < nb; ++b) {
        const Vector xp = to_problem(problem.bounds, batch.row(b).transpose());
        const Evaluation e = evaluate_noisy(problem, xp, eval_rng);
        row.batch.row(b) = xp.transpose();
        row.observations.row(b) << e.objectives.transpose(), e.constraints.transpose();
        x_unit.row(n_old + b) = batch.row(b);
        for (int g = 0; g < g_count; ++g) y[g][n_old + b] = row.observations(b, g);
      }

      surrogates = fit_surrogates(x_unit, y, k_count, sopts, fit_rng, fitted ? &surrogates : nullptr);
      fitted = true;
      std::vector<std::vector<GPModel>> models;
      for (int h = 0; h < surrogates.num_hyper(); ++h) models.push_back(surrogates.models(h));
      Points grid(config.recommend_grid + x_unit.rows(), d);
      grid << uniform_points(unit, config.recommend_grid, rec_rng), x_unit;
      const Recommendation rec = recommend(models, k_count, grid, config.feasibility_threshold);
      row.hv = score_recommendation(problem, rec, record.reference, config.infeasible);
      row.log_gap = log_relative_hv_gap(record.hv_truth, row.hv);
      record.rows.push_back(std::move(row));
    }
  } catch (const std::exception& e) {
    record.status = std::string("error: ") + e.what();
  }
  return record;
}

std::string record_csv_name(int repetition) {
  std::ostringstream os;
  os << "rep_" << std::setw(3) << std::setfill('0') << repetition << ".csv";
  return os.str();
}

void write_record_csv(const RunRecord& record, std::ostream& out) {
  out << std::setprecision(17);
  out << "iter,seconds,hv,log_gap";
  if (!record.rows.empty()) {
    const auto& r0 = record.rows.front();
    for (Eigen::Index b = 0; b < r0.batch.rows(); ++b)
      for (Eigen::Index t = 0; t < r0.batch.cols(); ++t) out << ",x" << b << "_" << t;
    for (Eigen::Index b = 0; b < r0.observations.rows(); ++b)
      for (Eigen::Index g = 0; g < r0.observations.cols(); ++g) out << ",y" << b << "_" << g;
  }
  out << '\n';
  for (const auto& r : record.rows) {
    out << r.iteration << ',' << r.seconds << ',' << r.hv << ',' << r.log_gap;
    for (Eigen::Index b = 0; b < r.batch.rows(); ++b)
      for (Eigen::Index t = 0; t < r.batch.cols(); ++t) out << ',' << r.batch(b, t);
    for (Eigen::Index b = 0; b < r.observations.rows(); ++b)
      for (Eigen::Index g = 0; g < r.observations.cols(); ++g) out << ',' << r.observations(b, g);
    out << '\n';
  }
}

namespace {

void write_manifest(const ExperimentConfig& config, const std::vector<RunRecord>& records,
                    const std::filesystem::path& path) {
  nlohmann::json j;
  nlohmann::json cfg;
  for (const auto& [key, field] : fields()) cfg[key] = field.get(config);
  j["config"] = cfg;
  j["version"] = PPESMOC_VERSION;
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
               "." + std::to_string(EIGEN_MINOR_VERSION);
  j["seed"] = config.seed;
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json refits = nlohmann::json::array();
    for (const auto& row : r.rows) refits.push_back(row.refits);
    reps.push_back({{"repetition", r.repetition},
                    {"seed", r.seed},
                    {"status", r.status},
                    {"evaluations", r.evaluations()},
                    {"hv_truth", r.hv_truth},
                    {"refits", refits},
                    {"file", record_csv_name(r.repetition)}});
  }
  j["repetitions"] = reps;
  std::ofstream out(path);
  out << j.dump(2) << '\n';
}

}  // namespace

std::vector<RunRecord> run_experiments(const ExperimentConfig& config) {
  validate(config);
  std::vector<RunRecord> records(config.repetitions);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next++; r < config.repetitions; r = next++) records[r] = run_experiment(config, r);
  };
  const int n_threads = std::min(config.threads, config.repetitions);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (!config.output_dir.empty()) {
    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir);
    for (const auto& r : records) {
      std::ofstream out(dir / record_csv_name(r.repetition));
      write_record_csv(r, out);
    }
    write_manifest(config, records, dir / "manifest.json");
  }
  return records;
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::vector<SummaryRow> aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  std::size_t n_iter = 0;
  for (const auto& r : records) n_iter = std::max(n_iter, r.rows.size());
  std::vector<SummaryRow> out;
  for (std::size_t t = 0; t < n_iter; ++t) {
    std::vector<double> gaps, secs;
    for (const auto& r : records)
      if (t < r.rows.size()) {
        gaps.push_back(r.rows[t].log_gap);
        secs.push_back(r.rows[t].seconds);
      }
    SummaryRow row;
    row.iteration = static_cast<int>(t);
    row.count = static_cast<int>(gaps.size());
    double mean = 0.0;
    for (double g : gaps) mean += g;
    mean /= gaps.size();
    double ss = 0.0;
    for (double g : gaps) ss += (g - mean) * (g - mean);
    row.mean_log_gap = mean;
    row.stderr_log_gap =
        gaps.size() > 1 ? std::sqrt(ss / (gaps.size() - 1)) / std::sqrt(double(gaps.size())) : 0.0;
    row.median_seconds = median(secs);
    std::vector<double> dev;
    for (double s : secs) dev.push_back(std::abs(s - row.median_seconds));
    row.mad_seconds = median(dev);
    out.push_back(row);
  }
  return out;
}

std::vector<RunRecord> read_records(const std::string& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("rep_", 0) == 0 && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<RunRecord> records;
  for (const auto& path : files) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    RunRecord r;
    r.repetition = static_cast<int>(records.size());
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      std::istringstream ls(line);
      std::string cell;
      std::vector<double> v;
      while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
      if (v.size() < 4) throw std::runtime_error("malformed row in " + path.string());
      IterationRow row;
      row.iteration = static_cast<int>(v[0]);
      row.seconds = v[1];
      row.hv = v[2];
      row.log_gap = v[3];
      r.rows.push_back(std::move(row));
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << std::setprecision(17);
  out << "iter,count,mean_log_gap,stderr_log_gap,median_seconds,mad_seconds\n";
  for (const auto& r : rows)
    out << r.iteration << ',' << r.count << ',' << r.mean_log_gap << ',' << r.stderr_log_gap << ','
        << r.median_seconds << ',' << r.mad_seconds << '\n';
}

}  // namespace ppesmoc
