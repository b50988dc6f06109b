#include "ergodic_smpc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ergodic_smpc/error.hpp"
#include "ergodic_smpc/parallel.hpp"

namespace ergodic_smpc {
namespace fs = std::filesystem;
namespace {

constexpr std::uint64_t kRunStream = 1;
constexpr std::size_t kDemoBurnIn = 100;

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string format_list(const Eigen::VectorXd& v) {
  std::vector<std::string> parts;
  for (Eigen::Index i = 0; i < v.size(); ++i) parts.push_back(format_double(v[i]));
  return "[" + join(parts, ", ") + "]";
}

StateVector initial_state_for(const ExperimentConfig& config, std::size_t d) {
  if (config.initial_state.empty()) return StateVector::Zero(static_cast<Eigen::Index>(d));
  if (config.initial_state.size() != d) throw InvalidArgumentError("initial state has the wrong dimension");
  return Eigen::Map<const Eigen::VectorXd>(config.initial_state.data(), static_cast<Eigen::Index>(d));
}

std::string windows_csv(const DiagnosticReport& r) {
  std::string out = "window,start,end,dim,bin_lo,bin_hi,proportion\n";
  for (std::size_t w = 0; w < r.measures.size(); ++w) {
    const auto& m = r.measures[w];
    for (std::size_t i = 0; i < m.dimension(); ++i) {
      for (std::size_t k = 0; k + 1 < m.edges[i].size(); ++k) {
        out += std::to_string(w) + "," + std::to_string(r.windows[w].start) + "," + std::to_string(r.windows[w].end) +
               "," + std::to_string(i) + "," + format_double(m.edges[i][k]) + "," + format_double(m.edges[i][k + 1]) +
               "," + format_double(m.proportions[i][k]) + "\n";
      }
    }
  }
  return out;
}

RunResult analyse(Trajectory traj, const ExperimentConfig& config) {
  RunResult run;
  traj.selections.clear();
  traj.selections.shrink_to_fit();
  run.histogram = build_histogram(traj, config.n_bins);
  run.diagnostic = stationarity_diagnostic(traj, config.n_windows, config.n_bins, config.tolerance,
                                           StationarityOptions{config.burn_in_fraction});
  run.trajectory = std::move(traj);
  return run;
}

}  // namespace

ExperimentConfig ExperimentConfig::smoke() {
  ExperimentConfig c;
  c.n_trials = 1;
  c.n_iterations = 1000;
  c.saa_samples = 20;
  return c;
}

void validate(const ExperimentConfig& c) {
  if (c.n_trials < 1 || c.n_iterations < 1 || c.saa_samples < 1 || c.n_bins < 1 || c.n_windows < 2) {
    throw InvalidArgumentError("trials, iterations, SAA samples and bins must be positive; windows at least 2");
  }
  if (!(c.tolerance >= 0.0)) throw InvalidArgumentError("tolerance must be non-negative");
  if (c.burn_in_fraction < 0.0 || c.burn_in_fraction >= 1.0) throw InvalidArgumentError("burn-in fraction must lie in [0, 1)");
  if (c.check_points < 1 || c.check_pairs < 1) throw InvalidArgumentError("check sample counts must be positive");
  validate(c.generation);
}

Json to_json(const ExperimentConfig& c) {
  return {{"n_trials", c.n_trials},
          {"n_iterations", c.n_iterations},
          {"saa_samples", c.saa_samples},
          {"n_bins", c.n_bins},
          {"n_windows", c.n_windows},
          {"tolerance", c.tolerance},
          {"burn_in_fraction", c.burn_in_fraction},
          {"seed", c.seed},
          {"generation", to_json(c.generation)},
          {"initial_state", c.initial_state},
          {"check_points", c.check_points},
          {"check_pairs", c.check_pairs}};
}

ExperimentConfig config_from_json(const Json& j, ExperimentConfig c) {
  try {
    if (j.contains("n_trials")) c.n_trials = j.at("n_trials").get<std::size_t>();
    if (j.contains("n_iterations")) c.n_iterations = j.at("n_iterations").get<std::size_t>();
    if (j.contains("saa_samples")) c.saa_samples = j.at("saa_samples").get<std::size_t>();
    if (j.contains("n_bins")) c.n_bins = j.at("n_bins").get<std::size_t>();
    if (j.contains("n_windows")) c.n_windows = j.at("n_windows").get<std::size_t>();
    if (j.contains("tolerance")) c.tolerance = j.at("tolerance").get<double>();
    if (j.contains("burn_in_fraction")) c.burn_in_fraction = j.at("burn_in_fraction").get<double>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("workers")) c.workers = j.at("workers").get<std::size_t>();
    if (j.contains("generation")) c.generation = generation_spec_from_json(j.at("generation"), c.generation);
    if (j.contains("initial_state")) c.initial_state = j.at("initial_state").get<std::vector<double>>();
    if (j.contains("check_points")) c.check_points = j.at("check_points").get<std::size_t>();
    if (j.contains("check_pairs")) c.check_pairs = j.at("check_pairs").get<std::size_t>();
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed experiment config: ") + e.what());
  }
  return c;
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t trial) { return derive_stream(master, trial); }

MPCProblem cmd_generate(const GenerationSpec& spec, std::uint64_t seed, const fs::path& out, std::ostream& log) {
  const MPCProblem p = generate_problem(spec, seed);
  write_file_atomic(out, dump_json(to_json(p)));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(p.A, Eigen::EigenvaluesOnly), eq(p.Q, Eigen::EigenvaluesOnly),
      er(p.R, Eigen::EigenvaluesOnly);
  log << "wrote " << out.string() << " (seed " << seed << ")\n"
      << "  spectrum(A) = " << format_list(ea.eigenvalues()) << "\n"
      << "  spectrum(Q) = " << format_list(eq.eigenvalues()) << "\n"
      << "  spectrum(R) = " << format_list(er.eigenvalues()) << "\n"
      << "  noise entries:";
  for (const auto& [r, c] : p.noise.pattern) log << " (" << r << "," << c << ")";
  log << " uniform on [-" << format_double(p.noise.bound) << ", " << format_double(p.noise.bound) << "]\n";
  return p;
}

CheckResult check_problem(const MPCProblem& problem, std::uint64_t seed, std::size_t n_points, std::size_t n_pairs) {
  CheckResult r{check_linear_sufficient_condition(problem), {}};
  const DomainBox box{problem.z.array() - 1.0, problem.z.array() + 1.0};
  r.average_contraction =
      check_average_contraction(extreme_noise_closed_loop_ifs(problem), box, n_points, n_pairs, seed);
  return r;
}

Json to_json(const CheckResult& r) {
  return {{"reports", Json::array({to_json(r.linear), to_json(r.average_contraction)})}};
}

CheckResult check_result_from_json(const Json& j) {
  const auto& reports = j.at("reports");
  if (!reports.is_array() || reports.size() != 2) throw IoError("check report must hold two reports");
  return {report_from_json(reports[0]), report_from_json(reports[1])};
}

CheckResult cmd_check(const fs::path& problem_file, const fs::path& out, std::uint64_t seed, std::ostream& log) {
  const MPCProblem p = problem_from_json(read_json(problem_file));
  const CheckResult r = check_problem(p, seed);
  write_file_atomic(out, dump_json(to_json(r)));
  log << "linear sufficient condition: " << r.linear.verdict_label()
      << " (bound = " << format_double(r.linear.constants.at("bound")) << ")\n"
      << "average contraction:         " << r.average_contraction.verdict_label()
      << " (lambda_s = " << format_double(r.average_contraction.constants.at("lambda_s")) << ")\n";
  return r;
}

RunResult run_closed_loop(const MPCProblem& problem, const ExperimentConfig& config, std::uint64_t seed) {
  const ContinuousIFS ifs = smpc_closed_loop_ifs(problem, config.saa_samples);
  return analyse(simulate(ifs, initial_state_for(config, problem.state_dim()), config.n_iterations, seed), config);
}

void write_run_artifacts(const RunResult& run, const fs::path& dir) {
  write_file_atomic(dir / "trajectory.csv", trajectory_csv(run.trajectory));
  for (std::size_t i = 0; i < run.histogram.dimension(); ++i) {
    write_file_atomic(dir / ("histogram_x" + std::to_string(i) + ".csv"), histogram_csv(run.histogram, i));
  }
  write_file_atomic(dir / "windows.csv", windows_csv(run.diagnostic));
  write_file_atomic(dir / "diagnostic.json", dump_json(to_json(run.diagnostic)));
}

RunResult cmd_run(const fs::path& problem_file, const ExperimentConfig& config, std::uint64_t seed, const fs::path& out,
                  std::ostream& log) {
  validate(config);
  const MPCProblem p = problem_from_json(read_json(problem_file));
  RunResult run = run_closed_loop(p, config, seed);
  write_run_artifacts(run, out);
  log << "simulated " << config.n_iterations << " steps (J = " << config.saa_samples << "), stationarity "
      << to_string(run.diagnostic.verdict) << "; final-window TV:";
  for (double tv : run.diagnostic.final_tv()) log << " " << format_double(tv);
  log << "\n";
  return run;
}

bool ExperimentResult::all_ok() const {
  return std::all_of(trials.begin(), trials.end(), [](const TrialResult& t) { return t.ok; });
}

ExperimentResult cmd_reproduce_paper(const ExperimentConfig& config, std::ostream& log) {
  validate(config);
  const fs::path root = config.output_dir;
  fs::create_directories(root);
  write_file_atomic(root / "config.json", dump_json(to_json(config)));

  ExperimentResult result;
  result.trials.resize(config.n_trials);
  parallel_for(config.n_trials, config.workers, [&](std::size_t t) {
    TrialResult& tr = result.trials[t];
    tr.trial = t;
    char name[32];
    std::snprintf(name, sizeof name, "trial_%03zu", t);
    tr.directory = root / name;
    try {
      const std::uint64_t seed = trial_seed(config.seed, t);
      const MPCProblem p = generate_problem(config.generation, seed);
      write_file_atomic(tr.directory / "problem.json", dump_json(to_json(p)));
      tr.check = check_problem(p, seed, config.check_points, config.check_pairs);
      write_file_atomic(tr.directory / "check.json", dump_json(to_json(*tr.check)));
      const RunResult run = run_closed_loop(p, config, derive_stream(seed, kRunStream));
      write_run_artifacts(run, tr.directory);
      tr.diagnostic = run.diagnostic;
      tr.ok = true;
    } catch (const std::exception& e) {
      tr.ok = false;
      tr.error = e.what();
    }
  });

  const std::size_t d = config.generation.d;
  std::string summary = "trial,status,linear_verdict,linear_bound,contraction_verdict,lambda_s,stationarity";
  for (std::size_t i = 0; i < d; ++i) summary += ",final_tv_x" + std::to_string(i);
  summary += "\n";
  Json failures = Json::array();
  for (const auto& tr : result.trials) {
    summary += std::to_string(tr.trial) + "," + (tr.ok ? "ok" : "failed");
    if (tr.check) {
      summary += "," + tr.check->linear.verdict_label() + "," + format_double(tr.check->linear.constants.at("bound")) +
                 "," + tr.check->average_contraction.verdict_label() + "," +
                 format_double(tr.check->average_contraction.constants.at("lambda_s"));
    } else {
      summary += ",,,,";
    }
    if (tr.diagnostic) {
      summary += std::string(",") + to_string(tr.diagnostic->verdict);
      for (double tv : tr.diagnostic->final_tv()) summary += "," + format_double(tv);
    } else {
      summary += ",";
      for (std::size_t i = 0; i < d; ++i) summary += ",";
    }
    summary += "\n";
    if (!tr.ok) failures.push_back({{"trial", tr.trial}, {"error", tr.error}});

    log << "trial " << tr.trial << ": ";
    if (tr.ok) {
      log << "linear " << tr.check->linear.verdict_label() << ", contraction "
          << tr.check->average_contraction.verdict_label() << ", " << to_string(tr.diagnostic->verdict) << "\n";
    } else {
      log << "FAILED: " << tr.error << "\n";
    }
  }
  write_file_atomic(root / "summary.csv", summary);
  if (result.trials.front().ok) {
    write_file_atomic(root / "representative_windows.csv", read_file(result.trials.front().directory / "windows.csv"));
  }
  if (!failures.empty()) write_file_atomic(root / "failures.json", dump_json({{"failures", failures}}));
  return result;
}

std::vector<std::string> demo_names() { return {"bernoulli"}; }

DiscreteIFS ifs_from_json(const Json& j, StateVector* initial_state) {
  std::vector<Transformation> maps;
  std::optional<Eigen::Index> d;
  try {
    for (const auto& m : j.at("maps")) {
      const Eigen::MatrixXd a = matrix_from_json(m.at("matrix"));
      const Eigen::VectorXd b = vector_from_json(m.at("offset"));
      if (a.rows() != a.cols() || b.size() != a.rows()) throw InvalidArgumentError("affine map dimensions mismatch");
      if (d && *d != a.rows()) throw InvalidArgumentError("affine maps of different dimension");
      d = a.rows();
      maps.push_back([a, b](const StateVector& x) -> StateVector { return a * x + b; });
    }
    if (!d) throw InvalidArgumentError("IFS description has no maps");
    const Eigen::VectorXd p = vector_from_json(j.at("probabilities"));
    if (initial_state) {
      *initial_state = j.contains("initial_state") ? vector_from_json(j.at("initial_state")) : StateVector::Zero(*d);
      if (initial_state->size() != *d) throw InvalidArgumentError("initial state has the wrong dimension");
    }
    return DiscreteIFS::deterministic(std::move(maps), constant_probabilities(p));
  } catch (const Json::exception& e) {
    throw IoError(std::string("malformed IFS description: ") + e.what());
  }
}

DemoResult cmd_ifs_demo(const std::string& name_or_file, const ExperimentConfig& config, const fs::path& out,
                        std::ostream& log) {
  validate(config);
  std::optional<DiscreteIFS> ifs;
  StateVector x0;
  const bool bernoulli = name_or_file == "bernoulli";
  if (bernoulli) {
    ifs = bernoulli_ifs();
    x0 = scalar_state(0.0);
  } else if (fs::is_regular_file(name_or_file)) {
    ifs = ifs_from_json(read_json(name_or_file), &x0);
  } else {
    throw InvalidArgumentError("unknown demo '" + name_or_file + "'; available demos: " + join(demo_names(), ", ") +
                               " (or a path to an IFS description file)");
  }

  DemoResult demo;
  demo.run = analyse(simulate(*ifs, x0, config.n_iterations, config.seed), config);
  write_run_artifacts(demo.run, out);

  Json summary = {{"demo", name_or_file},
                  {"n_steps", config.n_iterations},
                  {"seed", config.seed},
                  {"stationarity", to_string(demo.run.diagnostic.verdict)}};
  if (bernoulli) {
    const auto& states = demo.run.trajectory.states;
    const std::size_t skip = std::min(kDemoBurnIn, states.size() - 1);
    const auto tail = std::span<const StateVector>(states).subspan(skip);
    demo.ks_to_invariant = ks_distance_to_cdf(marginal(tail, 0), [](double x) { return std::clamp(x, 0.0, 1.0); });
    summary["ks_to_uniform"] = *demo.ks_to_invariant;
    summary["burn_in"] = skip;
  }
  write_file_atomic(out / "demo.json", dump_json(summary));
  log << "demo " << name_or_file << ": " << config.n_iterations << " steps, stationarity "
      << to_string(demo.run.diagnostic.verdict);
  if (demo.ks_to_invariant) log << ", KS to U[0,1] = " << format_double(*demo.ks_to_invariant);
  log << "\n";
  return demo;
}

}  // namespace ergodic_smpc
