#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ergodic_smpc/conditions.hpp"
#include "ergodic_smpc/ergodics.hpp"
#include "ergodic_smpc/io.hpp"
#include "ergodic_smpc/smpc.hpp"

namespace ergodic_smpc {

/// Defaults reproduce the reference experiment: 20 trials of 10^4 SMPC
/// iterations with J = 100 SAA samples.
struct ExperimentConfig {
  std::size_t n_trials = 20;
  std::size_t n_iterations = 10000;
  std::size_t saa_samples = 100;
  std::size_t n_bins = 10;
  std::size_t n_windows = 4;
  double tolerance = 0.05;
  double burn_in_fraction = 0.1;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "smpc-experiment";
  std::size_t workers = 1;
  GenerationSpec generation;
  /// Initial state of every run; empty means the origin.
  std::vector<double> initial_state;
  // Sampled contraction check.
  std::size_t check_points = 200;
  std::size_t check_pairs = 200;

  /// 1 trial, 10^3 iterations, J = 20.
  static ExperimentConfig smoke();
};

void validate(const ExperimentConfig& config);

/// Every field except output_dir and workers, which do not affect results.
Json to_json(const ExperimentConfig& config);
/// Fields present in `j` override `base`.
ExperimentConfig config_from_json(const Json& j, ExperimentConfig base = {});

/// Seed of trial `trial` under a master seed.
std::uint64_t trial_seed(std::uint64_t master, std::size_t trial);

/// Generates a problem, writes it to `out` and prints its spectra and noise
/// pattern to `log`.
MPCProblem cmd_generate(const GenerationSpec& spec, std::uint64_t seed, const std::filesystem::path& out,
                        std::ostream& log);

struct CheckResult {
  ConditionReport linear;
  ConditionReport average_contraction;

  bool passed() const { return linear.passed() && average_contraction.passed(); }
};

/// Analytic linear sufficient condition plus the sampled average-contraction
/// check on the exact-control closed loop under corner noise.
CheckResult check_problem(const MPCProblem& problem, std::uint64_t seed, std::size_t n_points = 200,
                          std::size_t n_pairs = 200);
Json to_json(const CheckResult& result);
CheckResult check_result_from_json(const Json& j);

CheckResult cmd_check(const std::filesystem::path& problem_file, const std::filesystem::path& out,
                      std::uint64_t seed, std::ostream& log);

struct RunResult {
  Trajectory trajectory;
  EmpiricalMeasure histogram;
  DiagnosticReport diagnostic;
};

/// Simulates the SMPC closed loop and analyses the trajectory in memory.
RunResult run_closed_loop(const MPCProblem& problem, const ExperimentConfig& config, std::uint64_t seed);

/// Writes trajectory.csv, histogram_x<i>.csv, windows.csv and diagnostic.json
/// into `dir`.
void write_run_artifacts(const RunResult& run, const std::filesystem::path& dir);

RunResult cmd_run(const std::filesystem::path& problem_file, const ExperimentConfig& config, std::uint64_t seed,
                  const std::filesystem::path& out, std::ostream& log);

struct TrialResult {
  std::size_t trial = 0;
  bool ok = false;
  std::string error;
  std::filesystem::path directory;
  std::optional<CheckResult> check;
  std::optional<DiagnosticReport> diagnostic;
};

struct ExperimentResult {
  std::vector<TrialResult> trials;

  bool all_ok() const;
};

/// Runs config.n_trials independent generate -> check -> run pipelines in
/// parallel (config.workers) and writes per-trial directories, summary.csv,
/// representative_windows.csv (windowed bin proportions of trial 0, the representative run)
/// and, if any trial failed, failures.json.
ExperimentResult cmd_reproduce_paper(const ExperimentConfig& config, std::ostream& log);

/// Names accepted by cmd_ifs_demo besides a JSON file path.
std::vector<std::string> demo_names();

/// Loads an IFS description: affine maps {"matrix", "offset"} with constant
/// "probabilities" and an optional "initial_state".
DiscreteIFS ifs_from_json(const Json& j, StateVector* initial_state = nullptr);

struct DemoResult {
  RunResult run;
  /// KS distance of the post-burn-in states to the known invariant CDF,
  /// when one is known (bernoulli).
  std::optional<double> ks_to_invariant;
};

/// Simulates a named demo IFS (or a JSON description file) and writes the
/// same artefacts as cmd_run plus demo.json. Unknown names raise
/// InvalidArgumentError listing the available demos.
DemoResult cmd_ifs_demo(const std::string& name_or_file, const ExperimentConfig& config,
                        const std::filesystem::path& out, std::ostream& log);

}  // namespace ergodic_smpc
