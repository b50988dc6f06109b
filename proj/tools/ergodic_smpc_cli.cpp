#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ergodic_smpc/error.hpp"
#include "ergodic_smpc/experiment.hpp"

namespace es = ergodic_smpc;

namespace {

constexpr int kUsageError = 2;
constexpr std::size_t kDemoIterations = 100000;

struct Flags {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials, iters, saa_samples, bins, windows, workers;
  std::optional<double> tolerance;
  std::optional<std::string> out, config;
  bool smoke = false;
};

void add_experiment_flags(CLI::App* app, Flags& f) {
  app->add_option("--trials", f.trials, "number of independent trials");
  app->add_option("--iters", f.iters, "closed-loop iterations per run");
  app->add_option("--saa-samples", f.saa_samples, "SAA samples J per control step");
  app->add_option("--bins", f.bins, "histogram bins per state");
  app->add_option("--windows", f.windows, "stationarity windows");
  app->add_option("--tolerance", f.tolerance, "TV tolerance of the stationarity verdict");
  app->add_option("--workers", f.workers, "concurrent trials");
  app->add_flag("--smoke", f.smoke, "small CI-sized defaults (1 trial, 1000 iterations, J = 20)");
  app->add_option("--config", f.config, "JSON experiment config; flags override its values");
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("ERGODIC_SMPC_SEED");
  if (!v || !*v) return std::nullopt;
  try {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument(v);
    return s;
  } catch (const std::exception&) {
    throw es::InvalidArgumentError(std::string("ERGODIC_SMPC_SEED is not an unsigned integer: ") + v);
  }
}

// Precedence: flag, config file, environment, 0.
es::ExperimentConfig resolve(const Flags& f, es::ExperimentConfig base) {
  if (f.smoke) base = es::ExperimentConfig::smoke();
  bool seed_from_file = false;
  if (f.config) {
    const es::Json j = es::read_json(*f.config);
    seed_from_file = j.contains("seed");
    base = es::config_from_json(j, base);
  }
  if (f.seed) {
    base.seed = *f.seed;
  } else if (!seed_from_file) {
    base.seed = env_seed().value_or(0);
  }
  if (f.trials) base.n_trials = *f.trials;
  if (f.iters) base.n_iterations = *f.iters;
  if (f.saa_samples) base.saa_samples = *f.saa_samples;
  if (f.bins) base.n_bins = *f.bins;
  if (f.windows) base.n_windows = *f.windows;
  if (f.tolerance) base.tolerance = *f.tolerance;
  if (f.workers) base.workers = *f.workers;
  if (f.out) base.output_dir = *f.out;
  es::validate(base);
  return base;
}

std::uint64_t resolve_seed(const Flags& f) { return f.seed ? *f.seed : env_seed().value_or(0); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic MPC as an iterated function system: ergodicity checks and experiments"};
  app.require_subcommand(1);

  Flags gen_f;
  std::optional<std::string> spec_file;
  auto* gen = app.add_subcommand("generate", "generate a random MPC problem");
  gen->add_option("--seed", gen_f.seed, "RNG seed");
  gen->add_option("--out", gen_f.out, "output problem file (default problem.json)");
  gen->add_option("--spec", spec_file, "JSON generation spec overriding the defaults");

  Flags check_f;
  std::string check_problem;
  auto* check = app.add_subcommand("check", "check the ergodicity conditions of a problem");
  check->add_option("problem", check_problem, "problem file")->required();
  check->add_option("--seed", check_f.seed, "RNG seed of the sampled check");
  check->add_option("--out", check_f.out, "output report (default check.json)");

  Flags run_f;
  std::string run_problem;
  auto* run = app.add_subcommand("run", "simulate the SMPC closed loop of a problem");
  run->add_option("problem", run_problem, "problem file")->required();
  run->add_option("--seed", run_f.seed, "RNG seed");
  run->add_option("--out", run_f.out, "output directory (default run)");
  add_experiment_flags(run, run_f);

  Flags rep_f;
  auto* rep = app.add_subcommand("reproduce-paper", "run the full multi-trial experiment");
  rep->add_option("--seed", rep_f.seed, "master seed");
  rep->add_option("--out", rep_f.out, "output directory (default smpc-experiment)");
  add_experiment_flags(rep, rep_f);

  Flags demo_f;
  std::string demo_name;
  auto* demo = app.add_subcommand("ifs-demo", "simulate a demo IFS (bernoulli) or an IFS description file");
  demo->add_option("name", demo_name, "demo name or JSON file")->required();
  demo->add_option("--seed", demo_f.seed, "RNG seed");
  demo->add_option("--out", demo_f.out, "output directory (default demo)");
  add_experiment_flags(demo, demo_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*gen) {
      es::GenerationSpec spec;
      if (spec_file) spec = es::generation_spec_from_json(es::read_json(*spec_file), spec);
      es::validate(spec);
      es::cmd_generate(spec, resolve_seed(gen_f), gen_f.out.value_or("problem.json"), std::cout);
    } else if (*check) {
      const auto r = es::cmd_check(check_problem, check_f.out.value_or("check.json"), resolve_seed(check_f), std::cout);
      return r.passed() ? 0 : 1;
    } else if (*run) {
      const auto config = resolve(run_f, {});
      es::cmd_run(run_problem, config, config.seed, run_f.out.value_or("run"), std::cout);
    } else if (*rep) {
      const auto config = resolve(rep_f, {});
      const auto result = es::cmd_reproduce_paper(config, std::cout);
      if (!result.all_ok()) {
        std::cerr << "some trials failed; see " << (config.output_dir / "failures.json").string() << "\n";
        return 1;
      }
    } else if (*demo) {
      es::ExperimentConfig base;
      base.n_iterations = kDemoIterations;
      const auto config = resolve(demo_f, base);
      es::cmd_ifs_demo(demo_name, config, demo_f.out.value_or("demo"), std::cout);
    }
  } catch (const es::InvalidArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
