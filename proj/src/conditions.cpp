#include "ergodic_smpc/conditions.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "ergodic_smpc/error.hpp"
#include "ergodic_smpc/linalg.hpp"

namespace ergodic_smpc {
namespace {

constexpr double kPerturbationScale = 1e-4;
constexpr std::uint64_t kPointStream = 0xc0ffeeULL;
constexpr std::uint64_t kNoiseStream = 1;

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void require_finite(const Eigen::VectorXd& v, const StateVector& at, const char* what) {
  if (!v.allFinite()) {
    std::string point;
    for (Eigen::Index i = 0; i < at.size(); ++i) point += (i ? ", " : "") + std::to_string(at[i]);
    throw EvaluationError(std::string(what) + " is not finite at (" + point + ")");
  }
}

// Pair k for the Lipschitz/modulus estimators. Coincident points are redrawn.
std::pair<StateVector, StateVector> sample_pair(const DomainBox& box, std::size_t k, RandomSource& rng) {
  const double scale = kPerturbationScale * box.diameter();
  for (;;) {
    StateVector x = box.sample(rng);
    StateVector y;
    if (k % 2 == 0) {
      y = box.sample(rng);
    } else {
      Eigen::VectorXd dir(x.size());
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = box.upper[i] > box.lower[i] ? rng.normal() : 0.0;
      const double n = dir.norm();
      if (n == 0.0) continue;
      y = (x + scale / n * dir).cwiseMax(box.lower).cwiseMin(box.upper);
    }
    if ((x - y).norm() > 0.0) return {std::move(x), std::move(y)};
  }
}

void require_sampling(const DomainBox& box, std::size_t n) {
  validate(box);
  if (n < 1) throw InvalidArgumentError("need at least one sample");
  if (!(box.diameter() > 0.0)) throw InvalidArgumentError("box is degenerate in every coordinate");
}

}  // namespace

DomainBox DomainBox::cube(std::size_t d, double lo, double hi) {
  const auto n = static_cast<Eigen::Index>(d);
  return {Eigen::VectorXd::Constant(n, lo), Eigen::VectorXd::Constant(n, hi)};
}

StateVector DomainBox::sample(RandomSource& rng) const {
  StateVector x(lower.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.uniform(lower[i], upper[i]);
  return x;
}

void validate(const DomainBox& box) {
  if (box.lower.size() < 1 || box.lower.size() != box.upper.size()) throw InvalidArgumentError("box bounds mismatch");
  if (!box.lower.allFinite() || !box.upper.allFinite()) throw InvalidArgumentError("box bounds must be finite");
  if ((box.upper - box.lower).minCoeff() < 0.0) throw InvalidArgumentError("box lower bound exceeds upper bound");
}

std::string ConditionReport::verdict_label() const {
  return std::string(to_string(verdict)) + "(" + to_string(evidence) + ")";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "?";
}

const char* to_string(Evidence e) { return e == Evidence::sampled ? "sampled" : "certified"; }

double lipschitz_ratio(const Transformation& f, const StateVector& x, const StateVector& y) {
  return (f(x) - f(y)).norm() / (x - y).norm();
}

LipschitzEstimate estimate_lipschitz(const Transformation& f, const DomainBox& box, std::size_t n_pairs,
                                     std::uint64_t seed) {
  return estimate_lipschitz(lift(f), box, n_pairs, seed);
}

LipschitzEstimate estimate_lipschitz(const RandomMap& f, const DomainBox& box, std::size_t n_pairs,
                                     std::uint64_t seed) {
  require_sampling(box, n_pairs);
  LipschitzEstimate est;
  est.n_pairs = n_pairs;
  est.seed = seed;
  est.value = -1.0;
  for (std::size_t k = 0; k < n_pairs; ++k) {
    RandomSource rng(seed, k);
    auto [x, y] = sample_pair(box, k, rng);
    const RandomSource noise = rng.substream(kNoiseStream);
    RandomSource nx = noise, ny = noise;
    const StateVector fx = f(x, nx);
    const StateVector fy = f(y, ny);
    require_finite(fx, x, "map value");
    require_finite(fy, y, "map value");
    const double ratio = (fx - fy).norm() / (x - y).norm();
    if (ratio > est.value) {
      est.value = ratio;
      est.witness_x = std::move(x);
      est.witness_y = std::move(y);
      est.witness_pair = k;
    }
  }
  return est;
}

ConditionReport check_average_contraction(const DiscreteIFS& ifs, const DomainBox& box, std::size_t n_points,
                                          std::size_t n_pairs, std::uint64_t seed, double margin) {
  require_sampling(box, n_points);
  ConditionReport r;
  r.condition = "average_contraction";
  r.evidence = Evidence::sampled;
  r.seed = seed;
  r.parameters = {{"n_points", static_cast<double>(n_points)},
                  {"n_pairs", static_cast<double>(n_pairs)},
                  {"margin", margin}};

  std::vector<double> lips(ifs.size());
  for (std::size_t i = 0; i < ifs.size(); ++i) {
    const auto est = estimate_lipschitz(ifs.map(i), box, n_pairs, derive_stream(seed, i));
    lips[i] = est.value;
    const std::string key = "lipschitz_" + std::to_string(i);
    r.constants[key] = est.value;
    r.witness[key + "_x"] = to_vector(est.witness_x);
    r.witness[key + "_y"] = to_vector(est.witness_y);
  }

  RandomSource rng(seed, kPointStream);
  double worst = -1.0;
  StateVector worst_x;
  for (std::size_t j = 0; j < n_points; ++j) {
    const StateVector x = box.sample(rng);
    const Eigen::VectorXd p = ifs.probabilities(x);
    double lambda = 0.0;
    for (std::size_t i = 0; i < lips.size(); ++i) lambda += p[static_cast<Eigen::Index>(i)] * lips[i];
    if (lambda > worst) {
      worst = lambda;
      worst_x = x;
    }
  }
  r.constants["lambda_s"] = worst;
  r.witness["x"] = to_vector(worst_x);
  if (worst < 1.0 - margin) {
    r.verdict = Verdict::pass;
  } else if (worst >= 1.0) {
    r.verdict = Verdict::fail;
  } else {
    r.verdict = Verdict::inconclusive;
  }
  return r;
}

ConditionReport check_min_probability(const DiscreteIFS& ifs, const DomainBox& box, std::size_t n_points,
                                      std::uint64_t seed, double threshold) {
  validate(box);
  if (n_points < 1) throw InvalidArgumentError("need at least one sample point");
  ConditionReport r;
  r.condition = "min_probability";
  r.evidence = Evidence::sampled;
  r.seed = seed;
  r.parameters = {{"n_points", static_cast<double>(n_points)}, {"threshold", threshold}};

  RandomSource rng(seed, kPointStream);
  double p0 = std::numeric_limits<double>::infinity();
  StateVector worst_x;
  std::size_t worst_i = 0;
  for (std::size_t j = 0; j < n_points; ++j) {
    const StateVector x = box.sample(rng);
    const Eigen::VectorXd p = ifs.probabilities(x);
    Eigen::Index i = 0;
    const double m = p.minCoeff(&i);
    if (m < p0) {
      p0 = m;
      worst_x = x;
      worst_i = static_cast<std::size_t>(i);
    }
  }
  r.constants["p0"] = p0;
  r.constants["index"] = static_cast<double>(worst_i);
  r.witness["x"] = to_vector(worst_x);
  if (p0 > threshold) {
    r.verdict = Verdict::pass;
  } else if (p0 <= 0.0) {
    r.verdict = Verdict::fail;
  } else {
    r.verdict = Verdict::inconclusive;
  }
  return r;
}

DiniEstimate estimate_probability_modulus(const DiscreteIFS& ifs, const DomainBox& box, std::size_t n_pairs,
                                          std::uint64_t seed) {
  require_sampling(box, n_pairs);
  DiniEstimate est;
  est.n_pairs = n_pairs;
  est.seed = seed;
  est.theta = -1.0;
  for (std::size_t k = 0; k < n_pairs; ++k) {
    RandomSource rng(seed, k);
    auto [x, y] = sample_pair(box, k, rng);
    const double ratio = (ifs.probabilities(x) - ifs.probabilities(y)).lpNorm<1>() / (x - y).norm();
    if (ratio > est.theta) {
      est.theta = ratio;
      est.witness_x = std::move(x);
      est.witness_y = std::move(y);
    }
  }
  return est;
}

LinearContractionBound linear_contraction_bound(const MPCProblem& problem) {
  validate(problem);
  LinearContractionBound b;
  b.dynamics_norm = -1.0;
  for (const auto& e : noise_extreme_points(problem.noise)) {
    const double n = operator_norm(
        problem.A + noise_matrix(problem, std::span<const double>(e.data(), static_cast<std::size_t>(e.size()))));
    if (n > b.dynamics_norm) {
      b.dynamics_norm = n;
      b.worst_noise = e;
    }
  }
  const Eigen::MatrixXd gain = solve_normal_equations(problem, problem.B.transpose() * problem.Q * problem.A);
  b.feedback_norm = operator_norm(problem.B * gain);
  return b;
}

ConditionReport check_linear_sufficient_condition(const MPCProblem& problem) {
  const auto b = linear_contraction_bound(problem);
  ConditionReport r;
  r.condition = "linear_sufficient_condition";
  r.evidence = Evidence::certified;
  r.constants = {{"dynamics_norm", b.dynamics_norm}, {"feedback_norm", b.feedback_norm}, {"bound", b.bound()}};
  r.witness["worst_noise"] = to_vector(b.worst_noise);
  r.parameters = {{"noise_bound", problem.noise.bound}, {"noise_entries", static_cast<double>(problem.noise.size())}};
  r.verdict = b.bound() < 1.0 ? Verdict::pass : Verdict::fail;
  return r;
}

ConditionReport check_stopping_time(const ExplicitDensity& density, const DomainBox& box,
                                    const StoppingTimeGrid& grid) {
  validate(box);
  if (!density.p) throw InvalidDensityError("no density supplied");
  if (!(density.upper > 0.0)) throw InvalidArgumentError("parameter upper limit must be positive");
  if (grid.x_points < 1 || grid.t_intervals < 1) throw InvalidArgumentError("grid sizes must be positive");

  const double T = density.upper;
  const double dt = T / static_cast<double>(grid.t_intervals);
  const std::size_t d = box.dimension();

  ConditionReport r;
  r.condition = "stopping_time";
  r.evidence = Evidence::sampled;
  r.parameters = {{"T", T},
                  {"t_step", dt},
                  {"x_points", static_cast<double>(grid.x_points)},
                  {"t_intervals", static_cast<double>(grid.t_intervals)}};

  double gamma = std::numeric_limits<double>::infinity();
  double tau_max = -1.0;
  StateVector tau_witness, gamma_witness;
  double gamma_t = 0.0;
  bool no_support = false;

  std::vector<std::size_t> counter(d, 0);
  for (;;) {
    StateVector x(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double span = box.upper[ii] - box.lower[ii];
      x[ii] = grid.x_points == 1 || span == 0.0
                  ? box.lower[ii] + 0.5 * span
                  : box.lower[ii] + span * static_cast<double>(counter[i]) / static_cast<double>(grid.x_points - 1);
    }

    std::optional<double> tau;
    for (std::size_t k = 0; k <= grid.t_intervals; ++k) {
      const double t = k == grid.t_intervals ? T : dt * static_cast<double>(k);
      const double p = density.p(t, x);
      if (!std::isfinite(p)) throw EvaluationError("density is not finite at t = " + std::to_string(t));
      if (p < 0.0) throw InvalidDensityError("density is negative at t = " + std::to_string(t));
      if (!tau && p > 0.0) tau = t;
      if (tau && p < gamma) {
        gamma = p;
        gamma_witness = x;
        gamma_t = t;
      }
    }
    if (!tau) {
      no_support = true;
      tau_max = std::numeric_limits<double>::infinity();
      tau_witness = x;
    } else if (*tau > tau_max) {
      tau_max = *tau;
      tau_witness = x;
    }

    std::size_t i = 0;
    while (i < d && ++counter[i] >= grid.x_points) counter[i++] = 0;
    if (i == d || no_support) break;
  }

  r.constants["tau_max"] = tau_max;
  r.constants["gamma"] = no_support ? 0.0 : gamma;
  r.witness["tau_x"] = to_vector(tau_witness);
  if (!no_support) {
    r.witness["gamma_x"] = to_vector(gamma_witness);
    r.constants["gamma_t"] = gamma_t;
  }
  const bool ok = !no_support && gamma > 0.0 && tau_max < T - dt;
  r.verdict = ok ? Verdict::pass : Verdict::fail;
  return r;
}

ConditionReport check_stopping_time(const ContinuousIFS& ifs, const DomainBox& box, const StoppingTimeGrid& grid) {
  if (!ifs.density()) throw InvalidDensityError("stopping-time check needs an explicit density; the IFS has only a sampler");
  return check_stopping_time(*ifs.density(), box, grid);
}

}  // namespace ergodic_smpc
