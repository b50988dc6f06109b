#include "ergodic_smpc/ifs.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "ergodic_smpc/error.hpp"
#include "ergodic_smpc/parallel.hpp"

namespace ergodic_smpc {
namespace {

constexpr double kRenormalizeTolerance = 1e-9;
constexpr double kNegativeSlack = 1e-12;

void guard_state(const StateVector& s, const StepOptions& options) {
  if (!s.allFinite()) throw NumericalBlowupError("map produced a non-finite state");
  if (s.norm() > options.divergence_bound) {
    throw NumericalBlowupError("state norm exceeded the divergence bound " + std::to_string(options.divergence_bound));
  }
}

template <typename Ifs, typename Step>
Trajectory simulate_with(const Ifs& ifs, const StateVector& x0, std::size_t n_steps, std::uint64_t seed,
                         const StepOptions& options, Step step) {
  if (!x0.allFinite()) throw InvalidArgumentError("initial state is not finite");
  Trajectory traj;
  traj.seed = seed;
  traj.states.reserve(n_steps + 1);
  traj.selections.reserve(n_steps);
  traj.states.push_back(x0);
  RandomSource rng(seed);
  for (std::size_t k = 1; k <= n_steps; ++k) {
    try {
      auto [state, selection] = step(ifs, traj.states.back(), rng, options);
      traj.states.push_back(std::move(state));
      traj.selections.emplace_back(std::move(selection));
    } catch (Error& e) {
      e.set_step(k);
      throw;
    }
  }
  return traj;
}

template <typename Ifs, typename Step>
std::vector<StateVector> advance_with(const Ifs& ifs, std::span<const StateVector> particles, std::size_t n_steps,
                                      std::uint64_t seed, const EnsembleOptions& options, Step step) {
  if (particles.empty()) throw InvalidArgumentError("ensemble needs at least one particle");
  std::vector<StateVector> out(particles.size());
  parallel_for(particles.size(), options.workers, [&](std::size_t i) {
    RandomSource rng(seed, i);
    StateVector x = particles[i];
    try {
      for (std::size_t k = 1; k <= n_steps; ++k) {
        try {
          x = step(ifs, x, rng, options.step).state;
        } catch (Error& e) {
          e.set_step(k);
          throw;
        }
      }
    } catch (Error& e) {
      e.set_particle(i);
      throw;
    }
    out[i] = std::move(x);
  });
  return out;
}

}  // namespace

RandomMap lift(Transformation f) {
  return [f = std::move(f)](const StateVector& x, RandomSource&) { return f(x); };
}

ProbabilityMap constant_probabilities(Eigen::VectorXd p) {
  return [p = std::move(p)](const StateVector&) { return p; };
}

DiscreteIFS::DiscreteIFS(std::vector<RandomMap> maps, ProbabilityMap probs)
    : maps_(std::move(maps)), probs_(std::move(probs)) {
  if (maps_.empty()) throw InvalidArgumentError("an IFS needs at least one map");
  if (!probs_) throw InvalidArgumentError("an IFS needs a probability map");
}

DiscreteIFS DiscreteIFS::deterministic(std::vector<Transformation> maps, ProbabilityMap probs) {
  std::vector<RandomMap> lifted;
  lifted.reserve(maps.size());
  for (auto& f : maps) lifted.push_back(lift(std::move(f)));
  return DiscreteIFS(std::move(lifted), std::move(probs));
}

Eigen::VectorXd DiscreteIFS::probabilities(const StateVector& x) const {
  Eigen::VectorXd p = probs_(x);
  if (static_cast<std::size_t>(p.size()) != maps_.size()) {
    throw InvalidProbabilityError("probability vector has " + std::to_string(p.size()) + " entries for " +
                                  std::to_string(maps_.size()) + " maps");
  }
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < -kNegativeSlack) {
      throw InvalidProbabilityError("probability p_" + std::to_string(i) + " = " + std::to_string(p[i]) +
                                    " is not a valid probability");
    }
    if (p[i] < 0.0) p[i] = 0.0;
  }
  const double sum = p.sum();
  if (std::abs(sum - 1.0) > kRenormalizeTolerance) {
    throw InvalidProbabilityError("probabilities sum to " + std::to_string(sum));
  }
  if (sum != 1.0) p /= sum;
  return p;
}

ContinuousIFS::ContinuousIFS(ParametricMap map, ParameterSampler sampler, ParameterDomain domain,
                             std::optional<ExplicitDensity> density)
    : map_(std::move(map)), sampler_(std::move(sampler)), domain_(std::move(domain)), density_(std::move(density)) {
  if (!map_ || !sampler_) throw InvalidArgumentError("a continuous IFS needs a map and a sampler");
  if (!domain_) domain_ = [](const Parameter&) { return true; };
}

double density_mass(const ExplicitDensity& density, const StateVector& x, std::size_t intervals) {
  if (intervals < 2) intervals = 2;
  if (intervals % 2 != 0) ++intervals;
  const double h = density.upper / static_cast<double>(intervals);
  double s = density.p(0.0, x) + density.p(density.upper, x);
  for (std::size_t k = 1; k < intervals; ++k) {
    s += (k % 2 == 1 ? 4.0 : 2.0) * density.p(h * static_cast<double>(k), x);
  }
  return s * h / 3.0;
}

std::size_t sample_categorical(const Eigen::VectorXd& p, RandomSource& rng) {
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    cum += p[i];
    last_positive = static_cast<std::size_t>(i);
    if (u < cum) return static_cast<std::size_t>(i);
  }
  // Rounding left the cumulative sum a hair below u.
  return last_positive;
}

DiscreteStep step_discrete(const DiscreteIFS& ifs, const StateVector& x, RandomSource& rng,
                           const StepOptions& options) {
  const Eigen::VectorXd p = ifs.probabilities(x);
  const std::size_t i = sample_categorical(p, rng);
  StateVector next = ifs.map(i)(x, rng);
  guard_state(next, options);
  return {std::move(next), i};
}

ContinuousStep step_continuous(const ContinuousIFS& ifs, const StateVector& x, RandomSource& rng,
                               const StepOptions& options) {
  Parameter t = ifs.sampler()(x, rng);
  if (!ifs.in_domain(t)) throw ParameterDomainError("sampled parameter lies outside the parameter space");
  StateVector next = ifs.map()(t, x);
  guard_state(next, options);
  return {std::move(next), std::move(t)};
}

Trajectory simulate(const DiscreteIFS& ifs, const StateVector& x0, std::size_t n_steps, std::uint64_t seed,
                    const StepOptions& options) {
  return simulate_with(ifs, x0, n_steps, seed, options, [](const auto& f, const auto& x, auto& rng, const auto& o) {
    auto s = step_discrete(f, x, rng, o);
    return std::pair<StateVector, Selection>(std::move(s.state), s.index);
  });
}

Trajectory simulate(const ContinuousIFS& ifs, const StateVector& x0, std::size_t n_steps, std::uint64_t seed,
                    const StepOptions& options) {
  return simulate_with(ifs, x0, n_steps, seed, options, [](const auto& f, const auto& x, auto& rng, const auto& o) {
    auto s = step_continuous(f, x, rng, o);
    return std::pair<StateVector, Selection>(std::move(s.state), std::move(s.parameter));
  });
}

std::vector<StateVector> advance_ensemble(const DiscreteIFS& ifs, std::span<const StateVector> particles,
                                          std::size_t n_steps, std::uint64_t seed, const EnsembleOptions& options) {
  return advance_with(ifs, particles, n_steps, seed, options,
                      [](const auto& f, const auto& x, auto& rng, const auto& o) { return step_discrete(f, x, rng, o); });
}

std::vector<StateVector> advance_ensemble(const ContinuousIFS& ifs, std::span<const StateVector> particles,
                                          std::size_t n_steps, std::uint64_t seed, const EnsembleOptions& options) {
  return advance_with(ifs, particles, n_steps, seed, options, [](const auto& f, const auto& x, auto& rng,
                                                                 const auto& o) { return step_continuous(f, x, rng, o); });
}

EmpiricalMeasure run_ensemble(const DiscreteIFS& ifs, std::span<const StateVector> particles, std::size_t n_steps,
                              std::uint64_t seed, const EnsembleOptions& options) {
  const auto out = advance_ensemble(ifs, particles, n_steps, seed, options);
  return build_histogram(std::span<const StateVector>(out), options.n_bins, options.range);
}

EmpiricalMeasure run_ensemble(const ContinuousIFS& ifs, std::span<const StateVector> particles, std::size_t n_steps,
                              std::uint64_t seed, const EnsembleOptions& options) {
  const auto out = advance_ensemble(ifs, particles, n_steps, seed, options);
  return build_histogram(std::span<const StateVector>(out), options.n_bins, options.range);
}

DiscreteIFS bernoulli_ifs() {
  return DiscreteIFS::deterministic({[](const StateVector& x) -> StateVector { return x / 2.0; },
                                     [](const StateVector& x) -> StateVector { return (x.array() + 1.0).matrix() / 2.0; }},
                                    constant_probabilities(Eigen::Vector2d(0.5, 0.5)));
}

}  // namespace ergodic_smpc
