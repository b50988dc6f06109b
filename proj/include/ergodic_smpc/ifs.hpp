#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ergodic_smpc/ergodics.hpp"
#include "ergodic_smpc/random.hpp"
#include "ergodic_smpc/types.hpp"

namespace ergodic_smpc {

/// Deterministic map x -> S(x).
using Transformation = std::function<StateVector(const StateVector&)>;
/// Map that may consume noise, x -> S(x, xi). For a fixed noise draw it is a
/// deterministic function of x; Lipschitz estimates rely on that.
using RandomMap = std::function<StateVector(const StateVector&, RandomSource&)>;
/// State-dependent selection probabilities x -> (p_1(x), ..., p_N(x)).
using ProbabilityMap = std::function<Eigen::VectorXd(const StateVector&)>;

RandomMap lift(Transformation f);
ProbabilityMap constant_probabilities(Eigen::VectorXd p);

/// Finite family of maps with state-dependent selection probabilities.
/// Immutable after construction and safe to share between threads as long as
/// the stored callables are.
class DiscreteIFS {
 public:
  DiscreteIFS(std::vector<RandomMap> maps, ProbabilityMap probs);

  static DiscreteIFS deterministic(std::vector<Transformation> maps, ProbabilityMap probs);

  std::size_t size() const noexcept { return maps_.size(); }
  const RandomMap& map(std::size_t i) const { return maps_.at(i); }

  /// Probability vector at x. Sums within 1e-9 of one are renormalised;
  /// anything else throws InvalidProbabilityError.
  Eigen::VectorXd probabilities(const StateVector& x) const;

 private:
  std::vector<RandomMap> maps_;
  ProbabilityMap probs_;
};

using ParametricMap = std::function<StateVector(const Parameter& t, const StateVector& x)>;
using ParameterSampler = std::function<Parameter(const StateVector& x, RandomSource&)>;
using ParameterDomain = std::function<bool(const Parameter& t)>;

/// Explicit density p(t, x) of a scalar parameter t in [0, upper].
struct ExplicitDensity {
  std::function<double(double t, const StateVector& x)> p;
  double upper = 1.0;
};

/// Continuously indexed IFS: t ~ p(., x), then x -> S(t, x).
class ContinuousIFS {
 public:
  ContinuousIFS(ParametricMap map, ParameterSampler sampler, ParameterDomain domain,
                std::optional<ExplicitDensity> density = std::nullopt);

  const ParametricMap& map() const noexcept { return map_; }
  const ParameterSampler& sampler() const noexcept { return sampler_; }
  bool in_domain(const Parameter& t) const { return domain_(t); }
  const std::optional<ExplicitDensity>& density() const noexcept { return density_; }

 private:
  ParametricMap map_;
  ParameterSampler sampler_;
  ParameterDomain domain_;
  std::optional<ExplicitDensity> density_;
};

/// Integral of p(., x) over [0, upper] by composite Simpson on `intervals`
/// (rounded up to even) subintervals.
double density_mass(const ExplicitDensity& density, const StateVector& x, std::size_t intervals = 2000);

struct StepOptions {
  /// Any state with Euclidean norm above this is treated as divergence.
  double divergence_bound = 1e12;
};

struct DiscreteStep {
  StateVector state;
  std::size_t index = 0;
};

struct ContinuousStep {
  StateVector state;
  Parameter parameter;
};

/// Smallest index i with u < cumsum(p)_i for u uniform on [0, 1).
std::size_t sample_categorical(const Eigen::VectorXd& p, RandomSource& rng);

DiscreteStep step_discrete(const DiscreteIFS& ifs, const StateVector& x, RandomSource& rng,
                           const StepOptions& options = {});
ContinuousStep step_continuous(const ContinuousIFS& ifs, const StateVector& x, RandomSource& rng,
                               const StepOptions& options = {});

/// Iterates the IFS from x0 with RandomSource(seed). Step errors propagate
/// annotated with the index of the step that failed (1-based state index).
Trajectory simulate(const DiscreteIFS& ifs, const StateVector& x0, std::size_t n_steps, std::uint64_t seed,
                    const StepOptions& options = {});
Trajectory simulate(const ContinuousIFS& ifs, const StateVector& x0, std::size_t n_steps, std::uint64_t seed,
                    const StepOptions& options = {});

struct EnsembleOptions {
  StepOptions step;
  std::size_t n_bins = 10;
  std::optional<std::vector<BinRange>> range;
  std::size_t workers = 1;
};

/// Particle approximation of P^n mu: particle i is advanced with
/// RandomSource(seed, i), so results do not depend on `workers`.
std::vector<StateVector> advance_ensemble(const DiscreteIFS& ifs, std::span<const StateVector> particles,
                                          std::size_t n_steps, std::uint64_t seed, const EnsembleOptions& options = {});
std::vector<StateVector> advance_ensemble(const ContinuousIFS& ifs, std::span<const StateVector> particles,
                                          std::size_t n_steps, std::uint64_t seed, const EnsembleOptions& options = {});

/// Histogram of the advanced particle cloud.
EmpiricalMeasure run_ensemble(const DiscreteIFS& ifs, std::span<const StateVector> particles, std::size_t n_steps,
                              std::uint64_t seed, const EnsembleOptions& options = {});
EmpiricalMeasure run_ensemble(const ContinuousIFS& ifs, std::span<const StateVector> particles, std::size_t n_steps,
                              std::uint64_t seed, const EnsembleOptions& options = {});

/// S1(x) = x/2, S2(x) = (x+1)/2 with equal probabilities; invariant measure U[0, 1].
DiscreteIFS bernoulli_ifs();

}  // namespace ergodic_smpc
