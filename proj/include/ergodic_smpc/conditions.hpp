#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ergodic_smpc/ifs.hpp"
#include "ergodic_smpc/smpc.hpp"
#include "ergodic_smpc/types.hpp"

namespace ergodic_smpc {

/// Axis-aligned box used as the sampling domain for the checkers.
struct DomainBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static DomainBox cube(std::size_t d, double lo, double hi);

  std::size_t dimension() const { return static_cast<std::size_t>(lower.size()); }
  double diameter() const { return (upper - lower).norm(); }
  StateVector sample(RandomSource& rng) const;
};

/// Throws InvalidArgumentError unless lower <= upper, both finite, same size.
void validate(const DomainBox& box);

/// Sampled lower bound on the Lipschitz constant of a map over a box.
struct LipschitzEstimate {
  double value = 0.0;
  StateVector witness_x;
  StateVector witness_y;
  std::size_t witness_pair = 0;  // index of the pair (and of its noise stream)
  std::size_t n_pairs = 0;
  std::uint64_t seed = 0;
};

/// Sampled Lipschitz modulus theta of x -> p(x) in the l1 norm. A finite
/// theta is evidence for the linear Dini function omega(t) = theta * t.
struct DiniEstimate {
  double theta = 0.0;
  StateVector witness_x;
  StateVector witness_y;
  std::size_t n_pairs = 0;
  std::uint64_t seed = 0;
};

enum class Verdict { pass, fail, inconclusive };
/// Whether a verdict rests on sampled evidence or on an analytic bound.
enum class Evidence { sampled, certified };

struct ConditionReport {
  std::string condition;
  Verdict verdict = Verdict::inconclusive;
  Evidence evidence = Evidence::sampled;
  std::map<std::string, double> constants;
  std::map<std::string, std::vector<double>> witness;
  std::map<std::string, double> parameters;
  std::uint64_t seed = 0;

  bool passed() const { return verdict == Verdict::pass; }
  /// e.g. "pass(sampled)", "fail(certified)".
  std::string verdict_label() const;
};

const char* to_string(Verdict v);
const char* to_string(Evidence e);

/// ||F(x) - F(y)|| / ||x - y||.
double lipschitz_ratio(const Transformation& f, const StateVector& x, const StateVector& y);

/// Maximum ratio over n_pairs pairs: even pairs are uniform in the box, odd
/// pairs are local perturbations at scale 1e-4 * diam(box). Pair k draws from
/// RandomSource(seed, k), so the pairs for n are a prefix of those for n' > n.
LipschitzEstimate estimate_lipschitz(const Transformation& f, const DomainBox& box, std::size_t n_pairs,
                                     std::uint64_t seed);
/// As above for a noisy map; both points of a pair see the same noise draw.
LipschitzEstimate estimate_lipschitz(const RandomMap& f, const DomainBox& box, std::size_t n_pairs,
                                     std::uint64_t seed);

/// lambda_S = max over sampled x of sum_i p_i(x) L(S_i). Passes when
/// lambda_S < 1 - margin, fails when lambda_S >= 1 (a lower bound already
/// violates the strict inequality), otherwise inconclusive.
ConditionReport check_average_contraction(const DiscreteIFS& ifs, const DomainBox& box, std::size_t n_points,
                                          std::size_t n_pairs, std::uint64_t seed, double margin = 0.0);

/// p0 = min over sampled x and i of p_i(x). Passes when p0 > threshold,
/// fails when a sampled probability is zero, otherwise inconclusive.
ConditionReport check_min_probability(const DiscreteIFS& ifs, const DomainBox& box, std::size_t n_points,
                                      std::uint64_t seed, double threshold = 1e-6);

DiniEstimate estimate_probability_modulus(const DiscreteIFS& ifs, const DomainBox& box, std::size_t n_pairs,
                                          std::uint64_t seed);

/// Pieces of the analytic contraction bound for the linear closed loop.
struct LinearContractionBound {
  double dynamics_norm = 0.0;   // max over noise corners of ||A + Xi||
  double feedback_norm = 0.0;   // ||B (R + B^T Q B)^{-1} B^T Q A||
  Eigen::VectorXd worst_noise;  // corner attaining dynamics_norm
  double bound() const { return dynamics_norm + feedback_norm; }
};

LinearContractionBound linear_contraction_bound(const MPCProblem& problem);

/// Certified check of ||A + Xi|| + ||B K A|| < 1 over the whole noise box.
ConditionReport check_linear_sufficient_condition(const MPCProblem& problem);

struct StoppingTimeGrid {
  std::size_t x_points = 11;     // per box dimension
  std::size_t t_intervals = 1000;
};

/// Grid check of the stopping-time condition: for each grid x, tau(x) is the
/// first grid t with p(t, x) > 0; passes when p >= gamma > 0 on every grid t
/// in [tau(x), T] and max tau(x) < T - step.
ConditionReport check_stopping_time(const ExplicitDensity& density, const DomainBox& box,
                                    const StoppingTimeGrid& grid = {});
/// Rejects an IFS without an explicit density (InvalidDensityError).
ConditionReport check_stopping_time(const ContinuousIFS& ifs, const DomainBox& box,
                                    const StoppingTimeGrid& grid = {});

}  // namespace ergodic_smpc
