#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ergodic_smpc/ifs.hpp"
#include "ergodic_smpc/random.hpp"
#include "ergodic_smpc/types.hpp"

namespace ergodic_smpc {

/// Independent entries of the additive dynamics perturbation Xi, each
/// uniform on [-bound, bound]. All other entries of Xi are zero.
struct NoiseSpec {
  std::vector<std::pair<std::size_t, std::size_t>> pattern;
  double bound = 0.0;

  std::size_t size() const noexcept { return pattern.size(); }
};

/// Linear-quadratic stochastic tracking problem with one-step horizon:
///   x+ = (A + Xi) x + B u,  cost E[(x+ - z)^T Q (x+ - z)] + u^T R u.
struct MPCProblem {
  Eigen::MatrixXd A;  // d x d
  Eigen::MatrixXd B;  // d x m
  Eigen::MatrixXd Q;  // d x d, symmetric PSD
  Eigen::MatrixXd R;  // m x m, symmetric PD
  Eigen::VectorXd z;  // d
  NoiseSpec noise;
  /// Standard deviation of optional additive Gaussian noise on the SAA
  /// solution (one draw per control component). Zero disables it.
  double solver_noise = 0.0;

  std::size_t state_dim() const { return static_cast<std::size_t>(A.rows()); }
  std::size_t control_dim() const { return static_cast<std::size_t>(B.cols()); }
};

/// Throws InvalidArgumentError unless dimensions agree, Q is symmetric PSD,
/// R is symmetric PD, noise positions are distinct and in range, bound >= 0.
void validate(const MPCProblem& problem);

MPCProblem scalar_problem(double a, double b, double q, double r, double z, double h);

struct GenerationSpec {
  std::size_t d = 4;
  std::size_t m = 4;
  std::vector<double> lambda_a{1.0 / 5, 1.0 / 8, 1.0 / 10, 1.0 / 12};
  std::vector<double> lambda_q{5, 6, 9, 15};
  std::vector<double> lambda_r{0.5, 2, 1, 1.5};
  NoiseSpec noise{{{0, 1}, {2, 2}}, 0.005};
  std::uint64_t seed = 0;
};

void validate(const GenerationSpec& spec);

/// Orthonormal d x d basis from Householder QR of a standard Gaussian matrix.
/// A rank-deficient draw is retried on the next substream.
Eigen::MatrixXd random_orthonormal(std::size_t d, const RandomSource& source);

/// A = V^T diag(lambda_a) V, Q and R likewise with independent bases;
/// B uniform on [0, 1]^{d x m}; z uniform on [0, 1]^d.
MPCProblem generate_problem(const GenerationSpec& spec, std::uint64_t seed);

/// One realisation of the noise entries, in pattern order.
Eigen::VectorXd draw_noise(const NoiseSpec& noise, RandomSource& rng);
/// Dense Xi for the given entries.
Eigen::MatrixXd noise_matrix(const MPCProblem& problem, std::span<const double> entries);
/// The 2^k corners of the noise box.
std::vector<Eigen::VectorXd> noise_extreme_points(const NoiseSpec& noise);

/// Solves (R + B^T Q B) X = rhs by Cholesky after a conditioning check
/// (SingularNormalMatrixError when the condition number exceeds 1e12).
Eigen::MatrixXd solve_normal_equations(const MPCProblem& problem, const Eigen::MatrixXd& rhs);

/// Minimiser of the expected one-step cost:
/// (R + B^T Q B) u = -B^T Q (A x - z).
ControlVector exact_control(const MPCProblem& problem, const StateVector& x);

/// Sample average approximation with J noise draws from rng, solved in
/// closed form with A replaced by A + mean(Xi_j).
ControlVector saa_control(const MPCProblem& problem, const StateVector& x, std::size_t J, RandomSource& rng);

/// SAA control for given noise draws (each a vector of pattern entries).
/// Solver noise is not applied here.
ControlVector saa_control_from_draws(const MPCProblem& problem, const StateVector& x,
                                     std::span<const Eigen::VectorXd> draws);

/// x+ = (A + Xi) x + B u with a fresh Xi.
StateVector plant_step(const MPCProblem& problem, const StateVector& x, const ControlVector& u, RandomSource& rng);
StateVector plant_step_with(const MPCProblem& problem, const StateVector& x, const ControlVector& u,
                            std::span<const double> noise_entries);

/// Closed-form E[(x+ - z)^T Q (x+ - z)] + u^T R u, using E[Xi] = 0 and the
/// uniform second moment bound^2 / 3 of each independent entry.
double expected_objective(const MPCProblem& problem, const StateVector& x, const ControlVector& u);

/// SMPC loop as a continuous IFS. The parameter t stacks J SAA draws,
/// optional solver noise, and one plant draw, in the order saa_control and
/// plant_step consume them, so stepping the adapter with a RandomSource is
/// identical to calling saa_control then plant_step with it.
ContinuousIFS smpc_closed_loop_ifs(const MPCProblem& problem, std::size_t J);

/// Exact-control closed loop as a discrete IFS over the corners of the noise
/// box, each with equal probability. Used for sampled contraction checks.
DiscreteIFS extreme_noise_closed_loop_ifs(const MPCProblem& problem);

/// Point of the unit simplex.
struct SimplexPoint {
  Eigen::VectorXd p;
};

/// Euclidean projection onto the unit simplex (sort and threshold).
SimplexPoint project_simplex(const Eigen::VectorXd& v);

/// Finite control set with alpha * ||p||^2 regularised mixed strategies.
struct DiscreteControlProblem {
  MPCProblem base;
  std::vector<ControlVector> controls;
  double alpha = 1.0;
  std::size_t J = 100;
};

void validate(const DiscreteControlProblem& dcp);

/// SAA expected cost of each control, sharing the same J noise draws.
Eigen::VectorXd saa_costs(const DiscreteControlProblem& dcp, const StateVector& x, RandomSource& rng);

/// argmin over the simplex of c.p + alpha ||p||^2, i.e. project(-c / (2 alpha)).
SimplexPoint mixed_strategy_from_costs(const Eigen::VectorXd& costs, double alpha);

SimplexPoint mixed_strategy(const DiscreteControlProblem& dcp, const StateVector& x, RandomSource& rng);

/// State-dependent IFS whose map i applies control i to the noisy plant and
/// whose probabilities are the mixed strategy computed with a fixed SAA
/// seed, making p(x) a deterministic function of x.
DiscreteIFS discrete_smpc_as_ifs(const DiscreteControlProblem& dcp, std::uint64_t saa_seed = 0);

/// Hook for convex objectives without a closed-form minimiser.
struct ConvexObjective {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  double lipschitz = 1.0;  // Lipschitz constant of the gradient; step is 1/L
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> project;  // identity if empty
};

struct ProjectedGradientOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 100000;
};

/// Projected gradient descent; stops when the step moves less than tolerance.
Eigen::VectorXd projected_gradient(const ConvexObjective& objective, Eigen::VectorXd start,
                                   const ProjectedGradientOptions& options = {});

}  // namespace ergodic_smpc
