#include "ergodic_smpc/smpc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "ergodic_smpc/error.hpp"
#include "ergodic_smpc/linalg.hpp"

namespace ergodic_smpc {
namespace {

constexpr double kMaxConditionNumber = 1e12;
constexpr double kSymmetryTolerance = 1e-10;

enum GenerationStream : std::uint64_t { kStreamA = 1, kStreamQ, kStreamR, kStreamB, kStreamZ };

bool symmetric(const Eigen::MatrixXd& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTolerance * scale;
}

Eigen::MatrixXd spectral_matrix(const std::vector<double>& lambda, const RandomSource& source) {
  const Eigen::MatrixXd v = random_orthonormal(lambda.size(), source);
  const Eigen::VectorXd l = Eigen::Map<const Eigen::VectorXd>(lambda.data(), static_cast<Eigen::Index>(lambda.size()));
  Eigen::MatrixXd m = v.transpose() * l.asDiagonal() * v;
  return 0.5 * (m + m.transpose());
}

void check_state(const MPCProblem& problem, const StateVector& x) {
  if (static_cast<std::size_t>(x.size()) != problem.state_dim()) {
    throw InvalidArgumentError("state has dimension " + std::to_string(x.size()) + ", problem expects " +
                               std::to_string(problem.state_dim()));
  }
}

// Shared by saa_control and the closed-loop adapter so both produce the same
// bits: `flat` holds J consecutive draws of noise.size() entries each.
ControlVector saa_from_flat(const MPCProblem& problem, const StateVector& x, std::span<const double> flat,
                            std::size_t J) {
  const std::size_t k = problem.noise.size();
  std::vector<double> mean(k, 0.0);
  for (std::size_t j = 0; j < J; ++j) {
    for (std::size_t e = 0; e < k; ++e) mean[e] += flat[j * k + e];
  }
  for (auto& v : mean) v /= static_cast<double>(J);
  const Eigen::MatrixXd a_bar = problem.A + noise_matrix(problem, mean);
  return solve_normal_equations(problem, -problem.B.transpose() * problem.Q * (a_bar * x - problem.z)).col(0);
}

double quadratic_cost(const MPCProblem& problem, const Eigen::VectorXd& next, const ControlVector& u) {
  const Eigen::VectorXd r = next - problem.z;
  return r.dot(problem.Q * r) + u.dot(problem.R * u);
}

}  // namespace

void validate(const MPCProblem& p) {
  const auto d = p.A.rows();
  if (d < 1 || p.A.cols() != d) throw InvalidArgumentError("A must be square and non-empty");
  if (p.B.rows() != d || p.B.cols() < 1) throw InvalidArgumentError("B must have d rows and at least one column");
  if (p.Q.rows() != d || p.Q.cols() != d) throw InvalidArgumentError("Q must be d x d");
  if (p.R.rows() != p.B.cols() || p.R.cols() != p.B.cols()) throw InvalidArgumentError("R must be m x m");
  if (p.z.size() != d) throw InvalidArgumentError("z must have d entries");
  if (!p.A.allFinite() || !p.B.allFinite() || !p.Q.allFinite() || !p.R.allFinite() || !p.z.allFinite()) {
    throw InvalidArgumentError("problem matrices must be finite");
  }
  if (!symmetric(p.Q) || !symmetric(p.R)) throw InvalidArgumentError("Q and R must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eq(p.Q, Eigen::EigenvaluesOnly);
  if (eq.eigenvalues().minCoeff() < -kSymmetryTolerance * std::max(1.0, eq.eigenvalues().cwiseAbs().maxCoeff())) {
    throw InvalidArgumentError("Q must be positive semidefinite");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(p.R, Eigen::EigenvaluesOnly);
  if (!(er.eigenvalues().minCoeff() > 0.0)) throw InvalidArgumentError("R must be positive definite");
  if (!(p.noise.bound >= 0.0) || !std::isfinite(p.noise.bound)) {
    throw InvalidArgumentError("noise bound must be finite and non-negative");
  }
  if (!(p.solver_noise >= 0.0) || !std::isfinite(p.solver_noise)) {
    throw InvalidArgumentError("solver noise must be finite and non-negative");
  }
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [r, c] : p.noise.pattern) {
    if (r >= static_cast<std::size_t>(d) || c >= static_cast<std::size_t>(d)) {
      throw InvalidArgumentError("noise position (" + std::to_string(r) + ", " + std::to_string(c) + ") out of range");
    }
    if (!seen.insert({r, c}).second) throw InvalidArgumentError("duplicate noise position");
  }
}

MPCProblem scalar_problem(double a, double b, double q, double r, double z, double h) {
  MPCProblem p;
  p.A = Eigen::MatrixXd::Constant(1, 1, a);
  p.B = Eigen::MatrixXd::Constant(1, 1, b);
  p.Q = Eigen::MatrixXd::Constant(1, 1, q);
  p.R = Eigen::MatrixXd::Constant(1, 1, r);
  p.z = Eigen::VectorXd::Constant(1, z);
  p.noise = NoiseSpec{{{0, 0}}, h};
  validate(p);
  return p;
}

void validate(const GenerationSpec& spec) {
  if (spec.d < 1 || spec.m < 1) throw InvalidArgumentError("dimensions must be positive");
  if (spec.lambda_a.size() != spec.d || spec.lambda_q.size() != spec.d || spec.lambda_r.size() != spec.m) {
    throw InvalidArgumentError("eigenvalue lists must match the dimensions");
  }
  for (double v : spec.lambda_q) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgumentError("Q eigenvalues must be non-negative");
  }
  for (double v : spec.lambda_r) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgumentError("R eigenvalues must be positive");
  }
  for (double v : spec.lambda_a) {
    if (!std::isfinite(v)) throw InvalidArgumentError("A eigenvalues must be finite");
  }
}

Eigen::MatrixXd random_orthonormal(std::size_t d, const RandomSource& source) {
  const auto n = static_cast<Eigen::Index>(d);
  for (std::uint64_t attempt = 0;; ++attempt) {
    RandomSource rng = source.substream(attempt);
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    if (r.diagonal().cwiseAbs().minCoeff() < 1e-12) continue;
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  }
}

MPCProblem generate_problem(const GenerationSpec& spec, std::uint64_t seed) {
  validate(spec);
  const RandomSource root(seed);
  MPCProblem p;
  p.A = spectral_matrix(spec.lambda_a, root.substream(kStreamA));
  p.Q = spectral_matrix(spec.lambda_q, root.substream(kStreamQ));
  p.R = spectral_matrix(spec.lambda_r, root.substream(kStreamR));

  RandomSource rb = root.substream(kStreamB);
  p.B.resize(static_cast<Eigen::Index>(spec.d), static_cast<Eigen::Index>(spec.m));
  for (Eigen::Index i = 0; i < p.B.rows(); ++i) {
    for (Eigen::Index j = 0; j < p.B.cols(); ++j) p.B(i, j) = rb.uniform();
  }
  RandomSource rz = root.substream(kStreamZ);
  p.z.resize(static_cast<Eigen::Index>(spec.d));
  for (Eigen::Index i = 0; i < p.z.size(); ++i) p.z[i] = rz.uniform();
  p.noise = spec.noise;
  validate(p);
  return p;
}

Eigen::VectorXd draw_noise(const NoiseSpec& noise, RandomSource& rng) {
  Eigen::VectorXd e(static_cast<Eigen::Index>(noise.size()));
  for (Eigen::Index i = 0; i < e.size(); ++i) e[i] = rng.uniform(-noise.bound, noise.bound);
  return e;
}

Eigen::MatrixXd noise_matrix(const MPCProblem& problem, std::span<const double> entries) {
  if (entries.size() != problem.noise.size()) throw InvalidArgumentError("wrong number of noise entries");
  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(problem.A.rows(), problem.A.cols());
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const auto [r, c] = problem.noise.pattern[e];
    xi(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = entries[e];
  }
  return xi;
}

std::vector<Eigen::VectorXd> noise_extreme_points(const NoiseSpec& noise) {
  const std::size_t k = noise.size();
  std::vector<Eigen::VectorXd> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    Eigen::VectorXd e(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) e[static_cast<Eigen::Index>(i)] = (mask >> i) & 1 ? noise.bound : -noise.bound;
    out.push_back(std::move(e));
  }
  return out;
}

Eigen::MatrixXd solve_normal_equations(const MPCProblem& problem, const Eigen::MatrixXd& rhs) {
  const Eigen::MatrixXd m = problem.R + problem.B.transpose() * problem.Q * problem.B;
  const double cond = symmetric_condition_number(m);
  if (!(cond <= kMaxConditionNumber)) {
    throw SingularNormalMatrixError("R + B^T Q B is singular or ill-conditioned (condition number " +
                                    std::to_string(cond) + ")");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw SingularNormalMatrixError("Cholesky factorisation of R + B^T Q B failed");
  return llt.solve(rhs);
}

ControlVector exact_control(const MPCProblem& problem, const StateVector& x) {
  check_state(problem, x);
  return solve_normal_equations(problem, -problem.B.transpose() * problem.Q * (problem.A * x - problem.z)).col(0);
}

ControlVector saa_control(const MPCProblem& problem, const StateVector& x, std::size_t J, RandomSource& rng) {
  if (J < 1) throw InvalidArgumentError("SAA needs at least one sample");
  check_state(problem, x);
  const std::size_t k = problem.noise.size();
  std::vector<double> flat(J * k);
  for (auto& v : flat) v = rng.uniform(-problem.noise.bound, problem.noise.bound);
  ControlVector u = saa_from_flat(problem, x, flat, J);
  if (problem.solver_noise > 0.0) {
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] += problem.solver_noise * rng.normal();
  }
  return u;
}

ControlVector saa_control_from_draws(const MPCProblem& problem, const StateVector& x,
                                     std::span<const Eigen::VectorXd> draws) {
  if (draws.empty()) throw InvalidArgumentError("SAA needs at least one sample");
  check_state(problem, x);
  const std::size_t k = problem.noise.size();
  std::vector<double> flat;
  flat.reserve(draws.size() * k);
  for (const auto& d : draws) {
    if (static_cast<std::size_t>(d.size()) != k) throw InvalidArgumentError("wrong number of noise entries");
    flat.insert(flat.end(), d.data(), d.data() + d.size());
  }
  return saa_from_flat(problem, x, flat, draws.size());
}

StateVector plant_step_with(const MPCProblem& problem, const StateVector& x, const ControlVector& u,
                            std::span<const double> noise_entries) {
  check_state(problem, x);
  if (static_cast<std::size_t>(u.size()) != problem.control_dim()) throw InvalidArgumentError("control dimension mismatch");
  StateVector next = (problem.A + noise_matrix(problem, noise_entries)) * x + problem.B * u;
  if (!next.allFinite()) throw NumericalBlowupError("plant step produced a non-finite state");
  return next;
}

StateVector plant_step(const MPCProblem& problem, const StateVector& x, const ControlVector& u, RandomSource& rng) {
  const Eigen::VectorXd e = draw_noise(problem.noise, rng);
  return plant_step_with(problem, x, u, std::span<const double>(e.data(), static_cast<std::size_t>(e.size())));
}

double expected_objective(const MPCProblem& problem, const StateVector& x, const ControlVector& u) {
  check_state(problem, x);
  const Eigen::VectorXd mean_next = problem.A * x + problem.B * u;
  double noise_term = 0.0;
  const double second_moment = problem.noise.bound * problem.noise.bound / 3.0;
  for (const auto& [r, c] : problem.noise.pattern) {
    const auto ri = static_cast<Eigen::Index>(r);
    const double xc = x[static_cast<Eigen::Index>(c)];
    noise_term += problem.Q(ri, ri) * xc * xc * second_moment;
  }
  return quadratic_cost(problem, mean_next, u) + noise_term;
}

ContinuousIFS smpc_closed_loop_ifs(const MPCProblem& problem, std::size_t J) {
  validate(problem);
  if (J < 1) throw InvalidArgumentError("SAA needs at least one sample");
  const std::size_t k = problem.noise.size();
  const std::size_t m = problem.solver_noise > 0.0 ? problem.control_dim() : 0;
  const std::size_t saa_len = J * k;

  auto sampler = [problem, J, k, m, saa_len](const StateVector&, RandomSource& rng) {
    Parameter t(static_cast<Eigen::Index>(saa_len + m + k));
    for (std::size_t i = 0; i < saa_len; ++i) t[static_cast<Eigen::Index>(i)] = rng.uniform(-problem.noise.bound, problem.noise.bound);
    for (std::size_t i = 0; i < m; ++i) t[static_cast<Eigen::Index>(saa_len + i)] = rng.normal();
    for (std::size_t i = 0; i < k; ++i) {
      t[static_cast<Eigen::Index>(saa_len + m + i)] = rng.uniform(-problem.noise.bound, problem.noise.bound);
    }
    return t;
  };
  auto map = [problem, J, k, m, saa_len](const Parameter& t, const StateVector& x) {
    const std::span<const double> all(t.data(), static_cast<std::size_t>(t.size()));
    ControlVector u = saa_from_flat(problem, x, all.subspan(0, saa_len), J);
    for (std::size_t i = 0; i < m; ++i) u[static_cast<Eigen::Index>(i)] += problem.solver_noise * all[saa_len + i];
    return plant_step_with(problem, x, u, all.subspan(saa_len + m, k));
  };
  auto domain = [bound = problem.noise.bound, k, m, saa_len](const Parameter& t) {
    if (static_cast<std::size_t>(t.size()) != saa_len + m + k || !t.allFinite()) return false;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const auto idx = static_cast<std::size_t>(i);
      if (idx >= saa_len && idx < saa_len + m) continue;
      if (std::abs(t[i]) > bound) return false;
    }
    return true;
  };
  return ContinuousIFS(std::move(map), std::move(sampler), std::move(domain));
}

DiscreteIFS extreme_noise_closed_loop_ifs(const MPCProblem& problem) {
  validate(problem);
  std::vector<Transformation> maps;
  for (const auto& e : noise_extreme_points(problem.noise)) {
    maps.push_back([problem, e](const StateVector& x) -> StateVector {
      return plant_step_with(problem, x, exact_control(problem, x),
                             std::span<const double>(e.data(), static_cast<std::size_t>(e.size())));
    });
  }
  const auto n = static_cast<Eigen::Index>(maps.size());
  return DiscreteIFS::deterministic(std::move(maps), constant_probabilities(Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n))));
}

SimplexPoint project_simplex(const Eigen::VectorXd& v) {
  const auto n = static_cast<std::size_t>(v.size());
  if (n == 0) throw InvalidArgumentError("cannot project an empty vector");
  if (!v.allFinite()) throw InvalidArgumentError("cannot project a non-finite vector");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return v[static_cast<Eigen::Index>(a)] > v[static_cast<Eigen::Index>(b)];
  });
  double cumulative = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double vj = v[static_cast<Eigen::Index>(order[j])];
    cumulative += vj;
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (vj - candidate > 0.0) tau = candidate;
  }
  SimplexPoint out{(v.array() - tau).cwiseMax(0.0).matrix()};
  return out;
}

void validate(const DiscreteControlProblem& dcp) {
  validate(dcp.base);
  if (dcp.controls.empty()) throw InvalidArgumentError("control set must be non-empty");
  if (!(dcp.alpha > 0.0)) throw InvalidArgumentError("alpha must be positive");
  if (dcp.J < 1) throw InvalidArgumentError("SAA needs at least one sample");
  for (const auto& u : dcp.controls) {
    if (static_cast<std::size_t>(u.size()) != dcp.base.control_dim()) throw InvalidArgumentError("control dimension mismatch");
  }
}

Eigen::VectorXd saa_costs(const DiscreteControlProblem& dcp, const StateVector& x, RandomSource& rng) {
  check_state(dcp.base, x);
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(dcp.J);
  for (std::size_t j = 0; j < dcp.J; ++j) draws.push_back(draw_noise(dcp.base.noise, rng));
  Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dcp.controls.size()));
  for (const auto& d : draws) {
    const Eigen::VectorXd ax = (dcp.base.A + noise_matrix(dcp.base, std::span<const double>(d.data(), static_cast<std::size_t>(d.size())))) * x;
    for (std::size_t i = 0; i < dcp.controls.size(); ++i) {
      const auto& u = dcp.controls[i];
      c[static_cast<Eigen::Index>(i)] += quadratic_cost(dcp.base, ax + dcp.base.B * u, u);
    }
  }
  return c / static_cast<double>(dcp.J);
}

SimplexPoint mixed_strategy_from_costs(const Eigen::VectorXd& costs, double alpha) {
  if (!(alpha > 0.0)) throw InvalidArgumentError("alpha must be positive");
  return project_simplex(-costs / (2.0 * alpha));
}

SimplexPoint mixed_strategy(const DiscreteControlProblem& dcp, const StateVector& x, RandomSource& rng) {
  return mixed_strategy_from_costs(saa_costs(dcp, x, rng), dcp.alpha);
}

DiscreteIFS discrete_smpc_as_ifs(const DiscreteControlProblem& dcp, std::uint64_t saa_seed) {
  validate(dcp);
  std::vector<RandomMap> maps;
  for (const auto& u : dcp.controls) {
    maps.push_back([base = dcp.base, u](const StateVector& x, RandomSource& rng) { return plant_step(base, x, u, rng); });
  }
  auto probs = [dcp, saa_seed](const StateVector& x) {
    RandomSource rng(saa_seed);
    return mixed_strategy(dcp, x, rng).p;
  };
  return DiscreteIFS(std::move(maps), std::move(probs));
}

Eigen::VectorXd projected_gradient(const ConvexObjective& objective, Eigen::VectorXd start,
                                   const ProjectedGradientOptions& options) {
  if (!(objective.lipschitz > 0.0)) throw InvalidArgumentError("gradient Lipschitz constant must be positive");
  const double step = 1.0 / objective.lipschitz;
  auto project = [&](Eigen::VectorXd u) { return objective.project ? objective.project(u) : u; };
  Eigen::VectorXd u = project(std::move(start));
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    Eigen::VectorXd next = project(u - step * objective.gradient(u));
    const double moved = (next - u).norm();
    u = std::move(next);
    if (moved <= options.tolerance) break;
  }
  return u;
}

}  // namespace ergodic_smpc
