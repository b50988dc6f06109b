#include <gtest/gtest.h>

#include <cmath>

#include "ergodic_smpc/conditions.hpp"
#include "ergodic_smpc/error.hpp"
#include "ergodic_smpc/linalg.hpp"

using namespace ergodic_smpc;

namespace {

Transformation scale(double c) {
  return [c](const StateVector& x) -> StateVector { return c * x; };
}

ProbabilityMap clamp_probs() {
  return [](const StateVector& x) -> Eigen::VectorXd {
    const double p = std::clamp(x[0], 0.2, 0.8);
    return Eigen::Vector2d(p, 1 - p);
  };
}

}  // namespace

TEST(OperatorNorm, MatchesSingularValue) {
  RandomSource r(4);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd m(4, 3);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = r.normal();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    EXPECT_NEAR(operator_norm(m), svd.singularValues()[0], 1e-8);
  }
  EXPECT_EQ(operator_norm(Eigen::MatrixXd::Zero(3, 3)), 0.0);
  EXPECT_NEAR(operator_norm(Eigen::MatrixXd::Constant(1, 1, -0.3)), 0.3, 1e-15);
}

TEST(EstimateLipschitz, LinearMapIsExact) {
  const auto e = estimate_lipschitz(scale(2), DomainBox::cube(1, 0, 1), 50, 0);
  EXPECT_NEAR(e.value, 2.0, 1e-12);
}

TEST(EstimateLipschitz, ConstantMapIsZero) {
  const auto e = estimate_lipschitz([](const StateVector& x) -> StateVector { return StateVector::Constant(x.size(), 3.0); },
                                    DomainBox::cube(2, -1, 1), 50, 0);
  EXPECT_EQ(e.value, 0.0);
}

TEST(EstimateLipschitz, SquareOnUnitInterval) {
  const auto e = estimate_lipschitz([](const StateVector& x) -> StateVector { return x.cwiseProduct(x); },
                                    DomainBox::cube(1, 0, 1), 10000, 1);
  EXPECT_GE(e.value, 1.9);
  EXPECT_LE(e.value, 2.0);
}

TEST(EstimateLipschitz, WitnessReproducesValue) {
  const Transformation f = [](const StateVector& x) -> StateVector {
    return Eigen::Vector2d(std::sin(3 * x[0]) + x[1], x[0] * x[1]);
  };
  const auto box = DomainBox::cube(2, -1, 1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto e = estimate_lipschitz(f, box, 300, seed);
    EXPECT_NEAR(lipschitz_ratio(f, e.witness_x, e.witness_y), e.value, 1e-12);
  }
}

TEST(EstimateLipschitz, MonotoneInPairs) {
  const Transformation f = [](const StateVector& x) -> StateVector { return x.array().cube().matrix(); };
  const auto box = DomainBox::cube(3, -1, 1);
  double prev = 0;
  for (std::size_t n : {1, 2, 5, 10, 50, 100, 500, 1000}) {
    const double v = estimate_lipschitz(f, box, n, 21).value;
    EXPECT_GE(v, prev);
    prev = v;
  }
}

TEST(EstimateLipschitz, NonFiniteIsEvaluationError) {
  const Transformation f = [](const StateVector& x) -> StateVector { return x.array().log().matrix(); };
  EXPECT_THROW(estimate_lipschitz(f, DomainBox::cube(1, -1, 1), 100, 0), EvaluationError);
}

TEST(EstimateLipschitz, Deterministic) {
  const Transformation f = [](const StateVector& x) -> StateVector { return x.array().sin().matrix(); };
  const auto a = estimate_lipschitz(f, DomainBox::cube(2, 0, 3), 200, 9);
  const auto b = estimate_lipschitz(f, DomainBox::cube(2, 0, 3), 200, 9);
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.witness_x, b.witness_x);
}

TEST(AverageContraction, HalfAndThird) {
  auto ifs = DiscreteIFS::deterministic({scale(0.5), scale(1.0 / 3)}, constant_probabilities(Eigen::Vector2d(0.5, 0.5)));
  const auto r = check_average_contraction(ifs, DomainBox::cube(1, 0, 1), 50, 50, 0);
  EXPECT_NEAR(r.constants.at("lambda_s"), 5.0 / 12, 1e-9);
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_EQ(r.verdict_label(), "pass(sampled)");
}

TEST(AverageContraction, IdentityFails) {
  auto ifs = DiscreteIFS::deterministic({scale(1)}, constant_probabilities(Eigen::VectorXd::Ones(1)));
  const auto r = check_average_contraction(ifs, DomainBox::cube(1, 0, 1), 50, 50, 0);
  EXPECT_NEAR(r.constants.at("lambda_s"), 1.0, 1e-12);
  EXPECT_EQ(r.verdict, Verdict::fail);
}

TEST(AverageContraction, ExpandingMapFailsWithWitness) {
  auto ifs = DiscreteIFS::deterministic({scale(2), [](const StateVector& x) -> StateVector { return 0 * x; }},
                                        constant_probabilities(Eigen::Vector2d(0.9, 0.1)));
  const auto r = check_average_contraction(ifs, DomainBox::cube(1, 0, 1), 50, 50, 0);
  EXPECT_NEAR(r.constants.at("lambda_s"), 1.8, 1e-9);
  EXPECT_EQ(r.verdict, Verdict::fail);
  EXPECT_FALSE(r.witness.empty());
}

TEST(AverageContraction, MarginMakesInconclusive) {
  auto ifs = DiscreteIFS::deterministic({scale(0.95)}, constant_probabilities(Eigen::VectorXd::Ones(1)));
  const auto r = check_average_contraction(ifs, DomainBox::cube(1, 0, 1), 10, 10, 0, 0.1);
  EXPECT_EQ(r.verdict, Verdict::inconclusive);
}

TEST(MinProbability, ConstantPasses) {
  auto ifs = DiscreteIFS::deterministic({scale(1), scale(1)}, constant_probabilities(Eigen::Vector2d(0.3, 0.7)));
  const auto r = check_min_probability(ifs, DomainBox::cube(1, 0, 1), 100, 0);
  EXPECT_NEAR(r.constants.at("p0"), 0.3, 1e-15);
  EXPECT_EQ(r.verdict, Verdict::pass);
}

TEST(MinProbability, ZeroSomewhereFails) {
  auto ifs = DiscreteIFS::deterministic({scale(1), scale(1)}, [](const StateVector& x) -> Eigen::VectorXd {
    const double p = std::clamp(x[0], 0.0, 1.0);
    return Eigen::Vector2d(p, 1 - p);
  });
  const auto r = check_min_probability(ifs, DomainBox::cube(1, -1, 1), 200, 0);
  EXPECT_EQ(r.verdict, Verdict::fail);
  EXPECT_EQ(r.constants.at("p0"), 0.0);
  ASSERT_TRUE(r.witness.count("x"));
  EXPECT_LE(r.witness.at("x")[0], 0.0);
}

TEST(ProbabilityModulus, ConstantIsZero) {
  auto ifs = DiscreteIFS::deterministic({scale(1), scale(1)}, constant_probabilities(Eigen::Vector2d(0.3, 0.7)));
  EXPECT_EQ(estimate_probability_modulus(ifs, DomainBox::cube(1, 0, 1), 100, 0).theta, 0.0);
}

TEST(ProbabilityModulus, ClampSlope) {
  auto ifs = DiscreteIFS::deterministic({scale(1), scale(1)}, clamp_probs());
  const auto e = estimate_probability_modulus(ifs, DomainBox::cube(1, 0, 1), 1000, 0);
  EXPECT_GE(e.theta, 1.9);
  EXPECT_LE(e.theta, 2.0 + 1e-9);
  const auto again = estimate_probability_modulus(ifs, DomainBox::cube(1, 0, 1), 1000, 0);
  EXPECT_EQ(e.theta, again.theta);
  EXPECT_EQ(e.witness_x, again.witness_x);
  EXPECT_EQ(e.witness_y, again.witness_y);
}

TEST(LinearCondition, ScalarExample) {
  const auto p = scalar_problem(0.2, 1, 1, 1, 0, 0.005);
  const auto r = check_linear_sufficient_condition(p);
  EXPECT_NEAR(r.constants.at("bound"), 0.305, 1e-12);
  EXPECT_EQ(r.verdict_label(), "pass(certified)");
}

TEST(LinearCondition, ZeroDynamics) {
  const auto r = check_linear_sufficient_condition(scalar_problem(0, 1, 1, 1, 0, 0));
  EXPECT_EQ(r.constants.at("bound"), 0.0);
  EXPECT_TRUE(r.passed());
}

TEST(LinearCondition, NoControl) {
  EXPECT_NEAR(check_linear_sufficient_condition(scalar_problem(0.9, 0, 1, 1, 0, 0)).constants.at("bound"), 0.9, 1e-15);
  EXPECT_TRUE(check_linear_sufficient_condition(scalar_problem(0.9, 0, 1, 1, 0, 0)).passed());
  const auto r = check_linear_sufficient_condition(scalar_problem(1.2, 0, 1, 1, 0, 0));
  EXPECT_NEAR(r.constants.at("bound"), 1.2, 1e-15);
  EXPECT_EQ(r.verdict, Verdict::fail);
}

TEST(LinearCondition, DynamicsNormAgainstCornerSvd) {
  // Oracle: explicit SVD at each corner of the noise box.
  auto p = generate_problem(GenerationSpec{}, 5);
  const auto b = linear_contraction_bound(p);
  double worst = 0;
  for (double s0 : {-1.0, 1.0}) {
    for (double s1 : {-1.0, 1.0}) {
      Eigen::MatrixXd m = p.A;
      m(0, 1) += s0 * p.noise.bound;
      m(2, 2) += s1 * p.noise.bound;
      worst = std::max(worst, Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()[0]);
    }
  }
  EXPECT_NEAR(b.dynamics_norm, worst, 1e-9);
}

TEST(LinearCondition, SingularNormalMatrix) {
  auto p = scalar_problem(0.5, 1, 0, 1, 0, 0);
  p.B = Eigen::RowVector2d(1, 1);
  p.R = Eigen::Vector2d(1, 1e-14).asDiagonal();
  EXPECT_THROW(check_linear_sufficient_condition(p), SingularNormalMatrixError);
}

TEST(LinearCondition, AnalyticDominatesSampled) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto p = generate_problem(GenerationSpec{}, seed);
    const auto lin = check_linear_sufficient_condition(p);
    ASSERT_TRUE(lin.passed());
    const auto avg = check_average_contraction(extreme_noise_closed_loop_ifs(p), DomainBox::cube(4, -1, 1), 50, 100, seed);
    EXPECT_TRUE(avg.passed());
    EXPECT_LE(avg.constants.at("lambda_s"), lin.constants.at("bound") + 1e-12);
  }
}

TEST(StoppingTime, Uniform) {
  const double T = 2.0;
  const auto r = check_stopping_time(ExplicitDensity{[=](double, const StateVector&) { return 1.0 / T; }, T},
                                     DomainBox::cube(1, 0, 1));
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.constants.at("tau_max"), 0.0);
  EXPECT_NEAR(r.constants.at("gamma"), 1.0 / T, 1e-15);
}

TEST(StoppingTime, LateSupport) {
  const double T = 1.0;
  const auto r = check_stopping_time(
      ExplicitDensity{[=](double t, const StateVector&) { return t >= T / 2 ? 2.0 / T : 0.0; }, T},
      DomainBox::cube(1, 0, 1));
  EXPECT_TRUE(r.passed());
  EXPECT_NEAR(r.constants.at("tau_max"), T / 2, 1e-12);
}

TEST(StoppingTime, SupportAtTheEndFails) {
  const double T = 1.0;
  StoppingTimeGrid grid;
  const double dt = T / static_cast<double>(grid.t_intervals);
  const auto r = check_stopping_time(
      ExplicitDensity{[=](double t, const StateVector&) { return t >= T - dt / 2 ? 2.0 / dt : 0.0; }, T},
      DomainBox::cube(1, 0, 1), grid);
  EXPECT_EQ(r.verdict, Verdict::fail);
}

TEST(StoppingTime, NegativeDensity) {
  EXPECT_THROW(check_stopping_time(ExplicitDensity{[](double t, const StateVector&) { return t - 0.5; }, 1.0},
                                   DomainBox::cube(1, 0, 1)),
               InvalidDensityError);
}

TEST(StoppingTime, SamplerOnlyIsRejected) {
  ContinuousIFS ifs([](const Parameter& t, const StateVector& x) -> StateVector { return x + t; },
                    [](const StateVector&, RandomSource& r) -> Parameter { return Parameter::Constant(1, r.uniform()); },
                    [](const Parameter&) { return true; });
  EXPECT_THROW(check_stopping_time(ifs, DomainBox::cube(1, 0, 1)), InvalidDensityError);
}

TEST(Reports, DeterministicUnderSeed) {
  auto ifs = DiscreteIFS::deterministic({scale(0.5), scale(0.7)}, clamp_probs());
  const auto a = check_average_contraction(ifs, DomainBox::cube(1, 0, 1), 40, 40, 13);
  const auto b = check_average_contraction(ifs, DomainBox::cube(1, 0, 1), 40, 40, 13);
  EXPECT_EQ(a.constants, b.constants);
  EXPECT_EQ(a.witness, b.witness);
}
