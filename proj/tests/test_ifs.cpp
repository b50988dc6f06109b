#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "ergodic_smpc/error.hpp"
#include "ergodic_smpc/ifs.hpp"

using namespace ergodic_smpc;

namespace {

Transformation scale(double c) {
  return [c](const StateVector& x) -> StateVector { return c * x; };
}

DiscreteIFS two_maps(double a, double b, double pa) {
  return DiscreteIFS::deterministic({scale(a), scale(b)}, constant_probabilities(Eigen::Vector2d(pa, 1 - pa)));
}

}  // namespace

TEST(RandomSource, SameSeedAndStreamRepeat) {
  RandomSource a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(RandomSource, UniformAndIndexRanges) {
  RandomSource r(7);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    ASSERT_LT(r.index(7), 7u);
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(RandomSource, NormalMoments) {
  RandomSource r(11);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(SampleCategorical, DegenerateAndTies) {
  RandomSource r(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_categorical(Eigen::Vector3d(0, 1, 0), r), 1u);
  // Zero-probability tail entries are never chosen even when the cumulative sum ties.
  for (int i = 0; i < 1000; ++i) EXPECT_LT(sample_categorical(Eigen::Vector3d(0.5, 0.5, 0), r), 2u);
}

TEST(SampleCategorical, FrequenciesMatch) {
  RandomSource r(5);
  std::vector<int> counts(3);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[sample_categorical(Eigen::Vector3d(0.2, 0.3, 0.5), r)];
  EXPECT_NEAR(counts[0] / double(n), 0.2, 0.01);
  EXPECT_NEAR(counts[1] / double(n), 0.3, 0.01);
  EXPECT_NEAR(counts[2] / double(n), 0.5, 0.01);
}

TEST(DiscreteIFS, ProbabilityValidation) {
  const auto x = scalar_state(0);
  auto near = DiscreteIFS::deterministic({scale(1), scale(1)}, constant_probabilities(Eigen::Vector2d(0.5, 0.5 + 5e-10)));
  EXPECT_NEAR(near.probabilities(x).sum(), 1.0, 1e-12);
  auto off = DiscreteIFS::deterministic({scale(1), scale(1)}, constant_probabilities(Eigen::Vector2d(0.5, 0.6)));
  EXPECT_THROW(off.probabilities(x), InvalidProbabilityError);
  auto neg = DiscreteIFS::deterministic({scale(1), scale(1)}, constant_probabilities(Eigen::Vector2d(1.5, -0.5)));
  EXPECT_THROW(neg.probabilities(x), InvalidProbabilityError);
  auto wrong_size = DiscreteIFS::deterministic({scale(1), scale(1)}, constant_probabilities(Eigen::Vector3d(1, 0, 0)));
  EXPECT_THROW(wrong_size.probabilities(x), InvalidProbabilityError);
}

TEST(StepDiscrete, DegenerateProbabilitySelectsFirstMap) {
  auto ifs = two_maps(0.5, 3.0, 1.0);
  RandomSource r(0);
  const auto s = step_discrete(ifs, scalar_state(1.0), r);
  EXPECT_DOUBLE_EQ(s.state[0], 0.5);
  EXPECT_EQ(s.index, 0u);
}

TEST(StepDiscrete, OutputInSupport) {
  auto ifs = two_maps(0.5, 1.0 / 3, 0.5);
  RandomSource r(9);
  std::set<double> seen;
  for (int i = 0; i < 200; ++i) seen.insert(step_discrete(ifs, scalar_state(6), r).state[0]);
  EXPECT_EQ(seen, (std::set<double>{2.0, 3.0}));
}

TEST(StepDiscrete, SeededRepeat) {
  auto ifs = two_maps(0.5, 1.0 / 3, 0.5);
  RandomSource a(42), b(42);
  for (int i = 0; i < 20; ++i) {
    const auto sa = step_discrete(ifs, scalar_state(6), a);
    const auto sb = step_discrete(ifs, scalar_state(6), b);
    EXPECT_EQ(sa.state[0], sb.state[0]);
    EXPECT_EQ(sa.index, sb.index);
  }
}

TEST(StepDiscrete, NonFiniteOutputIsBlowup) {
  auto ifs = DiscreteIFS::deterministic({[](const StateVector& x) -> StateVector { return x / 0.0; }},
                                        constant_probabilities(Eigen::VectorXd::Ones(1)));
  RandomSource r(0);
  EXPECT_THROW(step_discrete(ifs, scalar_state(1), r), NumericalBlowupError);
}

TEST(StepContinuous, IdentityShift) {
  ContinuousIFS ifs([](const Parameter& t, const StateVector& x) -> StateVector { return x + t; },
                    [](const StateVector&, RandomSource&) -> Parameter { return Parameter::Zero(1); },
                    [](const Parameter&) { return true; });
  RandomSource r(0);
  const auto s = step_continuous(ifs, scalar_state(2.5), r);
  EXPECT_EQ(s.state[0], 2.5);
  EXPECT_EQ(s.parameter[0], 0.0);
}

TEST(StepContinuous, RangeContainmentAndRepeat) {
  ContinuousIFS ifs([](const Parameter& t, const StateVector& x) -> StateVector { return t[0] * x; },
                    [](const StateVector&, RandomSource& r) -> Parameter { return Parameter::Constant(1, r.uniform(0.4, 0.6)); },
                    [](const Parameter& t) { return t[0] >= 0.4 && t[0] <= 0.6; });
  RandomSource a(3), b(3);
  for (int i = 0; i < 500; ++i) {
    const auto s = step_continuous(ifs, scalar_state(1), a);
    ASSERT_GE(s.state[0], 0.4);
    ASSERT_LE(s.state[0], 0.6);
    const auto t = step_continuous(ifs, scalar_state(1), b);
    ASSERT_EQ(s.state[0], t.state[0]);
    ASSERT_EQ(s.parameter[0], t.parameter[0]);
  }
}

TEST(StepContinuous, SamplerOutsideDomain) {
  ContinuousIFS ifs([](const Parameter& t, const StateVector& x) -> StateVector { return x + t; },
                    [](const StateVector&, RandomSource&) -> Parameter { return Parameter::Constant(1, 5.0); },
                    [](const Parameter& t) { return t[0] <= 1.0; });
  RandomSource r(0);
  EXPECT_THROW(step_continuous(ifs, scalar_state(0), r), ParameterDomainError);
}

TEST(Simulate, GeometricContraction) {
  auto ifs = DiscreteIFS::deterministic({scale(0.5)}, constant_probabilities(Eigen::VectorXd::Ones(1)));
  const auto t = simulate(ifs, scalar_state(1), 3, 0);
  ASSERT_EQ(t.states.size(), 4u);
  EXPECT_EQ(t.states[1][0], 0.5);
  EXPECT_EQ(t.states[2][0], 0.25);
  EXPECT_EQ(t.states[3][0], 0.125);
  EXPECT_EQ(t.selections.size(), 3u);
}

TEST(Simulate, ZeroSteps) {
  const auto t = simulate(bernoulli_ifs(), scalar_state(0.3), 0, 0);
  ASSERT_EQ(t.states.size(), 1u);
  EXPECT_EQ(t.states[0][0], 0.3);
  EXPECT_TRUE(t.selections.empty());
}

TEST(Simulate, BernoulliStaysInUnitInterval) {
  const auto t = simulate(bernoulli_ifs(), scalar_state(0), 100000, 1);
  for (const auto& x : t.states) {
    ASSERT_GE(x[0], 0.0);
    ASSERT_LE(x[0], 1.0);
  }
}

TEST(Simulate, Deterministic) {
  const auto a = simulate(bernoulli_ifs(), scalar_state(0), 1000, 77);
  const auto b = simulate(bernoulli_ifs(), scalar_state(0), 1000, 77);
  for (std::size_t k = 0; k < a.states.size(); ++k) ASSERT_EQ(a.states[k][0], b.states[k][0]);
  for (std::size_t k = 0; k < a.selections.size(); ++k) ASSERT_EQ(std::get<std::size_t>(a.selections[k]), std::get<std::size_t>(b.selections[k]));
}

TEST(Simulate, StepIndexAttachedToErrors) {
  auto ifs = DiscreteIFS::deterministic({scale(10.0)}, constant_probabilities(Eigen::VectorXd::Ones(1)));
  try {
    simulate(ifs, scalar_state(1), 100, 0);
    FAIL() << "expected blowup";
  } catch (const NumericalBlowupError& e) {
    ASSERT_TRUE(e.step().has_value());
    EXPECT_EQ(*e.step(), 13u);  // states[13] = 10^13 is the first past 1e12
  }
}

TEST(Simulate, ContractionSanity) {
  // x -> 0.7 R x + c with R a rotation; fixed point x* solves (I - 0.7R) x* = c.
  Eigen::Matrix2d rot;
  rot << std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3);
  const Eigen::Matrix2d m = 0.7 * rot;
  const Eigen::Vector2d c(1.0, -2.0);
  auto ifs = DiscreteIFS::deterministic({[=](const StateVector& x) -> StateVector { return m * x + c; }},
                                        constant_probabilities(Eigen::VectorXd::Ones(1)));
  const Eigen::Vector2d xs = (Eigen::Matrix2d::Identity() - m).lu().solve(c);
  const StateVector x0 = Eigen::Vector2d(5, 5);
  const auto t = simulate(ifs, x0, 50, 0);
  const double e0 = (x0 - xs).norm();
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    ASSERT_LE((t.states[k] - xs).norm(), std::pow(0.7, k) * e0 * (1 + 1e-9) + 1e-15);
  }
}

TEST(Ensemble, ZeroStepsIsInitialHistogram) {
  RandomSource r(2);
  std::vector<StateVector> particles;
  for (int i = 0; i < 100; ++i) particles.push_back(scalar_state(r.uniform()));
  const auto m = run_ensemble(bernoulli_ifs(), particles, 0, 0);
  const auto h = build_histogram(particles, 10);
  EXPECT_EQ(m.edges, h.edges);
  EXPECT_EQ(m.proportions, h.proportions);
  EXPECT_EQ(m.sample_count, 100u);
}

TEST(Ensemble, ConstantMapIsPointMass) {
  auto ifs = DiscreteIFS::deterministic({[](const StateVector& x) -> StateVector { return StateVector::Zero(x.size()); }},
                                        constant_probabilities(Eigen::VectorXd::Ones(1)));
  std::vector<StateVector> particles{scalar_state(1), scalar_state(-3), scalar_state(8)};
  const auto m = run_ensemble(ifs, particles, 1, 0);
  ASSERT_EQ(m.proportions[0].size(), 1u);
  EXPECT_EQ(m.proportions[0][0], 1.0);
  EXPECT_LE(m.edges[0][0], 0.0);
  EXPECT_GE(m.edges[0][1], 0.0);
}

TEST(Ensemble, BernoulliApproachesUniform) {
  std::vector<StateVector> particles(10000, scalar_state(0));
  EnsembleOptions opt;
  opt.range = std::vector<BinRange>{{0.0, 1.0}};
  const auto m = run_ensemble(bernoulli_ifs(), particles, 50, 3, opt);
  double total = 0;
  for (double p : m.proportions[0]) {
    EXPECT_NEAR(p, 0.1, 0.03);
    total += p;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(m.sample_count, 10000u);
}

TEST(Ensemble, IndependentOfWorkerCount) {
  std::vector<StateVector> particles(500, scalar_state(0));
  EnsembleOptions one, four;
  four.workers = 4;
  const auto a = advance_ensemble(bernoulli_ifs(), particles, 30, 8, one);
  const auto b = advance_ensemble(bernoulli_ifs(), particles, 30, 8, four);
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i][0], b[i][0]);
}

TEST(Ensemble, DivergenceNamesParticle) {
  auto ifs = DiscreteIFS::deterministic({scale(10.0)}, constant_probabilities(Eigen::VectorXd::Ones(1)));
  std::vector<StateVector> particles{scalar_state(0), scalar_state(0), scalar_state(1)};
  try {
    run_ensemble(ifs, particles, 20, 0);
    FAIL() << "expected blowup";
  } catch (const NumericalBlowupError& e) {
    ASSERT_TRUE(e.particle().has_value());
    EXPECT_EQ(*e.particle(), 2u);
  }
}

TEST(Ensemble, ProbabilitySumsAlongRun) {
  // State-dependent probabilities evaluated on every visited state.
  auto ifs = DiscreteIFS::deterministic(
      {scale(0.5), [](const StateVector& x) -> StateVector { return 0.5 * x + StateVector::Constant(1, 0.5); }},
      [](const StateVector& x) -> Eigen::VectorXd {
        const double p = std::clamp(x[0], 0.2, 0.8);
        return Eigen::Vector2d(p, 1 - p);
      });
  const auto t = simulate(ifs, scalar_state(0.3), 2000, 4);
  for (const auto& x : t.states) {
    const auto p = ifs.probabilities(x);
    ASSERT_NEAR(p.sum(), 1.0, 1e-12);
    ASSERT_GE(p.minCoeff(), 0.0);
  }
}

TEST(ContinuousIFS, DensityMass) {
  ExplicitDensity d{[](double, const StateVector&) { return 0.5; }, 2.0};
  EXPECT_NEAR(density_mass(d, scalar_state(0)), 1.0, 1e-6);
}
