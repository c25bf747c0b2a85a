#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "cwconv/analysis.hpp"
#include "cwconv/scenarios.hpp"

using namespace cwconv;

TEST(GridSteps, RoundsUpIgnoringRoundoff)
{
  EXPECT_EQ(grid_steps(20.0, 1e-3), 20000u);
  EXPECT_EQ(grid_steps(1.0, 0.3), 4u);
  EXPECT_EQ(grid_steps(0.3, 0.1), 3u);
  EXPECT_THROW(grid_steps(0.0, 0.1), std::invalid_argument);
}

TEST(Example1, InitialSampleAndDerivatives)
{
  const auto traj = example1_trajectory(20.0, 1e-3);
  ASSERT_EQ(traj.size(), 20001u);
  EXPECT_EQ(traj.states[0], Eigen::Vector2d(3, 0));
  EXPECT_EQ((*traj.derivatives)[0], Eigen::Vector2d(-1, 1));
  const double t = traj.times[12345];
  EXPECT_NEAR(traj.states[12345][0], 2.0 + std::exp(-t), 1e-15);
  EXPECT_NEAR(traj.states[12345][1], std::sin(t), 1e-15);
  EXPECT_EQ(example1_energy().value(Eigen::Vector2d(3, 0)), 16.0);
}

TEST(Example1, RefinementSharesGridPoints)
{
  const auto coarse = example1_trajectory(2.0, 0.01);
  const auto fine = example1_trajectory(2.0, 0.005);
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    ASSERT_NEAR(coarse.times[k], fine.times[2 * k], 1e-15);
    ASSERT_NEAR((coarse.states[k] - fine.states[2 * k]).norm(), 0.0, 1e-14);
  }
}

TEST(Spiral, RadiusAndTail)
{
  const auto traj = spiral_trajectory(40.0, 1e-3);
  for (std::size_t k = 0; k < traj.size(); k += 97) EXPECT_NEAR(traj.states[k].norm(), 1.0 + std::exp(-traj.times[k]), 1e-14);
  EXPECT_EQ(traj.states[0], Eigen::Vector2d(2, 0));
  EXPECT_GE(tail_diameter(traj.states, traj.size() / 2), 1.9);
  EXPECT_EQ(spiral_energy().value(Eigen::Vector2d(3, 4)), 5.0);
}

TEST(Spiral, DerivativesMatchFiniteDifferences)
{
  const auto traj = spiral_trajectory(5.0, 1e-4);
  for (std::size_t k = 1; k + 1 < traj.size(); k += 1013) {
    const Eigen::Vector2d central = (traj.states[k + 1] - traj.states[k - 1]) / 2e-4;
    EXPECT_LT((central - (*traj.derivatives)[k]).norm(), 1e-6);
  }
}

TEST(Platoon, DefaultsValidate)
{
  const auto c = build_platoon(PlatoonOptions{});
  EXPECT_EQ(c.n, 5u);
  EXPECT_EQ(c.edges.size(), 4u);
  EXPECT_NO_THROW(validate(c));
  for (std::size_t e = 0; e < 4; ++e) EXPECT_EQ(c.edges[e].pbar, 0.1);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(c.y0[i], static_cast<double>(i), 0.25);
}

TEST(Platoon, TwoAgentMinimizer)
{
  PlatoonOptions o;
  o.n = 2;
  const MultiAgentSystem sys(build_platoon(o));
  const auto r = find_constrained_minimizer(sys.energy(), 1e-12);
  EXPECT_NEAR(r.x[0], -0.5, 1e-11);
  EXPECT_NEAR(r.x[1], 0.5, 1e-11);
}

TEST(Platoon, DeterministicPerSeed)
{
  PlatoonOptions o;
  o.perturbation = PerturbationKind::Uniform;
  EXPECT_EQ(build_platoon(o), build_platoon(o));
  auto other = o;
  other.seed = 2;
  EXPECT_NE(build_platoon(o).y0, build_platoon(other).y0);
}

TEST(Platoon, EveryKindBuilds)
{
  for (auto p : {PotentialKind::QuadraticSpacing, PotentialKind::QuadQuartic, PotentialKind::Cosh})
    for (auto q : {PerturbationKind::Zero, PerturbationKind::Constant, PerturbationKind::Sinusoid, PerturbationKind::Uniform,
                   PerturbationKind::Adversarial, PerturbationKind::Mix})
      for (auto a : {ActuatorKind::Identity, ActuatorKind::Gain, ActuatorKind::StopGo, ActuatorKind::Saturation}) {
        PlatoonOptions o;
        o.potential = p;
        o.perturbation = q;
        o.actuator = a;
        EXPECT_NO_THROW(MultiAgentSystem(build_platoon(o)));
      }
}

TEST(ParseKinds, NamesAndErrors)
{
  EXPECT_EQ(parse_potential_kind("cosh"), PotentialKind::Cosh);
  EXPECT_EQ(parse_perturbation_kind("mix"), PerturbationKind::Mix);
  EXPECT_EQ(parse_actuator_kind("stop_go"), ActuatorKind::StopGo);
  EXPECT_THROW(parse_potential_kind("huber"), std::invalid_argument);
  EXPECT_THROW(parse_perturbation_kind("gaussian"), std::invalid_argument);
  EXPECT_THROW(parse_actuator_kind("pid"), std::invalid_argument);
}

TEST(GainSchedule, StopGoIsBinaryAndActiveEveryFourthSlot)
{
  const GainSchedule g{GainSchedule::Kind::StopGo, 2.0, 0.5};
  int idle = 0;
  for (int k = 0; k < 400; ++k) {
    const double t = 0.5 * k + 0.25;
    const double v = g.gain(1, t, 3);
    ASSERT_TRUE(v == 0.0 || v == 2.0);
    if (k % 4 == 0) ASSERT_EQ(v, 2.0);
    idle += v == 0.0;
  }
  EXPECT_GT(idle, 50);
  EXPECT_EQ(GainSchedule{}.gain(3, 17.0, 1), 1.0);
}

TEST(RandomSymmetric, NormAndSymmetry)
{
  const auto r = random_symmetric(5, 0.5, 9);
  EXPECT_EQ(r, r.transpose());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
  EXPECT_NEAR(svd.singularValues()[0], 0.5, 1e-14);
  EXPECT_EQ(r, random_symmetric(5, 0.5, 9));
}

TEST(QuadraticDescent, IdentityDecaysExponentially)
{
  const auto traj = quadratic_descent_trajectory(Eigen::Matrix2d::Identity(), GainSchedule{}, Eigen::Vector2d(1, 1), 10.0, 1e-3, 1);
  // Euler on y' = -2y: y_k = (1 - 2 dt)^k y0
  EXPECT_NEAR(traj.states.back()[0], std::pow(1.0 - 2e-3, 10000), 1e-15);
  EXPECT_LT(traj.states.back().norm(), 1e-3);
}

TEST(QuadraticDescent, ZeroGainsStayPut)
{
  const GainSchedule g{GainSchedule::Kind::Constant, 0.0, 0.5};
  const auto traj = quadratic_descent_trajectory(Eigen::Matrix2d::Identity(), g, Eigen::Vector2d(1, -2), 1.0, 0.01, 1);
  for (const auto& y : traj.states) EXPECT_EQ(y, Eigen::Vector2d(1, -2));
}

TEST(QuadraticDescent, StopGoConvergesWithNonpositiveProducts)
{
  const Eigen::MatrixXd q = Eigen::MatrixXd::Identity(4, 4) + random_symmetric(4, 0.5, 1);
  const GainSchedule g{GainSchedule::Kind::StopGo, 1.0, 0.5};
  const auto traj = quadratic_descent_trajectory(q, g, Eigen::VectorXd::Ones(4), 200.0, 1e-3, 1, true);
  const QuadraticEnergy v(q);
  EXPECT_LT(v.gradient(traj.states.back()).norm(), 1e-3);
  EXPECT_TRUE(check_condition_cw(traj, EnergyFunction(v), 0.0).satisfied());
}

TEST(QuadraticDescent, RejectsBadInputs)
{
  Eigen::Matrix2d indefinite;
  indefinite << 1, 0, 0, -1;
  EXPECT_THROW(quadratic_descent_trajectory(indefinite, GainSchedule{}, Eigen::Vector2d(1, 1), 1.0, 0.1, 1, true),
               std::invalid_argument);
  EXPECT_NO_THROW(quadratic_descent_trajectory(indefinite, GainSchedule{}, Eigen::Vector2d(1, 1), 1.0, 0.1, 1, false));
  EXPECT_THROW(quadratic_descent_trajectory(Eigen::Matrix2d::Identity(), GainSchedule{}, Eigen::Vector3d(1, 1, 1), 1.0, 0.1, 1),
               std::invalid_argument);
  EXPECT_THROW(quadratic_descent_trajectory(Eigen::Matrix2d::Identity(), GainSchedule{GainSchedule::Kind::StopGo, 1.0, 0.0},
                                            Eigen::Vector2d(1, 1), 1.0, 0.1, 1),
               std::invalid_argument);
}
