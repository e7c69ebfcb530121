#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hybrid_zeno/ball_model.hpp"

using namespace hybrid_zeno;

namespace {

ExtendedState ext(double x, double p, double px, double pp) { return {0, {x, p}, {px, pp}, 0}; }

PhysParams with(double m, double g, double c = 0.75) {
  PhysParams prm;
  prm.m = m;
  prm.g = g;
  prm.c = c;
  return prm;
}

}  // namespace

TEST(ControlledFlow, ZeroCostatesGiveFreeFall) {
  const ExtVec d = controlled_flow(ext(1, 0, 0, 0), with(1, 1));
  EXPECT_EQ(d, (ExtVec{0, -1, 0, 0, 0}));
}

TEST(ControlledFlow, SwitchOnCostates) {
  const ExtVec d = controlled_flow(ext(0, 0, -std::sqrt(2.0 / 3.0), -2), with(1, 1));
  EXPECT_DOUBLE_EQ(d[0], 0);
  EXPECT_DOUBLE_EQ(d[1], 1);
  EXPECT_DOUBLE_EQ(d[2], 0);
  EXPECT_DOUBLE_EQ(d[3], std::sqrt(2.0 / 3.0));
  EXPECT_DOUBLE_EQ(d[4], 2);
}

TEST(ControlledFlow, MassAndGravityEnterCorrectly) {
  const ExtVec d = controlled_flow(ext(2, 3, 5, 7), with(2, 4));
  EXPECT_EQ(d, (ExtVec{1.5, -15, 0, -2.5, 24.5}));
}

TEST(Reset, Examples) {
  const BallState a = reset({0, -1}, with(1, 1, 0.75));
  EXPECT_EQ(a.x, 0);
  EXPECT_DOUBLE_EQ(a.p, 0.5625);
  EXPECT_DOUBLE_EQ(reset({0, -2}, with(1, 1, 0.5)).p, 0.5);
  const double c = 1 - 1e-9;
  EXPECT_NEAR(reset({0, -3}, with(1, 1, c)).p, 3, 1e-8);
}

TEST(Reset, OffGuardIsRejected) {
  EXPECT_THROW(reset({0.5, -1}, with(1, 1)), GuardViolation);
  EXPECT_THROW(reset({0, 1}, with(1, 1)), GuardViolation);
}

TEST(ExtendedReset, ZeroCostatesStayZero) {
  for (double c : {0.3, 0.75, 0.9}) {
    const ExtendedState out = extended_reset(ext(0, -1, 0, 0), with(1, 1, c));
    EXPECT_DOUBLE_EQ(out.state.p, c * c);
    EXPECT_EQ(out.costate.p_x, 0);
    EXPECT_EQ(out.costate.p_p, 0);
  }
}

TEST(ExtendedReset, HandEvaluatedExample) {
  const ExtendedState out = extended_reset(ext(0, -1, 1, 1), with(1, 1, 0.75));
  EXPECT_NEAR(out.costate.p_x, -4.795610425240055, 1e-13);
  EXPECT_NEAR(out.costate.p_p, -1.7777777777777777, 1e-14);
}

TEST(ExtendedReset, SingularAtRest) {
  EXPECT_THROW(extended_reset(ext(0, -1e-11, 1, 1), with(1, 1)), ZenoSingularity);
  EXPECT_THROW(extended_reset(ext(0, 0, 1, 1), with(1, 1)), ZenoSingularity);
}

TEST(ExtendedReset, ProjectsOntoReset) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> p(-3, -0.01), q(-5, 5);
  const PhysParams prm = with(1.3, 2.1, 0.6);
  for (int i = 0; i < 200; ++i) {
    const ExtendedState e = ext(0, p(rng), q(rng), q(rng));
    const ExtendedState out = extended_reset(e, prm);
    const BallState plain = reset(e.state, prm);
    EXPECT_EQ(out.state.x, plain.x);
    EXPECT_EQ(out.state.p, plain.p);
    EXPECT_EQ(out.J_acc, e.J_acc);
  }
}

TEST(ExtendedReset, PreservesOptimalHamiltonian) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> p(-3, -0.01), q(-5, 5), mass(0.5, 2), grav(0.5, 3);
  for (double c : {0.5, 0.75, 0.9}) {
    for (int i = 0; i < 500; ++i) {
      const PhysParams prm = with(mass(rng), grav(rng), c);
      const ExtendedState e = ext(0, p(rng), q(rng), q(rng));
      const double before = optimal_hamiltonian(e, prm);
      const double after = optimal_hamiltonian(extended_reset(e, prm), prm);
      EXPECT_LE(std::abs(after - before), 1e-12 * std::max(1.0, std::abs(before)))
          << "c=" << c << " p=" << e.state.p;
    }
  }
}

TEST(OptimalHamiltonian, Examples) {
  EXPECT_EQ(optimal_hamiltonian(ext(0.4, 1.2, 0, 0), with(1, 1)), 0);
  EXPECT_NEAR(optimal_hamiltonian(ext(0, 0, -std::sqrt(2.0 / 3.0), -2), with(1, 1)), 0, 1e-15);
  EXPECT_DOUBLE_EQ(optimal_hamiltonian(ext(0, 2, 3, 1), with(1, 2)), 3.5);
}

TEST(OptimalHamiltonian, ConservedAlongExtremalFlow) {
  const PhysParams prm;
  const auto sys = extended_ball_system(prm);
  for (auto [px, pp] : {std::pair{0.3, -0.4}, std::pair{-0.2, -1.1}, std::pair{1.5, 0.5}}) {
    const ExtVec start{0.8, 0.1, px, pp, 0};
    const double H0 = optimal_hamiltonian(from_vec(0, start), prm);
    HybridTrajectory<5> traj;
    try {
      traj = simulate_hybrid(sys, start, 0.0, prm.T_f, IntegratorConfig{});
    } catch (const ZenoSingularity&) {
      continue;
    }
    for (const auto& seg : traj.segments) {
      for (const auto& st : seg.steps) {
        for (double s : {0.0, 0.3, 0.7}) {
          const double t = st.t0 + s * st.h;
          EXPECT_LE(std::abs(optimal_hamiltonian(from_vec(t, st.eval(t)), prm) - H0), 1e-7);
        }
      }
      EXPECT_LE(std::abs(optimal_hamiltonian(from_vec(seg.t_end, seg.state_end), prm) - H0), 1e-7);
    }
  }
}

TEST(BallisticFlight, Examples) {
  const Flight a = ballistic_flight({1, 0}, with(1, 1));
  EXPECT_DOUBLE_EQ(a.t_impact, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(a.p_impact, -std::sqrt(2.0));
  const Flight b = ballistic_flight({0, 1}, with(1, 1));
  EXPECT_DOUBLE_EQ(b.t_impact, 2);
  EXPECT_DOUBLE_EQ(b.p_impact, -1);
  const Flight c = ballistic_flight({0, 0}, with(1, 1));
  EXPECT_EQ(c.t_impact, 0);
  EXPECT_EQ(c.p_impact, 0);
}

TEST(ZenoTime, SeriesExamples) {
  EXPECT_NEAR(zeno_time_series({1, 0}, with(1, 1)), 5.05076272276105, 1e-12);
  EXPECT_NEAR(zeno_time_series({0, 1}, with(1, 1, 0.5)), 8.0 / 3.0, 1e-12);
  EXPECT_NEAR(zeno_time_series({0.1, 0}, with(1, 1)), 1.59719141249985, 1e-12);
  EXPECT_NEAR(zeno_time_series({0.7, 0.2}, with(1, 1, 1e-9)),
              ballistic_flight({0.7, 0.2}, with(1, 1)).t_impact, 1e-12);
}

TEST(ZenoTime, PrintedFormulaExamples) {
  EXPECT_NEAR(zeno_time_paper({1, 0}, with(1, 1)), 9.69746442770122, 1e-12);
  EXPECT_EQ(zeno_time_paper({0, 0}, with(1, 1)), 0);
}

TEST(ZenoTime, PrintedConstantMatchesLinearRestitution) {
  // 3 / (1 - c^2) equals (1 + c) / (1 - c) exactly when (1 + c)^2 = 3, and
  // (1 + c) / (1 - c) is the series coefficient of the c^2 reset at c' = sqrt(c).
  const double c = std::sqrt(3.0) - 1;
  for (BallState s : {BallState{1, 0}, BallState{0.4, -0.7}, BallState{1.9, 0.8}}) {
    EXPECT_NEAR(zeno_time_paper(s, with(1, 1, c)), zeno_time_series(s, with(1, 1, std::sqrt(c))),
                1e-12);
  }
  EXPECT_GT(std::abs(zeno_time_paper({1, 0}, with(1, 1)) - zeno_time_series({1, 0}, with(1, 1))),
            1.0);
}

TEST(ZenoTime, MatchesSimulationOnGrid) {
  const PhysParams prm;
  const auto sys = ball_system(prm);
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double x0 = 0.1 + 1.9 * i / 9.0;
      const double p0 = -1 + 2.0 * j / 9.0;
      const auto traj = simulate_hybrid(sys, Vec<2>{x0, p0}, 0.0, 50.0, IntegratorConfig{});
      ASSERT_EQ(traj.termination, Termination::ZenoDetected);
      EXPECT_NEAR(*traj.t_inf, zeno_time_series({x0, p0}, prm), 1e-4) << x0 << ' ' << p0;
    }
  }
}

TEST(UncontrolledBall, ImpactMomentumDecaysByCSquared) {
  const PhysParams prm;
  const auto traj = simulate_hybrid(ball_system(prm), Vec<2>{1.5, 0.2}, 0.0, 50.0, IntegratorConfig{});
  for (std::size_t k = 1; k < 12; ++k) {
    const double ratio = traj.segments[k].state_end[1] / traj.segments[k - 1].state_end[1];
    EXPECT_NEAR(ratio, prm.c * prm.c, 1e-7) << k;
  }
}

TEST(PhysParams, Validation) {
  EXPECT_NO_THROW(PhysParams{}.validate());
  EXPECT_THROW(with(0, 1).validate(), ConfigError);
  EXPECT_THROW(with(1, 1, 1.0).validate(), ConfigError);
  EXPECT_THROW(with(1, -1).validate(), ConfigError);
}
