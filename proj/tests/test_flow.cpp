#include <gtest/gtest.h>

#include <cmath>

#include <heis/heis.hpp>

using namespace heis;

TEST(Flow, RightHandSideMatchesEinsteinSystem) {
  // at the stationary point the flow vanishes and 4a/b² = 4
  const FlowRhs f = flow_rhs({4, 2}, -6);
  EXPECT_EQ(f.dlambda, 0);
  EXPECT_EQ(f.dmu, 0);
  EXPECT_EQ(f.ab_ratio, 4);
  // the profile residual of a reconstructed trajectory checks the rest
}

TEST(Flow, QuarticFactorEvolvesByMinusThreeMu) {
  for (double L : {-6.0, -1.0, 0.0})
    for (LogDerivState s : {LogDerivState{1, 1}, LogDerivState{-2.5, 0.7}, LogDerivState{3, -4}}) {
      const FlowRhs f = flow_rhs(s, L);
      const auto g = p_lambda_gradient(s, L);
      const double dP = g[0] * f.dlambda + g[1] * f.dmu;
      EXPECT_NEAR(dP, -3 * s.mu * p_lambda(s, L), 1e-10 * (1 + std::abs(dP)));
    }
}

TEST(Flow, KValueAtReferenceState) {
  const FlowInvariants inv = invariants({1, 1}, -6);
  ASSERT_TRUE(inv.K.has_value());
  EXPECT_NEAR(*inv.K, 392000.0 / 9261, 1e-12);
  EXPECT_EQ(inv.sign_quantity, -21);
}

TEST(Flow, StationaryTrajectoryIsConstant) {
  FlowParams p;
  p.Lambda = -6;
  const FlowTrajectory tr = integrate_flow({4, 2}, {0, 5}, p);
  EXPECT_EQ(tr.termination, Termination::Completed);
  EXPECT_EQ(tr.state_at(3.7), (LogDerivState{4, 2}));
  EXPECT_EQ(tr.max_K_drift, 0);
}

TEST(Flow, ConservesKAtTightTolerance) {
  FlowParams p;
  p.Lambda = -6;
  p.tolerance = 1e-10;
  const FlowTrajectory tr = integrate_flow({1, 1}, {0, 0.3}, p);
  EXPECT_LT(tr.K_drift_per_unit, 1e-8);
}

TEST(Flow, BlowUpIsDetectedInBothDirections) {
  FlowParams p;
  p.Lambda = -6;
  const FlowTrajectory fw = integrate_flow({1, 1}, {0, 5}, p);
  const FlowTrajectory bw = integrate_flow({1, 1}, {0, -5}, p);
  ASSERT_TRUE(fw.blowup_time().has_value());
  ASSERT_TRUE(bw.blowup_time().has_value());
  EXPECT_GT(*fw.blowup_time(), 0);
  EXPECT_LT(*bw.blowup_time(), 0);
  EXPECT_EQ(fw.termination, Termination::BlowUp);
}

TEST(Flow, RicciFlatBlowUpTimeOfHyperKahlerState) {
  // λ = -μ at Λ = 0: μ = 2/(3(t - t0)) blows up at t0
  FlowParams p;
  p.Lambda = 0;
  const FlowTrajectory tr = integrate_flow({-1, 1}, {0, -5}, p);
  ASSERT_TRUE(tr.blowup_time().has_value());
  EXPECT_NEAR(*tr.blowup_time(), -2.0 / 3, 1e-6);
}

TEST(Flow, RecordsMuZeroCrossing) {
  FlowParams p;
  p.Lambda = -6;
  const FlowTrajectory tr = integrate_flow({-4, 1}, {0, 2}, p);
  bool seen = false;
  for (const auto& e : tr.events)
    if (e.kind == EventKind::MuZero) {
      seen = true;
      EXPECT_NEAR(e.state.mu, 0, 1e-8);
    }
  EXPECT_TRUE(seen);
}

TEST(Flow, InputValidation) {
  FlowParams p;
  p.Lambda = -6;
  EXPECT_THROW(integrate_flow({NAN, 1}, {0, 1}, p), invalid_input);
  EXPECT_THROW(integrate_flow({1, 1}, {1, 1}, p), invalid_input);
  p.tolerance = 0;
  EXPECT_THROW(integrate_flow({1, 1}, {0, 1}, p), invalid_input);
}

TEST(Flow, ReconstructedProfileSolvesEinsteinSystem) {
  FlowParams p;
  p.Lambda = -6;
  p.tolerance = 1e-11;
  const FlowTrajectory tr = integrate_flow({1, 1}, {0, 0.2}, p);
  const MetricProfile prof = reconstruct_profile(tr);
  for (double t : {0.02, 0.1, 0.18}) {
    EXPECT_LT(full_system_residual(prof, -6, t), 1e-6);
    EXPECT_LT(einstein_residual(prof, -6, {t, {0.3, -0.1, 0.2}}), 1e-5);
  }
}

TEST(Flow, ReconstructRejectsNonRiemannianTrajectory) {
  FlowParams p;
  p.Lambda = -6;
  const FlowTrajectory tr = integrate_flow({6, 6}, {0, 0.01}, p);
  EXPECT_THROW(reconstruct_profile(tr), invalid_input);
}

TEST(Flow, FullSystemResidualOfLiteralProfile) {
  // the three equations give -18, -24, -12 at t = 0
  EXPECT_NEAR(full_system_residual(exponential_profile(1, 2, 1, 1), -6, 0), 24, 1e-12);
  EXPECT_LT(full_system_residual(exponential_profile(1, 4, 1, 2), -6, 0.3), 1e-12);
}

TEST(Flow, HomothetyOfTheUnitStationaryMember) {
  // μ = 1, C = 1 (Λ = -3/2) rescaled by k = 2 is the μ = 2, C = 1/4 member
  const MetricProfile h = homothety_rescale(stationary_profile(StationaryFamily(1, 1)), 2);
  const MetricProfile m = stationary_profile(StationaryFamily(2, 0.25));
  for (double t : {-0.4, 0.0, 0.9}) {
    EXPECT_NEAR(h.a(t) / m.a(t), 1, 1e-14);
    EXPECT_NEAR(h.b(t) / m.b(t), 1, 1e-14);
  }
  EXPECT_LT(einstein_residual(h, -6, {0.3, {0.1, 0.2, 0.3}}), 1e-9);
}

TEST(Flow, HomothetyScalesLambda) {
  const MetricProfile st = exponential_profile(1, 4, 1, 2);  // Λ = -6
  const MetricProfile r = homothety_rescale(st, 0.5);
  EXPECT_LT(einstein_residual(r, -1.5, {0.3, {0.2, 0.1, -0.4}}), 1e-12);
  EXPECT_THROW(homothety_rescale(st, 0), invalid_input);
}

TEST(FixedPoints, ScaleWithLambda) {
  for (double L : {-1.0, -6.0, -24.0}) {
    const double s = std::sqrt(-2 * L / 3);
    const auto fps = fixed_points_and_stability(L);
    ASSERT_EQ(fps.size(), 4u);
    EXPECT_NEAR(fps[0].state.lambda, 2 * s, 1e-14 * s);
    EXPECT_NEAR(fps[0].state.mu, s, 1e-14 * s);
    EXPECT_EQ(fps[0].stability, Stability::Saddle);
    EXPECT_NEAR(fps[2].state.lambda, std::sqrt(2.0) * s, 1e-14 * s);
    EXPECT_EQ(fps[2].stability, Stability::StableNode);
    EXPECT_EQ(fps[3].stability, Stability::UnstableNode);
    for (const auto& f : fps) {
      const FlowRhs r = flow_rhs(f.state, L);
      EXPECT_NEAR(r.dlambda, 0, 1e-12 * s * s);
      EXPECT_NEAR(r.dmu, 0, 1e-12 * s * s);
    }
  }
}

TEST(FixedPoints, RequireNegativeLambda) {
  EXPECT_THROW(fixed_points_and_stability(0), invalid_input);
  EXPECT_THROW(fixed_points_and_stability(3), invalid_input);
}
