#include <gtest/gtest.h>

#include <cmath>

#include <heis/heis.hpp>

using namespace heis;

namespace {

// Flow consistency of a closed-form state curve: (λ, μ)' against flow_rhs.
template <class StateAt>
double flow_mismatch(StateAt state_at, double Lambda, double t, double h = 1e-5) {
  const LogDerivState p = state_at(t + h), m = state_at(t - h), s = state_at(t);
  const FlowRhs f = flow_rhs(s, Lambda);
  const double dl = (p.lambda - m.lambda) / (2 * h), dm = (p.mu - m.mu) / (2 * h);
  return std::max(std::abs(dl - f.dlambda), std::abs(dm - f.dmu)) / (1 + std::abs(f.dlambda) + std::abs(f.dmu));
}

}  // namespace

TEST(Stationary, ProfileAndLambda) {
  const StationaryFamily f(2, 1);
  EXPECT_EQ(f.Lambda(), -6);
  const MetricProfile p = stationary_profile(f);
  EXPECT_NEAR(p.a(0.5), std::exp(2.0), 1e-13);
  EXPECT_NEAR(p.b(0.5), std::exp(1.0), 1e-14);
  EXPECT_LT(einstein_residual(stationary_profile(StationaryFamily(-1, 3)), -1.5, {0.2, {1, 2, 3}}), 1e-10);
  EXPECT_THROW(StationaryFamily(0, 1), invalid_input);
  EXPECT_THROW(StationaryFamily(1, -1), invalid_input);
}

TEST(HyperKahler, FormsAreClosedAndSelfDualOfOneType) {
  const HyperKahlerStructure hk = hyperkahler_family(HyperKahlerFamily(2.0, -1));
  const SpacetimePoint p{-0.8, {0.3, 0.5, -0.2}};
  EXPECT_LT(einstein_residual(hk.profile, 0, p), 1e-10);
  const Mat4 g = metric_at(hk.profile, p);
  int selfdual = 0;
  for (const auto& w : hk.omega) {
    EXPECT_LT(exterior_derivative_fd(w, p, 1e-4), 1e-6);
    const Mat4 om = w(p), st = hodge_star(om, g);
    selfdual += max_abs(st - om) < 1e-10;
  }
  EXPECT_TRUE(selfdual == 0 || selfdual == 3);
  EXPECT_THROW(hyperkahler_profile(HyperKahlerFamily(2.0)).jet(-1), invalid_input);
}

TEST(HyperKahler, FormsAreOrthonormalQuaternionicTriple) {
  // ⟨ω_i, ω_j⟩ = 2 δ_ij with the metric on 2-forms
  const HyperKahlerStructure hk = hyperkahler_family(HyperKahlerFamily(1.5));
  const SpacetimePoint p{0.7, {0.1, -0.4, 0.3}};
  const Mat4 g = metric_at(hk.profile, p);
  const Mat4 gi = inverse(g);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const Mat4 a = hk.omega[i](p), b = hk.omega[j](p);
      double s = 0;
      for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n)
          for (int r = 0; r < 4; ++r)
            for (int q = 0; q < 4; ++q) s += 0.5 * gi[m][r] * gi[n][q] * a[m][n] * b[r][q];
      EXPECT_NEAR(s, i == j ? 2.0 : 0.0, 1e-12);
    }
}

TEST(RicciFlat, OffsetReferenceValues) {
  EXPECT_NEAR(ricci_flat_offset(0.5), 0.73495959933105515724, 1e-13);
  EXPECT_NEAR(ricci_flat_offset(1), 1.236049784867581279, 1e-13);
  EXPECT_NEAR(ricci_flat_offset(3), 2.8175842073530860878, 1e-13);
}

TEST(RicciFlat, DomainsAroundT0) {
  const double off = ricci_flat_offset(2), t0 = 1;
  const Interval lo_pos = ricci_flat_domain({2, t0, RicciFlatSheet::Lower, +1});
  EXPECT_NEAR(lo_pos.lo, t0 + off, 1e-14);
  EXPECT_EQ(lo_pos.hi, inf);
  const Interval up_neg = ricci_flat_domain({2, t0, RicciFlatSheet::Upper, -1});
  EXPECT_EQ(up_neg.lo, t0);
  EXPECT_NEAR(up_neg.hi, t0 + off, 1e-14);
}

TEST(RicciFlat, StatesFollowTheFlowAndKeepC) {
  for (auto sheet : {RicciFlatSheet::Upper, RicciFlatSheet::Lower})
    for (int sg : {1, -1}) {
      const RicciFlatBranch br(1.5, 0.2, sheet, sg);
      const Interval d = ricci_flat_domain(br);
      const double t = std::isfinite(d.lo) && std::isfinite(d.hi) ? 0.5 * (d.lo + d.hi)
                       : std::isfinite(d.lo)                       ? d.lo + 0.7
                                                                   : d.hi - 0.7;
      const auto at = [&](double u) { return ricci_flat_state(br, u); };
      EXPECT_LT(flow_mismatch(at, 0, t), 1e-7);
      EXPECT_NEAR(ricci_flat_C_of_state(at(t)), 1.5, 1e-10);
      EXPECT_LT(sign_quantity(at(t), 0), 0);
    }
}

TEST(RicciFlat, ProfileIsRicciFlat) {
  const RicciFlatBranch br(1, 0, RicciFlatSheet::Lower, +1);
  const double t = ricci_flat_offset(1) + 0.5;
  const MetricProfile p = ricci_flat_profile(br, t);
  EXPECT_NEAR(p.b(t), 1.0, 1e-14);
  EXPECT_LT(einstein_residual(p, 0, {t + 0.1, {0.2, 0.3, 0.4}}), 1e-8);
  EXPECT_LT(derivative_mismatch(p, t + 0.3), 1e-6);
}

TEST(UHM, ReferencePointAndQuartic) {
  const UHMPoint p = uhm_family(UHMFamily(1, 1), 0);
  EXPECT_NEAR(p.jet.a, 1.0 / 6, 1e-15);
  EXPECT_NEAR(p.jet.b, 1.5, 1e-15);
  EXPECT_NEAR(quartic_P(p.state), 0, 1e-12);
}

TEST(UHM, FlowConsistencyOnEachComponent) {
  for (const auto& [c, rho] : {std::pair{1.0, 2.0}, std::pair{1.0, -0.5}, std::pair{-1.0, 3.0}, std::pair{0.0, 1.0}}) {
    const UHMFamily f(c, rho, 0.3);
    const auto at = [&](double u) { return uhm_family(f, u).state; };
    EXPECT_LT(flow_mismatch(at, -6, 0.35), 1e-7) << c << " " << rho;
    EXPECT_NEAR(uhm_rho(f, 0.3), rho, 1e-12 * std::abs(rho));
  }
}

TEST(UHM, ZeroCIsTheStationaryPoint) {
  const UHMPoint p = uhm_family(UHMFamily(0, 2), 1.3);
  EXPECT_NEAR(p.state.lambda, -4, 1e-12);
  EXPECT_NEAR(p.state.mu, -2, 1e-12);
}

TEST(UHM, TimeDomainEndpoints) {
  // c > 0, ρ in ]-c, 0[: finite end where ρ reaches -c
  const Interval j = uhm_time_domain(UHMFamily(1, -0.5));
  EXPECT_TRUE(std::isfinite(j.hi));
  EXPECT_EQ(j.lo, -inf);
  const Interval k = uhm_time_domain(UHMFamily(-1, 3));
  EXPECT_TRUE(std::isfinite(k.lo));
  EXPECT_EQ(k.hi, inf);
  EXPECT_EQ(uhm_time_domain(UHMFamily(1, 2)).lo, -inf);
  EXPECT_THROW(UHMFamily(1, -2), invalid_input);
  EXPECT_THROW(uhm_point_at_rho(-1, 1), invalid_input);
}

TEST(UHM, ProfileSolvesTheSystem) {
  const MetricProfile p = uhm_profile(UHMFamily(1, 1));
  for (double t : {-0.5, 0.0, 0.4}) EXPECT_LT(einstein_residual(p, -6, {t, {0.1, 0.2, 0.3}}), 1e-8);
}

TEST(Sigma, SquaredSurdIdentities) {
  for (double u : {-0.9, -0.3, 0.2, 0.45, 0.7, 0.95}) {
    const SigmaCoord c = SigmaCoord::at(u);
    const double A = sigma::A(u), q = sigma::sqrtQ(c);
    EXPECT_NEAR(A * A - q * q, 128 * u * std::pow(u + 1, 3), 1e-10 * A * A);
    EXPECT_NEAR(sigma::A_minus_sqrtQ(c) * sigma::A_plus_sqrtQ(c), A * A - q * q, 1e-10 * A * A);
  }
}

TEST(Sigma, Sol2InvertsItsIntegral) {
  // ∫₀^0.3 -f1 = 0.69985483230802834659, so σ = 0.3 at s(t - t0) equal to it
  const double I = 0.69985483230802834659, s = 2;
  const LogDerivState st = sigma_branch_state(SigmaBranch(SigmaVariant::Sol2, 0, 1), I / s);
  EXPECT_NEAR(st.mu / st.lambda, 0.3, 1e-10);
}

TEST(Sigma, AllVariantsFollowTheFlowWithZeroK) {
  for (auto v : {SigmaVariant::Sol1, SigmaVariant::Sol2, SigmaVariant::Sol3, SigmaVariant::Sol4})
    for (int sign : {1, -1})
      for (double t : {-0.7, 0.5}) {
        const SigmaBranch br(v, 0.1, sign);
        const auto at = [&](double u) { return sigma_branch_state(br, u); };
        EXPECT_LT(flow_mismatch(at, -6, t), 1e-7) << to_string(v) << " " << sign << " " << t;
        const FlowInvariants inv = invariants(at(t), -6);
        ASSERT_TRUE(inv.K.has_value());
        EXPECT_NEAR(*inv.K, 0, 1e-7);
        EXPECT_LT(inv.sign_quantity, 0);
      }
}

TEST(Sigma, Sol4ProfileSolvesTheSystem) {
  const SigmaBranch br(SigmaVariant::Sol4, 0, 1);
  const MetricProfile p = sigma_branch_profile(br, Interval{}, 0);
  for (double t : {-1.0, 0.0, 2.0}) EXPECT_LT(einstein_residual(p, -6, {t, {0.1, 0.2, 0.3}}), 1e-8);
}

TEST(Sigma, Sol1DisplayedLambdaDisagreesWithTheRelation) {
  // state (-4, 6) lies on the upper sol1 sheet; the displayed λ gives 52/3
  const double t0 = -2 * std::atanh(2.0 / 6) / 6;
  const LogDerivState s = sigma_branch_state(SigmaBranch(SigmaVariant::Sol1, t0, 1), 0);
  EXPECT_NEAR(s.lambda, -4, 1e-12);
  EXPECT_NEAR(s.mu, 6, 1e-12);
  EXPECT_NEAR(sol1_displayed_lambda(-6, -t0, 1), 52.0 / 3, 1e-10);
}

TEST(RhoSigma, BranchesOfTheRatio) {
  EXPECT_GT(rho_of_sigma(1, 0.75), 0);
  EXPECT_LT(rho_of_sigma(1, 0.0) / 1, -2);
  // μ dt/dσ matches the ρ-side expression
  const RhoOfSigma r = rho_of_sigma_detail(2, 0.8);
  const double rhs = -(1 / r.rho) * ((r.rho + 8) / (r.rho + 4)) * r.drho_dsigma;
  EXPECT_NEAR(sigma_mu_dt_dsigma(SigmaVariant::Sol4, 0.8), rhs, 1e-10);
}

TEST(Sigma, IntegrandEndpointBehaviour) {
  // f1 ~ -1/√(3u) at 0; f1, f2 ~ -1/(√2(1-u)) at 1; f2 ~ √(u+1)/2 at -1; f2 ~ -1/(u-1/2) at 1/2
  const double d = 1e-7;
  EXPECT_NEAR(sigma::f1(d) * std::sqrt(3 * d), -1, 1e-6);
  EXPECT_NEAR(sigma::f1(SigmaCoord::below_one(d)) * std::sqrt(2.0) * d, -1, 1e-3);
  EXPECT_NEAR(sigma::f2(SigmaCoord::below_one(d)) * std::sqrt(2.0) * d, -1, 1e-3);
  EXPECT_NEAR(sigma::f2(-1 + d) / std::sqrt(d), 0.5, 1e-6);
  EXPECT_NEAR(sigma::f2(SigmaCoord::near_half(d)) * d, -1, 1e-5);
}
