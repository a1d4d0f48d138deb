#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <heis/heis.hpp>

using namespace heis;

TEST(Classify, StationaryPointIsComplete) {
  const ClassificationReport r = classify_state({4, 2}, -6);
  EXPECT_EQ(r.branch, Branch::Stationary);
  EXPECT_EQ(r.verdict, Verdict::Complete);
  EXPECT_EQ(r.domain.lo.value, -inf);
  EXPECT_EQ(r.domain.hi.value, inf);
}

TEST(Classify, Sol1StateHasClosedFormHalfLine) {
  const ClassificationReport r = classify_state({-4, 6}, -6);
  EXPECT_EQ(r.branch, Branch::KZeroSol1);
  EXPECT_EQ(r.verdict, Verdict::Incomplete);
  EXPECT_EQ(r.domain.lo.provenance, Provenance::ClosedForm);
  EXPECT_NEAR(r.domain.lo.value, -2 * std::atanh(1.0 / 3) / 6, 1e-14);
  EXPECT_EQ(r.domain.hi.value, inf);
  EXPECT_TRUE(r.domain.lo.agrees());
}

TEST(Classify, GenericStateHasTwoFiniteEnds) {
  const ClassificationReport r = classify_state({1, 1}, -6);
  EXPECT_EQ(r.branch, Branch::GenericK);
  ASSERT_TRUE(r.K.has_value());
  EXPECT_NEAR(*r.K, 392000.0 / 9261, 1e-12);
  EXPECT_TRUE(r.domain.lo.finite());
  EXPECT_TRUE(r.domain.hi.finite());
  EXPECT_LT(r.domain.lo.value, 0);
  EXPECT_GT(r.domain.hi.value, 0);
  EXPECT_EQ(r.verdict, Verdict::Incomplete);
}

TEST(Classify, FlatStates) {
  const ClassificationReport hk = classify_state({-1, 1}, 0);
  EXPECT_EQ(hk.branch, Branch::HyperKahler);
  EXPECT_NEAR(hk.domain.lo.value, -2.0 / 3, 1e-12);
  EXPECT_EQ(hk.domain.hi.value, inf);
  const RicciFlatBranch br(3, 0, RicciFlatSheet::Upper, 1);
  const ClassificationReport rf = classify_state(ricci_flat_state(br, -1), 0);
  EXPECT_EQ(rf.branch, Branch::RicciFlatGeneric);
  EXPECT_NEAR(rf.domain.lo.value, -ricci_flat_offset(3) + 1, 1e-9);
  EXPECT_NEAR(rf.domain.hi.value, 1, 1e-9);
  EXPECT_TRUE(rf.domain.lo.agrees());
  EXPECT_TRUE(rf.domain.hi.agrees());
}

TEST(Classify, InadmissibleInputs) {
  EXPECT_EQ(classify_state({1, 1}, 2).branch, Branch::NoEinsteinMetric);
  const ClassificationReport nr = classify_state({6, 6}, -6);
  EXPECT_EQ(nr.branch, Branch::NonRiemannian);
  EXPECT_EQ(nr.verdict, Verdict::NotApplicable);
  EXPECT_THROW(completeness_verdict(nr), invalid_input);
  EXPECT_THROW(maximal_domain({6, 6}, -6), invalid_input);
  EXPECT_THROW(classify_state({NAN, 0}, -6), invalid_input);
}

TEST(Classify, ZeroKStatesLandOnNamedBranches) {
  // every K = 0 sample is recognized; only sol4 is complete
  for (auto v : {SigmaVariant::Sol1, SigmaVariant::Sol2, SigmaVariant::Sol3, SigmaVariant::Sol4})
    for (int sign : {1, -1})
      for (double t : {-1.2, -0.3, 0.4, 1.5}) {
        const LogDerivState s = sigma_branch_state(SigmaBranch(v, 0, sign), t);
        const ClassificationReport r = classify_state(s, -6);
        EXPECT_NE(r.branch, Branch::GenericK) << to_string(v) << " " << t;
        EXPECT_EQ(r.verdict == Verdict::Complete, v == SigmaVariant::Sol4) << to_string(v) << " " << t;
      }
}

TEST(Classify, UHMVerdictFollowsComponent) {
  ClassificationReport r;
  EXPECT_EQ(completeness_verdict(r, UHMFamily(1, 2)), Verdict::Complete);
  EXPECT_EQ(completeness_verdict(r, UHMFamily(1, -0.5)), Verdict::Incomplete);
  EXPECT_EQ(completeness_verdict(r, UHMFamily(-1, 3)), Verdict::Incomplete);
  EXPECT_EQ(classify_state(uhm_point_at_rho(1, 2).state, -6).verdict, Verdict::Complete);
  EXPECT_EQ(classify_state(uhm_point_at_rho(-1, 3).state, -6).verdict, Verdict::Incomplete);
}

TEST(Classify, RandomGenericStatesHaveFiniteEnds) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-8, 8);
  int n = 0;
  while (n < 25) {
    const LogDerivState s{u(rng), u(rng)};
    if (!(sign_quantity(s, -6) < 0)) continue;
    ++n;
    const ClassificationReport r = classify_state(s, -6);
    ASSERT_EQ(r.branch, Branch::GenericK);
    EXPECT_TRUE(r.domain.has_finite_endpoint());
    EXPECT_EQ(r.verdict, Verdict::Incomplete);
  }
}

TEST(Certificate, RangeOfK) {
  const double kmax = certificate_k_max();
  EXPECT_NEAR(kmax, (26 + 6 * std::sqrt(10.0)) / 3, 1e-15);
  EXPECT_TRUE(monotone_certificate(kmax, -6).valid());
  EXPECT_THROW(monotone_certificate(3, -6), invalid_input);
  EXPECT_THROW(monotone_certificate(kmax + 1e-6, -6), invalid_input);
  EXPECT_THROW(monotone_certificate(5, 0), invalid_input);
}

TEST(Certificate, DerivativeIdentity) {
  // df/dt = -h P² along the flow
  const MonotoneCertificate c = monotone_certificate(5, -6);
  for (LogDerivState s : {LogDerivState{1, 1}, LogDerivState{-3, 2}, LogDerivState{0.5, -4}}) {
    const FlowRhs f = flow_rhs(s, -6);
    const double P = p_lambda(s, -6);
    EXPECT_NEAR(c.df(s, f.dlambda, f.dmu), -c.h(s) * P * P, 1e-10 * (1 + std::abs(c.f(s))));
    EXPECT_GT(c.h(s), 0);
  }
}
