#include <gtest/gtest.h>

#include <sstream>

#include <heis/heis.hpp>

using namespace heis;

TEST(Io, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(inf), "inf");
  EXPECT_EQ(format_double(-inf), "-inf");
  EXPECT_EQ(format_double(NAN), "nan");
}

TEST(Io, DescriptorsRoundTrip) {
  const std::vector<MetricProfile> profiles = {
      stationary_profile(StationaryFamily(2, 1)),
      hyperkahler_profile(HyperKahlerFamily(3)),
      uhm_profile(UHMFamily(1, 1)),
      ricci_flat_profile(RicciFlatBranch(1, 0, RicciFlatSheet::Lower, 1), 2),
      sigma_branch_profile(SigmaBranch(SigmaVariant::Sol4, 0, 1), Interval{}, 0),
      homothety_rescale(stationary_profile(StationaryFamily(2, 1)), 0.5),
  };
  for (const auto& p : profiles) {
    const nlohmann::json j = p.descriptor();
    ASSERT_FALSE(j.is_null());
    const MetricProfile q = profile_from_json(nlohmann::json::parse(j.dump()));
    const double t = std::isfinite(p.domain().lo) ? p.domain().lo + 1.0 : std::min(0.5, p.domain().hi - 1);
    EXPECT_EQ(p.a(t), q.a(t)) << j.dump();
    EXPECT_EQ(p.b(t), q.b(t)) << j.dump();
  }
}

TEST(Io, SampledAndExponentialDescriptors) {
  const nlohmann::json e = {{"kind", "exponential"}, {"params", {{"a0", 1}, {"alpha", 4}, {"b0", 1}, {"beta", 2}}}};
  EXPECT_LT(einstein_residual(profile_from_json(e), -6, {0.1, {0, 0, 0}}), 1e-10);
  nlohmann::json s = {{"kind", "sampled"}};
  for (int i = 0; i <= 40; ++i) {
    const double t = -1 + 0.05 * i;
    s["t"].push_back(t);
    s["a"].push_back(std::exp(4 * t));
    s["b"].push_back(std::exp(2 * t));
  }
  const MetricProfile p = profile_from_json(s);
  EXPECT_NEAR(p.a(0.0), 1.0, 1e-6);
  EXPECT_THROW(profile_from_json({{"kind", "nope"}}), invalid_input);
}

TEST(Io, TrajectoryTableIsDeterministic) {
  FlowParams fp;
  fp.Lambda = -6;
  auto render = [&](Format f) {
    std::ostringstream os;
    write_table(trajectory_table(integrate_flow({1, 1}, {0, 1}, fp)), f, os);
    return os.str();
  };
  const std::string csv = render(Format::Csv);
  EXPECT_EQ(csv, render(Format::Csv));
  EXPECT_EQ(csv.rfind("t,lambda,mu,P_lambda,K,sign_quantity\n", 0), 0u);
  EXPECT_NE(csv.find("# "), std::string::npos);
  const nlohmann::json j = nlohmann::json::parse(render(Format::Json));
  EXPECT_GT(j["records"].size(), 2u);
  EXPECT_FALSE(j["events"].empty());
}

TEST(Io, EmptyTableIsAnError) {
  std::ostringstream os;
  EXPECT_THROW(emit(Table{}, Format::Csv, "", os), invalid_input);
  EXPECT_THROW(format_from_string("xml"), invalid_input);
}

TEST(Io, ReportJson) {
  const nlohmann::ordered_json j = report_to_json(classify_state({-4, 6}, -6));
  EXPECT_EQ(j["branch"], "KZero(sol1)");
  EXPECT_EQ(j["verdict"], "Incomplete");
  EXPECT_EQ(j["endpoint_provenance"][0], "closed-form");
}
