#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "error.hpp"
#include "flow.hpp"
#include "forms.hpp"
#include "interval.hpp"
#include "ode.hpp"
#include "profile.hpp"
#include "specfun.hpp"

namespace heis {

// ---------------------------------------------------------------------------
// Shared helpers

// Profile from a closed-form state curve t -> (λ, μ, λ', μ'). b is obtained
// from ln_b(t) and a from 4a/b² = -(μ² + 2λμ + 4Λ).
struct StateJet {
  LogDerivState s;
  double dlambda = 0, dmu = 0;
  std::optional<double> sign_q;  // closed form, when the generic one cancels
};

inline MetricProfile profile_from_state_curve(Interval domain, double Lambda,
                                              std::function<StateJet(double)> state,
                                              std::function<double(double)> ln_b,
                                              nlohmann::json descriptor = nullptr) {
  return MetricProfile(
      domain,
      [Lambda, state = std::move(state), ln_b = std::move(ln_b)](double t) {
        const StateJet j = state(t);
        const double b = std::exp(ln_b(t));
        const double sq = j.sign_q ? *j.sign_q : sign_quantity(j.s, Lambda);
        const double a = -sq * b * b / 4;
        const double l = j.s.lambda, m = j.s.mu;
        return ProfileJet{a, l * a, (j.dlambda + l * l) * a, b, m * b, (j.dmu + m * m) * b};
      },
      std::move(descriptor));
}

namespace detail {

template <class F>
double solve_bracketed(F&& f, double lo, double hi, const char* what) {
  boost::uintmax_t iters = 200;
  auto tol = [](double x, double y) { return std::abs(x - y) <= 4 * std::numeric_limits<double>::epsilon() * std::max(std::abs(x), std::abs(y)) || std::abs(x - y) < 1e-300; };
  const double flo = f(lo), fhi = f(hi);
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if ((flo > 0) == (fhi > 0)) throw numerical_failure(std::string(what) + ": root not bracketed");
  auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  return 0.5 * (r.first + r.second);
}

inline double gk_integral(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
  if (a == b) return 0.0;
  double err = 0;
  const double v = specfun::detail::gk_adaptive<21>(f, a, b, 20, tol, &err, nullptr);
  if (!std::isfinite(v)) throw numerical_failure("quadrature produced a non-finite value");
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stationary solutions

struct StationaryFamily {
  double mu = 2;
  double C = 1;

  StationaryFamily(double mu_, double C_) : mu(mu_), C(C_) {
    if (mu == 0 || !std::isfinite(mu)) throw invalid_input("stationary family: μ must be nonzero");
    if (!(C > 0)) throw invalid_input("stationary family: C must be positive");
  }
  double Lambda() const { return -1.5 * mu * mu; }
  LogDerivState state() const { return {2 * mu, mu}; }
};

// b = C e^{μt}, a = -(Λ/6) b²
inline MetricProfile stationary_profile(const StationaryFamily& f) {
  const double mu = f.mu, C = f.C, k = -f.Lambda() / 6;
  nlohmann::json desc = {{"kind", "stationary"}, {"params", {{"mu", mu}, {"C", C}}}, {"domain", domain_to_json({})}};
  return MetricProfile(
      {},
      [=](double t) {
        const double b = C * std::exp(mu * t), a = k * b * b;
        return ProfileJet{a, 2 * mu * a, 4 * mu * mu * a, b, mu * b, mu * mu * b};
      },
      std::move(desc));
}

// ---------------------------------------------------------------------------
// Hyper-Kähler solutions: a = a1|t|^{-2/3}, b = b1|t|^{2/3}, a1 = b1²/9

struct HyperKahlerFamily {
  double b1 = 3;
  int halfline = +1;  // +1: t > 0, -1: t < 0

  HyperKahlerFamily(double b1_, int halfline_ = +1) : b1(b1_), halfline(halfline_) {
    if (!(b1 > 0) || !std::isfinite(b1)) throw invalid_input("hyper-Kähler family: b1 must be positive");
    if (halfline != 1 && halfline != -1) throw invalid_input("hyper-Kähler family: halfline must be ±1");
  }
  double a1() const { return b1 * b1 / 9; }
  Interval domain() const { return halfline > 0 ? Interval{0, inf} : Interval{-inf, 0}; }
};

struct HyperKahlerStructure {
  MetricProfile profile;
  std::array<TwoForm, 3> omega;
};

inline MetricProfile hyperkahler_profile(const HyperKahlerFamily& f) {
  const double a1 = f.a1(), b1 = f.b1;
  nlohmann::json desc = {{"kind", "hyperkahler"},
                         {"params", {{"b1", b1}, {"halfline", f.halfline}}},
                         {"domain", domain_to_json(f.domain())}};
  return MetricProfile(
      f.domain(),
      [a1, b1](double t) {
        const double s = std::abs(t), sg = t > 0 ? 1.0 : -1.0;
        const double a = a1 * std::pow(s, -2.0 / 3), b = b1 * std::pow(s, 2.0 / 3);
        // d/dt |t|^p = p sg |t|^{p-1}
        return ProfileJet{a, -2.0 / 3 * sg * a / s, 10.0 / 9 * a / (s * s),
                          b, 2.0 / 3 * sg * b / s, -2.0 / 9 * b / (s * s)};
      },
      std::move(desc));
}

// ω1 = √a dt∧e³ ± b dx∧dy, ω2 = √b dt∧dy ± √(ab) e³∧dx,
// ω3 = √b dt∧dx ± √(ab) dy∧e³ with e³ = dz + x dy - y dx and ± = sign(t).
inline HyperKahlerStructure hyperkahler_family(const HyperKahlerFamily& f) {
  MetricProfile prof = hyperkahler_profile(f);
  auto put = [](Mat4& w, int i, int j, double v) {
    w[i][j] += v;
    w[j][i] -= v;
  };
  HyperKahlerStructure hk{prof, {}};
  hk.omega[0] = [prof, put](const SpacetimePoint& p) {
    const ProfileJet j = prof.jet(p.t);
    const double sg = p.t > 0 ? 1.0 : -1.0, ra = std::sqrt(j.a);
    Mat4 w{};
    put(w, 0, 3, ra);
    put(w, 0, 2, ra * p.h.x);
    put(w, 0, 1, -ra * p.h.y);
    put(w, 1, 2, sg * j.b);
    return w;
  };
  hk.omega[1] = [prof, put](const SpacetimePoint& p) {
    const ProfileJet j = prof.jet(p.t);
    const double sg = p.t > 0 ? 1.0 : -1.0, rab = std::sqrt(j.a * j.b);
    Mat4 w{};
    put(w, 0, 2, std::sqrt(j.b));
    put(w, 3, 1, sg * rab);
    put(w, 2, 1, sg * rab * p.h.x);
    return w;
  };
  hk.omega[2] = [prof, put](const SpacetimePoint& p) {
    const ProfileJet j = prof.jet(p.t);
    const double sg = p.t > 0 ? 1.0 : -1.0, rab = std::sqrt(j.a * j.b);
    Mat4 w{};
    put(w, 0, 1, std::sqrt(j.b));
    put(w, 2, 3, sg * rab);
    put(w, 1, 2, sg * rab * p.h.y);
    return w;
  };
  return hk;
}

// ---------------------------------------------------------------------------
// Generic Ricci-flat solutions (Λ = 0)

// C = -(2ν+1)/((ν+1)²|μ|^{4/3}), ν = λ/μ
inline double ricci_flat_C_of_state(const LogDerivState& s) {
  if (s.mu == 0) throw invalid_input("ricci_flat_C_of_state: μ = 0");
  const double nu = s.lambda / s.mu;
  if (std::abs(nu + 1) <= 1e-14) throw invalid_input("ricci_flat_C_of_state: ν = -1 is the hyper-Kähler limit (C = +∞)");
  return -(2 * nu + 1) / ((nu + 1) * (nu + 1) * std::pow(std::abs(s.mu), 4.0 / 3));
}

enum class RicciFlatSheet { Upper, Lower };

struct RicciFlatBranch {
  double C = 1;
  double t0 = 0;
  RicciFlatSheet branch = RicciFlatSheet::Lower;
  int mu_sign = +1;

  RicciFlatBranch(double C_, double t0_, RicciFlatSheet br, int mu_sign_)
      : C(C_), t0(t0_), branch(br), mu_sign(mu_sign_) {
    if (!(C > 0) || !std::isfinite(C)) throw invalid_input("Ricci-flat branch: C must be positive");
    if (mu_sign != 1 && mu_sign != -1) throw invalid_input("Ricci-flat branch: mu_sign must be ±1");
  }
};

// (2C^{3/4}/(3√π)) Γ(1/4) Γ(5/4)
inline double ricci_flat_offset(double C) {
  using specfun::gamma_fn;
  return 2 * std::pow(C, 0.75) / (3 * gamma_fn(0.5)) * gamma_fn(0.25) * gamma_fn(1.25);
}

inline Interval ricci_flat_domain(const RicciFlatBranch& br) {
  const double off = ricci_flat_offset(br.C), t0 = br.t0;
  if (br.branch == RicciFlatSheet::Lower) return br.mu_sign > 0 ? Interval{t0 + off, inf} : Interval{-inf, t0 - off};
  return br.mu_sign > 0 ? Interval{t0 - off, t0} : Interval{t0, t0 + off};
}

namespace detail {

// (2/(3μ))(1 + κF(-C|μ|^{4/3})) with κ = +1 on the lower sheet, -1 on the upper.
struct RicciFlatRelation {
  double C;
  double kappa;
  specfun::Hyp2F1Params P{};

  double x_of(double m) const { return -C * std::pow(m, 4.0 / 3); }

  double H(double m) const {
    const double x = x_of(m);
    if (kappa < 0 && std::abs(x) <= 0.5) return -specfun::hyp2f1_series_tail(P, x);
    return 1 + kappa * specfun::hyp2f1_shifted(P, x);
  }

  // G as a function of μ = sg·m
  double G(double sg, double m) const { return 2.0 / (3 * sg * m) * H(m); }

  double dG(double sg, double m) const {
    const double mu = sg * m, x = x_of(m);
    const double dx = -4.0 / 3 * C * std::cbrt(m) * sg;
    const double dH = kappa * specfun::hyp2f1_derivative(P, x) * dx;
    return 2.0 / 3 * (-H(m) / (mu * mu) + dH / mu);
  }
};

struct RicciFlatLambda {
  double lambda, dlambda_dmu;
};

// λ = εμr/(1 - εr), r = √(1 + C|μ|^{4/3}), ε = +1 upper, -1 lower
inline RicciFlatLambda ricci_flat_lambda(double C, RicciFlatSheet sheet, double mu) {
  const double m = std::abs(mu), sg = mu > 0 ? 1.0 : -1.0;
  const double q = C * std::pow(m, 4.0 / 3);
  const double r = std::sqrt(1 + q);
  const double eps = sheet == RicciFlatSheet::Upper ? 1.0 : -1.0;
  const double den = eps > 0 ? -q / (1 + r) : 1 + r;  // 1 - εr without cancellation
  const double dr = 4.0 / 3 * C * std::cbrt(m) * sg / (2 * r);
  return {eps * mu * r / den, eps * (r / den + mu * dr / (den * den))};
}

}  // namespace detail

inline LogDerivState ricci_flat_state(const RicciFlatBranch& br, double t) {
  const Interval dom = ricci_flat_domain(br);
  if (!dom.contains(t)) throw invalid_input("ricci_flat_state: t outside the maximal domain");
  const detail::RicciFlatRelation rel{br.C, br.branch == RicciFlatSheet::Lower ? 1.0 : -1.0};
  const double sg = br.mu_sign, target = t - br.t0;
  auto f = [&](double y) { return rel.G(sg, std::exp(y)) - target; };
  // G is monotone in ln|μ|; widen a bracket around 0.
  double lo = -1, hi = 1;
  double flo = f(lo), fhi = f(hi);
  for (int i = 0; i < 80 && (flo > 0) == (fhi > 0); ++i) {
    if (std::abs(flo) < std::abs(fhi)) {
      lo -= (hi - lo);
      flo = f(lo);
    } else {
      hi += (hi - lo);
      fhi = f(hi);
    }
    if (lo < -200 || hi > 200) break;
  }
  if ((flo > 0) == (fhi > 0)) throw numerical_failure("ricci_flat_state: could not bracket μ");
  const double y = detail::solve_bracketed(f, lo, hi, "ricci_flat_state");
  const double mu = sg * std::exp(y);
  return {detail::ricci_flat_lambda(br.C, br.branch, mu).lambda, mu};
}

// (λ', μ') from the closed form: μ' = 1/G'(μ), λ' = (dλ/dμ) μ'.
inline StateJet ricci_flat_jet(const RicciFlatBranch& br, double t) {
  const LogDerivState s = ricci_flat_state(br, t);
  const detail::RicciFlatRelation rel{br.C, br.branch == RicciFlatSheet::Lower ? 1.0 : -1.0};
  const double sg = br.mu_sign, m = std::abs(s.mu);
  const double dmu = 1.0 / rel.dG(sg, m);
  const auto lam = detail::ricci_flat_lambda(br.C, br.branch, s.mu);
  return {s, lam.dlambda_dmu * dmu, dmu, std::nullopt};
}

// b(t_ref) = 1; ln b(t) = ∫ μ dt = ∫ μ G'(μ) dμ.
inline MetricProfile ricci_flat_profile(const RicciFlatBranch& br, double t_ref) {
  const Interval dom = ricci_flat_domain(br);
  if (!dom.contains(t_ref)) throw invalid_input("ricci_flat_profile: t_ref outside the domain");
  const double mu_ref = ricci_flat_state(br, t_ref).mu;
  const detail::RicciFlatRelation rel{br.C, br.branch == RicciFlatSheet::Lower ? 1.0 : -1.0};
  nlohmann::json desc = {{"kind", "ricciflat"},
                         {"params",
                          {{"C", br.C},
                           {"t0", br.t0},
                           {"branch", br.branch == RicciFlatSheet::Upper ? "upper" : "lower"},
                           {"mu_sign", br.mu_sign},
                           {"t_ref", t_ref}}},
                         {"domain", domain_to_json(dom)}};
  return profile_from_state_curve(
      dom, 0.0, [br](double t) { return ricci_flat_jet(br, t); },
      [br, rel, mu_ref](double t) {
        const double mu = ricci_flat_state(br, t).mu, sg = br.mu_sign;
        // integrate in ln|μ| to keep the range compact
        return detail::gk_integral(
            [&](double y) {
              const double m = std::exp(y);
              return m * m * rel.dG(sg, m);
            },
            std::log(std::abs(mu_ref)), std::log(std::abs(mu)), 1e-11);
      },
      std::move(desc));
}

// ---------------------------------------------------------------------------
// One-loop deformed universal hypermultiplet (Λ = -6)

struct UHMFamily {
  double c = 1;
  double t_ref = 0;
  double rho_ref = 1;

  UHMFamily(double c_, double rho_ref_, double t_ref_ = 0) : c(c_), t_ref(t_ref_), rho_ref(rho_ref_) {
    if (!std::isfinite(c) || !std::isfinite(rho_ref) || !std::isfinite(t_ref))
      throw invalid_input("UHM family: parameters must be finite");
    if (!admissible(rho_ref))
      throw invalid_input("UHM family: ρ_ref must satisfy ρ ≠ 0, ρ + c > 0, ρ + 2c > 0");
  }

  static constexpr double Lambda() { return -6.0; }

  bool admissible(double rho) const { return rho != 0 && rho + c > 0 && rho + 2 * c > 0; }

  // Connected component of {ρ ≠ 0, ρ+c > 0, ρ+2c > 0} containing ρ_ref.
  Interval rho_interval() const {
    if (c > 0) return rho_ref > 0 ? Interval{0, inf} : Interval{-c, 0};
    if (c < 0) return Interval{-2 * c, inf};
    return Interval{0, inf};
  }

  bool positive_component() const { return rho_ref > 0 && c >= 0; }
};

struct UHMPoint {
  double rho = 0;
  ProfileJet jet;
  LogDerivState state;
  double dlambda = 0, dmu = 0;
};

namespace detail {

// All quantities at a given ρ with ρ' = 2ρ√((ρ+c)/(ρ+2c)).
inline UHMPoint uhm_at_rho(double c, double rho) {
  const double u = rho + c, v = rho + 2 * c;
  const double w = std::sqrt(u / v);
  const double drho = 2 * rho * w;
  const double gl = rho / u - 2 - rho / v, gm = -(rho + 4 * c) / v;
  const double dw = c / (2 * w * v * v);
  const double dgl = c / (u * u) - 2 * c / (v * v), dgm = 2 * c / (v * v);
  UHMPoint p;
  p.rho = rho;
  p.state = {2 * w * gl, 2 * w * gm};
  p.dlambda = 2 * (dw * gl + w * dgl) * drho;
  p.dmu = 2 * (dw * gm + w * dgm) * drho;
  const double a = u / (4 * rho * rho * v), b = v / (2 * rho * rho);
  const double l = p.state.lambda, m = p.state.mu;
  p.jet = {a, l * a, (p.dlambda + l * l) * a, b, m * b, (p.dmu + m * m) * b};
  return p;
}

inline double uhm_dt_drho(double c, double r) { return 1.0 / (2 * r * std::sqrt((r + c) / (r + 2 * c))); }

}  // namespace detail

// Maximal t-interval J on which ρ(t) stays in the component.
inline Interval uhm_time_domain(const UHMFamily& f) {
  const double c = f.c;
  if (c > 0 && f.rho_ref < 0) {
    // ρ decreases towards -c, reached at finite time.
    specfun::SingularIntegrand g{[c](double r) { return -detail::uhm_dt_drho(c, r); }, {{-c, -0.5}}};
    return {-inf, f.t_ref + specfun::singular_quad(g, -c, f.rho_ref, 1e-12)};
  }
  if (c < 0) {
    specfun::SingularIntegrand g{[c](double r) { return detail::uhm_dt_drho(c, r); }, {{-2 * c, 0.5}}};
    return {f.t_ref - specfun::singular_quad(g, -2 * c, f.rho_ref, 1e-12), inf};
  }
  return {};
}

inline double uhm_rho(const UHMFamily& f, double t) {
  if (f.c == 0) return f.rho_ref * std::exp(2 * (t - f.t_ref));
  const Interval J = uhm_time_domain(f);
  if (!J.contains(t)) throw invalid_input("uhm_family: t outside the maximal interval J");
  if (t == f.t_ref) return f.rho_ref;
  const double c = f.c, sg = f.rho_ref > 0 ? 1.0 : -1.0;
  // y = ln|ρ|, y' = 2√((ρ+c)/(ρ+2c))
  auto rhs = [c, sg](double, const ode::Vec<1>& y) {
    const double r = sg * std::exp(y[0]);
    return ode::Vec<1>{2 * std::sqrt((r + c) / (r + 2 * c))};
  };
  double y = std::log(std::abs(f.rho_ref));
  ode::Options opt;
  opt.rtol = 1e-13;
  opt.atol = 1e-13;
  auto r = ode::integrate<1>(rhs, f.t_ref, {y}, t, opt, [&y](const ode::DenseStep<1>& st) {
    y = st.value(st.t1())[0];
    return true;
  });
  if (r.status != ode::Status::Reached) throw numerical_failure("uhm_family: ρ integration failed");
  const double rho = sg * std::exp(y);
  if (!f.rho_interval().contains(rho)) throw numerical_failure("uhm_family: ρ left its component");
  return rho;
}

// UHM quantities directly at ρ (no time parametrisation).
inline UHMPoint uhm_point_at_rho(double c, double rho) {
  if (!(rho != 0 && rho + c > 0 && rho + 2 * c > 0))
    throw invalid_input("uhm_point_at_rho: ρ must satisfy ρ ≠ 0, ρ + c > 0, ρ + 2c > 0");
  return detail::uhm_at_rho(c, rho);
}

inline UHMPoint uhm_family(const UHMFamily& f, double t) {
  return detail::uhm_at_rho(f.c, uhm_rho(f, t));
}

inline MetricProfile uhm_profile(const UHMFamily& f) {
  nlohmann::json desc = {{"kind", "uhm"},
                         {"params", {{"c", f.c}, {"rho_ref", f.rho_ref}, {"t_ref", f.t_ref}}},
                         {"domain", domain_to_json(uhm_time_domain(f))}};
  return MetricProfile(uhm_time_domain(f), [f](double t) { return uhm_family(f, t).jet; }, std::move(desc));
}

// Quartic constraint at Λ = -6.
inline double quartic_P(const LogDerivState& s) {
  const double l = s.lambda, m = s.mu, lm = l + m;
  return lm * lm * lm * m - 4 * (3 * l * l + 18 * l * m + 11 * m * m) + 512;
}

// ---------------------------------------------------------------------------
// K = 0 branches

enum class SigmaVariant { Sol1, Sol2, Sol3, Sol4 };

inline const char* to_string(SigmaVariant v) {
  switch (v) {
    case SigmaVariant::Sol1: return "sol1";
    case SigmaVariant::Sol2: return "sol2";
    case SigmaVariant::Sol3: return "sol3";
    case SigmaVariant::Sol4: return "sol4";
  }
  return "?";
}

// sign: sol1 upper (+1, μ = s coth) or lower (-1, μ = s tanh); sol4 the
// sign of λ. sol2 and sol3 cover both half-lines with one formula, sign is
// unused there.
struct SigmaBranch {
  SigmaVariant variant = SigmaVariant::Sol4;
  double t0 = 0;
  int sign = +1;
  double Lambda = -6;

  SigmaBranch(SigmaVariant v, double t0_, int sign_, double Lambda_ = -6)
      : variant(v), t0(t0_), sign(sign_), Lambda(Lambda_) {
    if (!(Lambda < 0)) throw invalid_input("σ-branch: needs Λ < 0");
    if (sign != 1 && sign != -1) throw invalid_input("σ-branch: sign must be ±1");
    if (!std::isfinite(t0)) throw invalid_input("σ-branch: t0 must be finite");
  }
  double s() const { return std::sqrt(-2 * Lambda / 3); }
};

// σ together with the exact offsets 1-σ and 2σ-1, so that the integrands
// can be evaluated close to σ = 1 and σ = 1/2 without cancellation.
struct SigmaCoord {
  double sigma = 0;
  double one_minus = 1;  // 1 - σ
  double twice_minus_one = -1;  // 2σ - 1

  static SigmaCoord at(double s) { return {s, 1 - s, 2 * s - 1}; }
  static SigmaCoord below_one(double d) { return {1 - d, d, 1 - 2 * d}; }
  static SigmaCoord near_half(double e) { return {0.5 + e, 0.5 - e, 2 * e}; }
};

namespace sigma {

inline double A(double u) { return 3 + 18 * u + 11 * u * u; }
inline double sqrtQ(const SigmaCoord& c) {
  return std::pow(c.one_minus, 1.5) * std::sqrt(9 + 7 * c.sigma);
}

// A ∓ √Q; A² - Q = 128u(u+1)³
inline double A_minus_sqrtQ(const SigmaCoord& c) {
  const double a = A(c.sigma), q = sqrtQ(c), u = c.sigma;
  if (a > 0) return 128 * u * std::pow(u + 1, 3) / (a + q);
  return a - q;
}
inline double A_plus_sqrtQ(const SigmaCoord& c) {
  const double a = A(c.sigma), q = sqrtQ(c), u = c.sigma;
  if (a < 0) return 128 * u * std::pow(u + 1, 3) / (a - q);
  return a + q;
}

// D∓ = P ∓ R with P = (1-u)(1-5u)(9+7u), R = 3(1+3u)√Q and
// P² - R² = 128u(1-u)²(u+1)(2u-1)(7u+9).
inline double D_minus(const SigmaCoord& c) {
  const double u = c.sigma, w = c.one_minus;
  const double P = w * (1 - 5 * u) * (9 + 7 * u), R = 3 * (1 + 3 * u) * sqrtQ(c);
  if (P * R > 0) return 128 * u * w * w * (u + 1) * c.twice_minus_one * (7 * u + 9) / (P + R);
  return P - R;
}
inline double D_plus(const SigmaCoord& c) {
  const double u = c.sigma, w = c.one_minus;
  const double P = w * (1 - 5 * u) * (9 + 7 * u), R = 3 * (1 + 3 * u) * sqrtQ(c);
  if (P * R < 0) return 128 * u * w * w * (u + 1) * c.twice_minus_one * (7 * u + 9) / (P - R);
  return P + R;
}

// Integrands of the separated σ equations.
inline double f1(const SigmaCoord& c) { return 8 * std::sqrt(A_minus_sqrtQ(c)) / D_minus(c); }
inline double f2(const SigmaCoord& c) { return 8 * std::sqrt(A_plus_sqrtQ(c)) / D_plus(c); }
inline double f1(double u) { return f1(SigmaCoord::at(u)); }
inline double f2(double u) { return f2(SigmaCoord::at(u)); }

// d/dσ of (A ∓ √Q)
inline double dA(double u) { return 18 + 22 * u; }
inline double dsqrtQ(const SigmaCoord& c) {
  return -2 * std::sqrt(c.one_minus) * (5 + 7 * c.sigma) / std::sqrt(9 + 7 * c.sigma);
}

}  // namespace sigma

namespace detail {

// Primitive of an integrand g along a variant's σ-range. With
// weighted = true the anchor is the t = t0 end of sol2/sol3 and its
// algebraic endpoint behaviour is passed to the quadrature; otherwise the
// anchor is σ = 0 (sol2, sol3) and g must be regular there. sol4 is anchored
// at σ = 3/4.
struct SigmaIntegral {
  SigmaVariant v;
  std::function<double(const SigmaCoord&)> g;
  bool weighted = true;

  static SigmaIntegral separated(SigmaVariant v) {
    if (v == SigmaVariant::Sol2) return {v, [](const SigmaCoord& c) { return -sigma::f1(c); }, true};
    return {v, [](const SigmaCoord& c) { return sigma::f2(c); }, true};
  }

  double from_anchor(const SigmaCoord& c) const {
    using specfun::SingularIntegrand;
    auto plain = [this](double u) { return g(SigmaCoord::at(u)); };
    const double tol = 1e-13;
    auto head = [&](double lo, double alpha, double hi) {
      if (lo == hi) return 0.0;
      if (!weighted) return detail::gk_integral(plain, lo, hi, tol);
      return specfun::singular_quad(SingularIntegrand{plain, {{lo, alpha}}}, lo, hi, tol);
    };
    switch (v) {
      case SigmaVariant::Sol2: {
        // anchor 0 (|u|^{-1/2}); logarithmic growth at 1
        if (c.sigma <= 0.5) return head(0.0, -0.5, c.sigma);
        return head(0.0, -0.5, 0.5) + log_tail_below_one(0.5, c.one_minus);
      }
      case SigmaVariant::Sol3: {
        // anchor -1 (|u+1|^{1/2}); logarithmic growth at 1/2
        const double lo = weighted ? -1.0 : 0.0;
        if (c.sigma <= 0) return weighted ? head(-1.0, 0.5, c.sigma) : detail::gk_integral(plain, 0.0, c.sigma, tol);
        return head(lo, 0.5, 0.0) + log_tail_half(-0.5, -0.5 * c.twice_minus_one);
      }
      case SigmaVariant::Sol4: {
        if (c.sigma >= 0.625 && c.sigma <= 0.875) return detail::gk_integral(plain, 0.75, c.sigma, tol);
        if (c.sigma > 0.875) return detail::gk_integral(plain, 0.75, 0.875, tol) + log_tail_below_one(0.125, c.one_minus);
        return -detail::gk_integral(plain, 0.625, 0.75, tol) + log_tail_half(0.125, 0.5 * c.twice_minus_one);
      }
      default: break;
    }
    throw invalid_input("σ integral: sol1 has no σ integral");
  }

  // ∫ from σ = 1-d0 to σ = 1-d of g, with σ = 1 - e^{-v}.
  double log_tail_below_one(double d0, double d) const {
    return detail::gk_integral(
        [this](double vv) {
          const double e = std::exp(-vv);
          return g(SigmaCoord::below_one(e)) * e;
        },
        -std::log(d0), -std::log(d), 1e-13);
  }

  // With σ = 1/2 + e: ∫ from e0 to e (both of the same sign) of g, using
  // e = ±exp(-v).
  double log_tail_half(double e0, double e) const {
    const double sg = e0 > 0 ? 1.0 : -1.0;
    const double I = detail::gk_integral(
        [this, sg](double vv) {
          const double ee = std::exp(-vv);
          return g(SigmaCoord::near_half(sg * ee)) * ee;
        },
        -std::log(std::abs(e0)), -std::log(std::abs(e)), 1e-13);
    // dσ = -sg e^{-v} dv
    return -sg * I;
  }
};

// Inverts from_anchor(σ) = target along the branch's σ-range. Search uses
// coordinates in which σ keeps full precision near the divergent end.
inline SigmaCoord invert_sigma_integral(SigmaVariant v, double target) {
  const SigmaIntegral I = SigmaIntegral::separated(v);
  auto root_in = [&](auto&& coord, double lo, double hi) {
    auto f = [&](double q) { return I.from_anchor(coord(q)) - target; };
    double flo = f(lo), fhi = f(hi);
    // widen the far end (it is a log coordinate) until bracketed
    for (int i = 0; i < 60 && (flo > 0) == (fhi > 0); ++i) {
      hi = hi * 2 + 1;
      fhi = f(hi);
    }
    if ((flo > 0) == (fhi > 0)) throw numerical_failure("σ-branch: t too far from t0 to resolve σ");
    return coord(detail::solve_bracketed(f, lo, hi, "σ-branch inversion"));
  };
  switch (v) {
    case SigmaVariant::Sol2: {
      const double mid = I.from_anchor(SigmaCoord::at(0.5));
      if (target <= mid) {
        if (target <= 0) throw invalid_input("σ-branch: t equals t0");
        return root_in([](double s) { return SigmaCoord::at(s); }, 0.0, 0.5);
      }
      return root_in([](double vv) { return SigmaCoord::below_one(std::exp(-vv)); }, std::log(2.0), 40.0);
    }
    case SigmaVariant::Sol3: {
      const double mid = I.from_anchor(SigmaCoord::at(0.0));
      if (target <= mid) {
        if (target <= 0) throw invalid_input("σ-branch: t equals t0");
        return root_in([](double s) { return SigmaCoord::at(s); }, -1.0, 0.0);
      }
      return root_in([](double vv) { return SigmaCoord::near_half(-std::exp(-vv)); }, std::log(2.0), 40.0);
    }
    case SigmaVariant::Sol4: {
      const double up = I.from_anchor(SigmaCoord::at(0.875)), dn = I.from_anchor(SigmaCoord::at(0.625));
      if (target >= up && target <= dn) {
        auto f = [&](double s) { return I.from_anchor(SigmaCoord::at(s)) - target; };
        // g < 0 on ]1/2, 1[, so from_anchor decreases in σ
        return SigmaCoord::at(detail::solve_bracketed(f, 0.625, 0.875, "σ-branch inversion"));
      }
      if (target < dn)
        return root_in([](double vv) { return SigmaCoord::below_one(std::exp(-vv)); }, std::log(8.0), 40.0);
      return root_in([](double vv) { return SigmaCoord::near_half(std::exp(-vv)); }, std::log(8.0), 40.0);
    }
    default: break;
  }
  throw invalid_input("σ-branch: sol1 has no σ integral");
}

}  // namespace detail

inline std::vector<Interval> sigma_branch_domains(const SigmaBranch& br) {
  if (br.variant == SigmaVariant::Sol4) return {Interval{}};
  return {Interval{-inf, br.t0}, Interval{br.t0, inf}};
}

struct SigmaState {
  StateJet jet;
  std::optional<SigmaCoord> coord;  // empty for sol1
};

inline SigmaState sigma_branch_detail(const SigmaBranch& br, double t) {
  if (!std::isfinite(t)) throw invalid_input("σ-branch: t must be finite");
  const double s = br.s(), dt = t - br.t0;
  SigmaState out;
  if (br.variant == SigmaVariant::Sol1) {
    if (dt == 0) throw invalid_input("σ-branch sol1: t = t0 is excluded");
    const double X = std::sqrt(-6 * br.Lambda) * dt, k = 1.5 * s;  // dX/dt / 2
    double mu, dmu;
    if (br.sign > 0) {
      const double sh = std::sinh(X / 2);
      mu = s / std::tanh(X / 2);
      dmu = -s * k / (sh * sh);
    } else {
      const double ch = std::cosh(X / 2);
      mu = s * std::tanh(X / 2);
      dmu = s * k / (ch * ch);
    }
    const double lambda = -mu - 2 * br.Lambda / mu;
    out.jet = {{lambda, mu}, dmu * (-1 + 2 * br.Lambda / (mu * mu)), dmu, -mu * mu};
    return out;
  }
  SigmaCoord c;
  double lam_sign;
  bool upper_root;
  double dsigma;
  switch (br.variant) {
    case SigmaVariant::Sol2:
      if (dt == 0) throw invalid_input("σ-branch sol2: t = t0 is excluded");
      c = detail::invert_sigma_integral(SigmaVariant::Sol2, s * std::abs(dt));
      lam_sign = dt > 0 ? 1 : -1;
      upper_root = true;
      dsigma = -s * lam_sign / sigma::f1(c);
      break;
    case SigmaVariant::Sol3:
      if (dt == 0) throw invalid_input("σ-branch sol3: t = t0 is excluded");
      c = detail::invert_sigma_integral(SigmaVariant::Sol3, s * std::abs(dt));
      lam_sign = dt > 0 ? -1 : 1;
      upper_root = false;
      dsigma = s * (dt > 0 ? 1 : -1) / sigma::f2(c);
      break;
    default:
      // ∫_{3/4}^σ ∓f2 = s(t - t0)  ⇒  ∫_{3/4}^σ f2 = ∓ s (t - t0)
      c = detail::invert_sigma_integral(SigmaVariant::Sol4, -br.sign * s * dt);
      lam_sign = br.sign;
      upper_root = false;
      dsigma = -br.sign * s / sigma::f2(c);
      break;
  }
  const double base = upper_root ? sigma::A_minus_sqrtQ(c) : sigma::A_plus_sqrtQ(c);
  const double lambda = lam_sign * 8 * s / std::sqrt(base);
  const double dbase = sigma::dA(c.sigma) + (upper_root ? -1 : 1) * sigma::dsqrtQ(c);
  const double dl_dsigma = -0.5 * lambda * dbase / base;
  const double dlambda = dl_dsigma * dsigma;
  // μ² + 2λμ + 4Λ = -s²(2(1-σ)(9-σ) ± 6√Q)/(A ± √Q)
  const double sq = -s * s * (2 * c.one_minus * (9 - c.sigma) + (upper_root ? -6 : 6) * sigma::sqrtQ(c)) / base;
  out.jet = {{lambda, lambda * c.sigma}, dlambda, dlambda * c.sigma + lambda * dsigma, sq};
  out.coord = c;
  return out;
}

inline LogDerivState sigma_branch_state(const SigmaBranch& br, double t) { return sigma_branch_detail(br, t).jet.s; }

// dt/dσ along the branch (sol2/sol3/sol4), as a function of σ alone up to the
// half-line: the product μ dt/dσ does not depend on it.
inline double sigma_mu_dt_dsigma(SigmaVariant v, double sigma_value) {
  const SigmaCoord c = SigmaCoord::at(sigma_value);
  if (v == SigmaVariant::Sol2) return -64 * sigma_value / sigma::D_minus(c);
  if (v == SigmaVariant::Sol1) throw invalid_input("sol1 is not parametrised by σ");
  return -64 * sigma_value / sigma::D_plus(c);
}

// λ along a σ-branch as a function of σ (sign of λ given).
inline double sigma_lambda(SigmaVariant v, double sigma_value, double lam_sign, double Lambda) {
  const double s = std::sqrt(-2 * Lambda / 3);
  const SigmaCoord c = SigmaCoord::at(sigma_value);
  const double base = v == SigmaVariant::Sol2 ? sigma::A_minus_sqrtQ(c) : sigma::A_plus_sqrtQ(c);
  return lam_sign * 8 * s / std::sqrt(base);
}

// Profile on one maximal interval (or a sub-interval), b(t_ref) = 1.
inline MetricProfile sigma_branch_profile(const SigmaBranch& br, Interval dom, double t_ref) {
  bool inside = false;
  for (const auto& d : sigma_branch_domains(br))
    inside = inside || (dom.lo >= d.lo && dom.hi <= d.hi);
  if (!inside) throw invalid_input("σ-branch profile: interval is not inside a maximal domain");
  if (!dom.contains(t_ref)) throw invalid_input("σ-branch profile: t_ref outside the interval");
  nlohmann::json desc = {{"kind", "sigma"},
                         {"params", {{"variant", to_string(br.variant)}, {"t0", br.t0}, {"sign", br.sign},
                                     {"Lambda", br.Lambda}, {"t_ref", t_ref}}},
                         {"domain", domain_to_json(dom)}};
  std::function<double(double)> ln_b;
  if (br.variant == SigmaVariant::Sol1) {
    // ∫ μ dt = (2/3) ln|sinh(X/2)| (upper) or (2/3) ln cosh(X/2) (lower)
    const double k = std::sqrt(-6 * br.Lambda);
    auto F = [br, k](double t) {
      const double X = k * (t - br.t0);
      return br.sign > 0 ? 2.0 / 3 * std::log(std::abs(std::sinh(X / 2))) : 2.0 / 3 * std::log(std::cosh(X / 2));
    };
    ln_b = [F, t_ref](double t) { return F(t) - F(t_ref); };
  } else {
    // ln b = ∫ μ (dt/dσ) dσ with μ dt/dσ = -64σ/D
    const bool minus = br.variant == SigmaVariant::Sol2;
    const detail::SigmaIntegral I{br.variant,
                                  [minus](const SigmaCoord& c) {
                                    return -64 * c.sigma / (minus ? sigma::D_minus(c) : sigma::D_plus(c));
                                  },
                                  false};
    const double ref = I.from_anchor(*sigma_branch_detail(br, t_ref).coord);
    ln_b = [br, I, ref](double t) { return I.from_anchor(*sigma_branch_detail(br, t).coord) - ref; };
  }
  return profile_from_state_curve(
      dom, br.Lambda, [br](double t) { return sigma_branch_detail(br, t).jet; }, std::move(ln_b), std::move(desc));
}

// Displayed closed form for λ on sol1 (contains a sign typo; kept to document
// the discrepancy with λ = -μ - 2Λ/μ).
inline double sol1_displayed_lambda(double Lambda, double t_minus_t0, int sign) {
  const double s = std::sqrt(-2 * Lambda / 3);
  const double e = std::exp(std::sqrt(-6 * Lambda) * t_minus_t0);
  return 2 * s * (e * e + sign * 4 * e + 1) / (e * e - 1);
}

// ρ/c = -8 (5 - √((9+7σ)/(1-σ)))^{-1}, times c. Also returns dρ/dσ.
struct RhoOfSigma {
  double rho = 0;
  double drho_dsigma = 0;
};

inline RhoOfSigma rho_of_sigma_detail(double c, double sigma_value) {
  if (!(sigma_value > -1 && sigma_value < 1)) throw invalid_input("rho_of_sigma: σ must lie in ]-1, 1[");
  if (sigma_value == 0.5) throw invalid_input("rho_of_sigma: pole at σ = 1/2");
  const double om = 1 - sigma_value;
  const double S = std::sqrt((9 + 7 * sigma_value) / om);
  const double dS = 8 / (S * om * om);
  const double den = 5 - S;
  return {-8 * c / den, -8 * c * dS / (den * den)};
}

inline double rho_of_sigma(double c, double sigma_value) { return rho_of_sigma_detail(c, sigma_value).rho; }

}  // namespace heis
