#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "families.hpp"
#include "flow.hpp"
#include "interval.hpp"

namespace heis {

enum class Branch {
  Stationary,
  HyperKahler,
  RicciFlatGeneric,
  KZeroSol1,
  KZeroSol2,
  KZeroSol3,
  KZeroSol4,
  GenericK,
  NonRiemannian,
  NoEinsteinMetric,
};

inline const char* to_string(Branch b) {
  switch (b) {
    case Branch::Stationary: return "Stationary";
    case Branch::HyperKahler: return "HyperKahler";
    case Branch::RicciFlatGeneric: return "RicciFlatGeneric";
    case Branch::KZeroSol1: return "KZero(sol1)";
    case Branch::KZeroSol2: return "KZero(sol2)";
    case Branch::KZeroSol3: return "KZero(sol3)";
    case Branch::KZeroSol4: return "KZero(sol4)";
    case Branch::GenericK: return "GenericK";
    case Branch::NonRiemannian: return "NonRiemannian";
    case Branch::NoEinsteinMetric: return "NoEinsteinMetric";
  }
  return "?";
}

enum class Verdict { Complete, Incomplete, NotApplicable };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Complete: return "Complete";
    case Verdict::Incomplete: return "Incomplete";
    case Verdict::NotApplicable: return "NotApplicable";
  }
  return "?";
}

enum class Provenance { ClosedForm, Numeric };

inline const char* to_string(Provenance p) { return p == Provenance::ClosedForm ? "closed-form" : "numeric"; }

// One end of a maximal interval. `numeric` holds the integration estimate
// (±inf when no blow-up occurred before the horizon).
struct Endpoint {
  double value = 0;
  Provenance provenance = Provenance::Numeric;
  double numeric = 0;

  bool finite() const { return std::isfinite(value); }
  // Only finite ends are compared: an infinite closed-form end on a K = 0
  // branch is approached along a saddle or a degenerate node, and integration
  // noise leaves the branch long before any reasonable horizon.
  bool agrees(double tol = 1e-3) const {
    if (!std::isfinite(value)) return true;
    return std::abs(value - numeric) < tol;
  }
};

// Domain of the solution through the given state, with the state at t = 0.
struct DomainEstimate {
  Endpoint lo{-inf, Provenance::Numeric, -inf};
  Endpoint hi{inf, Provenance::Numeric, inf};
  Interval interval() const { return {lo.value, hi.value}; }
  bool has_finite_endpoint() const { return lo.finite() || hi.finite(); }
};

struct ClassificationReport {
  double Lambda = 0;
  LogDerivState state;
  std::optional<double> K;
  Branch branch = Branch::GenericK;
  DomainEstimate domain;
  Verdict verdict = Verdict::NotApplicable;
  std::string justification;
  bool ill_conditioned = false;  // sign quantity close to zero relative to its terms
};

struct DomainOptions {
  double horizon = 60;
  double tolerance = 1e-10;
};

namespace detail {

constexpr double match_tol = 1e-8;

inline double fixed_point_s(double Lambda) { return std::sqrt(-2 * Lambda / 3); }

inline bool near(double x, double y) { return std::abs(x - y) <= match_tol * (1 + std::abs(y)); }

inline bool is_stationary_point(const LogDerivState& s, double Lambda) {
  if (!(Lambda < 0)) return false;
  const double q = fixed_point_s(Lambda);
  for (double sg : {1.0, -1.0})
    if (near(s.lambda, sg * 2 * q) && near(s.mu, sg * q)) return true;
  return false;
}

inline bool on_hyperbola(const LogDerivState& s, double Lambda) {
  const double l = s.lambda, m = s.mu;
  const double scale = m * m + std::abs(l * m) + 2 * std::abs(Lambda);
  return std::abs(m * m + l * m + 2 * Lambda) <= match_tol * scale;
}

inline bool on_quartic(const LogDerivState& s, double Lambda) {
  const double l = s.lambda, m = s.mu, lm = l + m;
  const double scale = std::abs(lm * lm * lm * m) +
                       std::abs(2 * Lambda / 3) * (3 * l * l + 18 * std::abs(l * m) + 11 * m * m) +
                       128 * Lambda * Lambda / 9;
  return std::abs(p_lambda(s, Lambda)) <= match_tol * scale;
}

struct BranchMatch {
  Branch branch = Branch::GenericK;
  std::optional<Interval> closed_form;  // domain with the state at t = 0
  std::string note;
};

// Numeric endpoint in one direction: blow-up time, or ±inf when the flow
// survives up to the horizon.
inline double numeric_end(const LogDerivState& s, double Lambda, double dir, const DomainOptions& opt) {
  FlowParams p;
  p.Lambda = Lambda;
  p.tolerance = opt.tolerance;
  const FlowTrajectory tr = integrate_flow(s, {0.0, dir * opt.horizon}, p);
  if (tr.termination == Termination::Completed) return dir * inf;
  return tr.t_stop;
}

// Closed-form branch matching for Λ < 0.
inline BranchMatch match_negative(const LogDerivState& s, double Lambda) {
  const double q = fixed_point_s(Lambda);
  BranchMatch m;
  if (is_stationary_point(s, Lambda)) {
    m.branch = Branch::Stationary;
    m.closed_form = Interval{};
    m.note = "fixed point (2s, s) up to sign";
    return m;
  }
  if (on_hyperbola(s, Lambda) && s.mu != 0) {
    // μ = s coth(3s(t-t0)/2) for |μ| > s, s tanh(...) for |μ| < s
    const double r = std::abs(s.mu) > q ? q / s.mu : s.mu / q;
    const double dt = 2 * std::atanh(r) / (3 * q);  // t - t0 at the state
    m.branch = Branch::KZeroSol1;
    m.closed_form = dt > 0 ? Interval{-dt, inf} : Interval{-inf, -dt};
    m.note = std::abs(s.mu) > q ? "upper sol1 sheet" : "lower sol1 sheet";
    return m;
  }
  if (on_quartic(s, Lambda) && s.lambda != 0) {
    const double sg = s.mu / s.lambda;
    if (sg > -1 && sg < 1) {
      const SigmaCoord c = SigmaCoord::at(sg);
      const double l2 = s.lambda * s.lambda / (64 * q * q);
      const double rm = l2 * sigma::A_minus_sqrtQ(c), rp = l2 * sigma::A_plus_sqrtQ(c);
      const double lam_sign = s.lambda > 0 ? 1.0 : -1.0;
      auto half_line = [](double dt) { return dt > 0 ? Interval{-dt, inf} : Interval{-inf, -dt}; };
      // Near σ = 1 both roots pass the tolerance; the nearer one decides.
      const double em = std::abs(rm - 1), ep = std::abs(rp - 1);
      if (em < 1e-6 && sg > 0 && em < ep) {
        const double I = SigmaIntegral::separated(SigmaVariant::Sol2).from_anchor(c);
        m.branch = Branch::KZeroSol2;
        m.closed_form = half_line(lam_sign * I / q);
        m.note = "σ = μ/λ on the A - √Q root";
        return m;
      }
      if (ep < 1e-6 && sg < 0.5) {
        const double I = SigmaIntegral::separated(SigmaVariant::Sol3).from_anchor(c);
        m.branch = Branch::KZeroSol3;
        m.closed_form = half_line(-lam_sign * I / q);
        m.note = "σ = μ/λ in ]-1, 1/2[ on the A + √Q root";
        return m;
      }
      if (ep < 1e-6 && sg > 0.5) {
        m.branch = Branch::KZeroSol4;
        m.closed_form = Interval{};
        m.note = "σ = μ/λ in ]1/2, 1[ on the A + √Q root";
        return m;
      }
    }
  }
  return m;
}

inline BranchMatch match_flat(const LogDerivState& s) {
  BranchMatch m;
  if (std::abs(s.lambda + s.mu) <= match_tol * (std::abs(s.lambda) + std::abs(s.mu))) {
    // λ = -μ = -2/(3(t - t0))
    const double t0 = -2 / (3 * s.mu);
    m.branch = Branch::HyperKahler;
    m.closed_form = s.mu > 0 ? Interval{t0, inf} : Interval{-inf, t0};
    m.note = "ν = -1";
    return m;
  }
  const double C = ricci_flat_C_of_state(s);
  const int sg = s.mu > 0 ? 1 : -1;
  const double lu = detail::ricci_flat_lambda(C, RicciFlatSheet::Upper, s.mu).lambda;
  const double ll = detail::ricci_flat_lambda(C, RicciFlatSheet::Lower, s.mu).lambda;
  const RicciFlatSheet sheet =
      std::abs(lu - s.lambda) < std::abs(ll - s.lambda) ? RicciFlatSheet::Upper : RicciFlatSheet::Lower;
  const detail::RicciFlatRelation rel{C, sheet == RicciFlatSheet::Lower ? 1.0 : -1.0};
  const double t0 = -rel.G(sg, std::abs(s.mu));
  m.branch = Branch::RicciFlatGeneric;
  m.closed_form = ricci_flat_domain(RicciFlatBranch(C, t0, sheet, sg));
  m.note = std::string("C = ") + std::to_string(C) + (sheet == RicciFlatSheet::Upper ? ", upper sheet" : ", lower sheet");
  return m;
}

inline BranchMatch match_branch(const LogDerivState& s, double Lambda) {
  return Lambda < 0 ? match_negative(s, Lambda) : match_flat(s);
}

}  // namespace detail

inline bool is_riemannian(const LogDerivState& s, double Lambda) { return sign_quantity(s, Lambda) < 0; }

// Bidirectional integration; where a closed form applies its endpoints are
// reported and the numeric ones kept alongside.
inline DomainEstimate maximal_domain(const LogDerivState& s, double Lambda, const DomainOptions& opt = {}) {
  if (Lambda > 0) throw invalid_input("maximal_domain: no Einstein metric of this form for Λ > 0");
  if (!is_riemannian(s, Lambda)) throw invalid_input("maximal_domain: state is not Riemannian (sign quantity >= 0)");
  DomainEstimate d;
  d.lo.numeric = detail::numeric_end(s, Lambda, -1, opt);
  d.hi.numeric = detail::numeric_end(s, Lambda, +1, opt);
  d.lo.value = d.lo.numeric;
  d.hi.value = d.hi.numeric;
  const detail::BranchMatch m = detail::match_branch(s, Lambda);
  if (m.closed_form) {
    d.lo = {m.closed_form->lo, Provenance::ClosedForm, d.lo.numeric};
    d.hi = {m.closed_form->hi, Provenance::ClosedForm, d.hi.numeric};
  }
  return d;
}

// Complete iff stationary, or on the sol4 side (the UHM metrics with ρ/c > 0
// up to t -> -t). With UHM parameters the answer follows from c and the
// component of ρ.
inline Verdict completeness_verdict(const ClassificationReport& r, const std::optional<UHMFamily>& uhm = std::nullopt) {
  if (uhm) return uhm->positive_component() ? Verdict::Complete : Verdict::Incomplete;
  switch (r.branch) {
    case Branch::NonRiemannian:
    case Branch::NoEinsteinMetric:
      throw invalid_input(std::string("completeness_verdict: no metric to judge (") + to_string(r.branch) + ")");
    case Branch::Stationary:
    case Branch::KZeroSol4: return Verdict::Complete;
    default: return Verdict::Incomplete;
  }
}

inline ClassificationReport classify_state(const LogDerivState& s, double Lambda, const DomainOptions& opt = {}) {
  if (!std::isfinite(s.lambda) || !std::isfinite(s.mu) || !std::isfinite(Lambda))
    throw invalid_input("classify_state: non-finite input");
  ClassificationReport r;
  r.Lambda = Lambda;
  r.state = s;
  if (Lambda > 0) {
    r.branch = Branch::NoEinsteinMetric;
    r.domain = {{inf, Provenance::ClosedForm, inf}, {-inf, Provenance::ClosedForm, -inf}};
    r.justification = "no Einstein metric with this symmetry has positive Einstein constant";
    return r;
  }
  const FlowInvariants inv = invariants(s, Lambda);
  r.K = inv.K;
  const double l = s.lambda, m = s.mu;
  const double scale = m * m + 2 * std::abs(l * m) + 4 * std::abs(Lambda);
  r.ill_conditioned = std::abs(inv.sign_quantity) <= detail::match_tol * scale;
  if (!(inv.sign_quantity < 0)) {
    r.branch = Branch::NonRiemannian;
    r.domain = {{inf, Provenance::ClosedForm, inf}, {-inf, Provenance::ClosedForm, -inf}};
    r.justification = "sign quantity μ² + 2λμ + 4Λ >= 0 gives a <= 0";
    return r;
  }
  const detail::BranchMatch bm = detail::match_branch(s, Lambda);
  r.branch = bm.branch;
  r.domain = maximal_domain(s, Lambda, opt);
  r.verdict = completeness_verdict(r);
  switch (r.branch) {
    case Branch::Stationary: r.justification = "stationary point: complex hyperbolic plane"; break;
    case Branch::KZeroSol4: r.justification = "sol4: one-loop deformed hypermultiplet with ρ/c > 0 (complete)"; break;
    case Branch::HyperKahler: r.justification = "hyper-Kähler: singular end at finite t"; break;
    case Branch::RicciFlatGeneric: r.justification = "Ricci-flat: finite endpoint from the hypergeometric relation"; break;
    case Branch::GenericK:
      r.justification = r.domain.has_finite_endpoint()
                            ? "K != 0: finite endpoint detected by blow-up of the flow"
                            : "K != 0: incomplete, as every K != 0 solution is; no blow-up found before the horizon";
      break;
    default: r.justification = std::string(to_string(r.branch)) + ": finite endpoint of the closed form"; break;
  }
  if (!bm.note.empty()) r.justification += " [" + bm.note + "]";
  return r;
}

// ---------------------------------------------------------------------------
// Monotone quantity f = 2(λ + kμ)P_Λ² with f' = -h P_Λ²

struct SamplingGrid {
  double lo = -20, hi = 20;
  int n = 100;
};

inline double certificate_k_max() { return (26 + 6 * std::sqrt(10.0)) / 3; }

struct MonotoneCertificate {
  double k = 5;
  double Lambda = -6;
  double discriminant = 0;     // (18-3k)² - 4(2+12k)
  double constant_term = 0;    // (12-4k)Λ
  bool quadratic_form_ok = false;
  double grid_min_h = 0;
  bool grid_positive = false;

  bool valid() const { return quadratic_form_ok && grid_positive; }

  double f(const LogDerivState& s) const {
    const double P = p_lambda(s, Lambda);
    return 2 * (s.lambda + k * s.mu) * P * P;
  }
  double h(const LogDerivState& s) const {
    const double l = s.lambda, m = s.mu;
    return l * l + (2 + 12 * k) * m * m + (18 - 3 * k) * l * m + (12 - 4 * k) * Lambda;
  }
  // df/dt via the chain rule, given (λ', μ')
  double df(const LogDerivState& s, double dl, double dm) const {
    const double P = p_lambda(s, Lambda);
    const auto g = p_lambda_gradient(s, Lambda);
    return 2 * (dl + k * dm) * P * P + 4 * (s.lambda + k * s.mu) * P * (g[0] * dl + g[1] * dm);
  }
};

inline MonotoneCertificate monotone_certificate(double k, double Lambda, const SamplingGrid& grid = {}) {
  if (!(Lambda < 0)) throw invalid_input("monotone_certificate: needs Λ < 0");
  const double kmax = certificate_k_max();
  if (!(k > 3) || k > kmax * (1 + 4 * std::numeric_limits<double>::epsilon()))
    throw invalid_input("monotone_certificate: k must lie in ]3, (26+6√10)/3]");
  if (grid.n < 2 || !(grid.hi > grid.lo)) throw invalid_input("monotone_certificate: bad sampling grid");
  MonotoneCertificate c;
  c.k = k;
  c.Lambda = Lambda;
  const double B = 2 + 12 * k, Cc = 18 - 3 * k;
  c.discriminant = Cc * Cc - 4 * B;
  c.constant_term = (12 - 4 * k) * Lambda;
  // 9k² - 156k + 316 vanishes at k_max; allow rounding there.
  c.quadratic_form_ok = c.discriminant <= 1e-9 * 4 * B && c.constant_term > 0;
  c.grid_min_h = inf;
  for (int i = 0; i < grid.n; ++i)
    for (int j = 0; j < grid.n; ++j) {
      const double l = grid.lo + (grid.hi - grid.lo) * i / (grid.n - 1);
      const double m = grid.lo + (grid.hi - grid.lo) * j / (grid.n - 1);
      c.grid_min_h = std::min(c.grid_min_h, c.h({l, m}));
    }
  c.grid_positive = c.grid_min_h > 0;
  return c;
}

struct MonotonicityCheck {
  double max_identity_residual = 0;  // |∇f·F + hP²| / (1 + |f|) at step midpoints
  double max_increase = 0;           // largest relative increase of f between nodes, forward in t
  bool nonincreasing = true;
  int pairs_checked = 0;
};

// Both checks use only nodes with |λ| + |μ| <= bound. Next to a blow-up P is
// the small remainder of terms of size |λ|³|μ|, so f carries no correct digits.
inline MonotonicityCheck check_monotonicity(const MonotoneCertificate& c, const FlowTrajectory& tr,
                                            double bound = 100) {
  MonotonicityCheck out;
  const auto nodes = tr.nodes();
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double ta = nodes[i].first, tb = nodes[i + 1].first;
    auto inside = [&](const LogDerivState& s) { return std::abs(s.lambda) + std::abs(s.mu) <= bound; };
    if (!inside(nodes[i].second) || !inside(nodes[i + 1].second)) continue;
    ++out.pairs_checked;
    // order the pair forward in t
    const auto& early = tr.direction() > 0 ? nodes[i] : nodes[i + 1];
    const auto& late = tr.direction() > 0 ? nodes[i + 1] : nodes[i];
    const double fa = c.f(early.second), fb = c.f(late.second);
    const double inc = (fb - fa) / (1 + std::abs(fa));
    out.max_increase = std::max(out.max_increase, inc);
    if (inc > 1e-9) out.nonincreasing = false;
    const double tm = 0.5 * (ta + tb);
    const LogDerivState sm = tr.state_at(tm);
    if (std::abs(sm.lambda) + std::abs(sm.mu) > bound) continue;
    const FlowRhs d = flow_rhs(sm, c.Lambda);
    const double P = p_lambda(sm, c.Lambda);
    const double res = std::abs(c.df(sm, d.dlambda, d.dmu) + c.h(sm) * P * P) / (1 + std::abs(c.f(sm)));
    out.max_identity_residual = std::max(out.max_identity_residual, res);
  }
  return out;
}

}  // namespace heis
