#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "error.hpp"
#include "ode.hpp"

namespace heis::specfun {

inline double gamma_fn(double x) {
  if (!std::isfinite(x)) throw invalid_input("gamma_fn: argument must be finite");
  if (x <= 0 && x == std::floor(x))
    throw invalid_input("gamma_fn: pole at nonpositive integer " + std::to_string(x));
  return std::tgamma(x);
}

// 1/Γ(x), zero at the poles.
inline double rgamma(double x) {
  if (x <= 0 && x == std::floor(x)) return 0.0;
  return 1.0 / std::tgamma(x);
}

// ₂F₁(a, b; a+1; x). Only this family is needed, so c is derived.
struct Hyp2F1Params {
  double a = -0.75;
  double b = 0.5;

  Hyp2F1Params() = default;
  Hyp2F1Params(double a_, double b_) : a(a_), b(b_) { validate(); }

  double c() const { return a + 1; }

  void validate() const {
    if (!std::isfinite(a) || !std::isfinite(b)) throw invalid_input("Hyp2F1Params: non-finite parameter");
    if (a == 0) throw invalid_input("Hyp2F1Params: a must be nonzero");
    if (a < 0 && a == std::floor(a))
      throw invalid_input("Hyp2F1Params: c = a+1 must not be a nonpositive integer");
  }
};

// Σ_{n≥1} terms, i.e. F(x) - 1, for |x| < 1. Kept separate so that callers
// who need F-1 near x=0 do not lose digits.
inline double hyp2f1_series_tail(const Hyp2F1Params& p, double x) {
  p.validate();
  if (!(std::abs(x) < 1)) throw invalid_input("hyp2f1 series needs |x| < 1");
  const double a = p.a, b = p.b, c = p.c();
  double term = 1, sum = 0;
  for (int n = 0; n < 10000; ++n) {
    term *= (a + n) * (b + n) / ((c + n) * (n + 1)) * x;
    sum += term;
    if (std::abs(term) <= 1e-17 * std::max(1.0, std::abs(sum)) || term == 0) return sum;
  }
  throw numerical_failure("hyp2f1 series did not converge");
}

inline double hyp2f1_series(const Hyp2F1Params& p, double x) { return 1.0 + hyp2f1_series_tail(p, x); }

namespace detail {

inline ode::Options hyp_ode_options() {
  ode::Options o;
  o.rtol = 1e-13;
  o.atol = 1e-14;
  return o;
}

// Transports F along x F' = a((1-x)^{-b} - F) on one side of 0 using a
// logarithmic variable, s = ln(-x) for x<0 and s = -ln(1-x) for 0<x<1.
inline double continue_ode(const Hyp2F1Params& p, double x_from, double f_from, double x_to) {
  if (x_from == x_to) return f_from;
  const double a = p.a, b = p.b;
  double value = f_from;
  auto keep = [&value](const ode::DenseStep<1>& st) {
    value = st.value(st.t1())[0];
    return true;
  };
  ode::Result r;
  if (x_from < 0 && x_to < 0) {
    auto rhs = [a, b](double s, const ode::Vec<1>& F) {
      return ode::Vec<1>{a * (std::pow(1 + std::exp(s), -b) - F[0])};
    };
    r = ode::integrate<1>(rhs, std::log(-x_from), {f_from}, std::log(-x_to), hyp_ode_options(), keep);
  } else if (x_from > 0 && x_to > 0 && x_to < 1) {
    auto rhs = [a, b](double s, const ode::Vec<1>& F) {
      const double om = std::exp(-s);  // 1 - x
      const double x = -std::expm1(-s);
      return ode::Vec<1>{a * (std::pow(om, 1 - b) - om * F[0]) / x};
    };
    r = ode::integrate<1>(rhs, -std::log1p(-x_from), {f_from}, -std::log1p(-x_to), hyp_ode_options(), keep);
  } else {
    throw invalid_input("hyp2f1 continuation cannot cross x = 0 or reach x >= 1");
  }
  if (r.status != ode::Status::Reached) throw numerical_failure("hyp2f1 ODE continuation failed");
  return value;
}

}  // namespace detail

// Series for |x| <= 1/2, otherwise the first-order ODE integrated outward
// from x = ±1/2.
inline double hyp2f1_shifted(const Hyp2F1Params& p, double x) {
  p.validate();
  if (!(x < 1)) throw invalid_input("hyp2f1_shifted: x must be < 1");
  if (std::abs(x) <= 0.5) return hyp2f1_series(p, x);
  const double anchor = x < 0 ? -0.5 : 0.5;
  return detail::continue_ode(p, anchor, hyp2f1_series(p, anchor), x);
}

// F'(x) = (ab/c) ₂F₁(a+1, b+1; a+2; x), which stays in the c = a+1 family.
inline double hyp2f1_derivative(const Hyp2F1Params& p, double x) {
  p.validate();
  return p.a * p.b / p.c() * hyp2f1_shifted(Hyp2F1Params(p.a + 1, p.b + 1), x);
}

inline double hyp2f1_leading_coefficient(const Hyp2F1Params& p) {
  const double a = p.a, b = p.b, c = p.c();
  return gamma_fn(b - a) * gamma_fn(c) * rgamma(b) * rgamma(c - a);
}

// Coefficient of (-x)^{-b}: Γ(a-b)Γ(c)/(Γ(a)Γ(c-b)).
inline double hyp2f1_second_coefficient(const Hyp2F1Params& p) {
  const double a = p.a, b = p.b, c = p.c();
  return gamma_fn(a - b) * gamma_fn(c) * rgamma(a) * rgamma(c - b);
}

// F(x) ~ A1 (-x)^{-a} + A2 (-x)^{-b} for large -x. With c = a+1 the first
// series terminates, so the error is O((-x)^{-b-1}).
inline double hyp2f1_asymptotic(const Hyp2F1Params& p, double x) {
  p.validate();
  if (!(x <= -10)) throw invalid_input("hyp2f1_asymptotic: needs x <= -10");
  const double a = p.a, b = p.b;
  if (a - b == std::round(a - b)) throw invalid_input("hyp2f1_asymptotic: a - b is an integer");
  const double A1 = hyp2f1_leading_coefficient(p);
  const double A2 = hyp2f1_second_coefficient(p);
  return A1 * std::pow(-x, -a) + A2 * std::pow(-x, -b);
}

struct EndpointExponent {
  double point;
  double alpha;  // integrand ~ |u - point|^alpha
};

struct SingularIntegrand {
  std::function<double(double)> f;
  std::vector<EndpointExponent> singularities;
};

struct QuadResult {
  double value = 0;
  double error = 0;
};

namespace detail {

// Power p of the substitution u = end ± w^p that removes |u-end|^alpha.
inline double substitution_power(double alpha) {
  if (alpha < 0) return 1.0 / (1.0 + alpha);
  if (std::abs(std::fmod(alpha, 1.0) - 0.5) < 1e-12) return 2.0;
  return 1.0;
}

struct Piece {
  double lo, hi;
  double p_lo = 1, p_hi = 1;  // substitution powers at each end (1 = none)
};

inline std::vector<Piece> split_pieces(const SingularIntegrand& s, double lo, double hi) {
  if (!s.f) throw invalid_input("singular_quad: missing integrand");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw invalid_input("singular_quad: needs finite lo < hi");
  std::vector<double> cuts{lo, hi};
  for (const auto& e : s.singularities) {
    if (!(e.alpha > -1))
      throw invalid_input("singular_quad: exponent " + std::to_string(e.alpha) + " is not integrable");
    if (e.point > lo && e.point < hi) cuts.push_back(e.point);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  auto power_at = [&](double u) {
    double p = 1;
    for (const auto& e : s.singularities)
      if (e.point == u) p = std::max(p, substitution_power(e.alpha));
    return p;
  };
  std::vector<Piece> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double u = cuts[i], v = cuts[i + 1];
    const double pu = power_at(u), pv = power_at(v);
    if (pu > 1 && pv > 1) {
      const double m = 0.5 * (u + v);
      out.push_back({u, m, pu, 1});
      out.push_back({m, v, 1, pv});
    } else {
      out.push_back({u, v, pu, pv});
    }
  }
  return out;
}

// Integrand and range after substitution; w runs over [0, W].
template <class Fn>
auto transformed(const Fn& f, const Piece& pc) {
  struct T {
    std::function<double(double)> g;
    double w0, w1;
  };
  if (pc.p_lo > 1) {
    const double p = pc.p_lo, u = pc.lo;
    return T{[f, p, u](double w) { return f(u + std::pow(w, p)) * p * std::pow(w, p - 1); }, 0.0,
             std::pow(pc.hi - pc.lo, 1 / p)};
  }
  if (pc.p_hi > 1) {
    const double p = pc.p_hi, v = pc.hi;
    return T{[f, p, v](double w) { return f(v - std::pow(w, p)) * p * std::pow(w, p - 1); }, 0.0,
             std::pow(pc.hi - pc.lo, 1 / p)};
  }
  return T{[f](double u) { return f(u); }, pc.lo, pc.hi};
}

// Adaptive Gauss–Kronrod by bisection. Boost 1.74 reports the error of the
// rule on [-1, 1] without the factor (b-a)/2 and compares it with tolerances
// that carry it, so short intervals never terminate. Its rule is used here
// with max_depth = 0, the error is rescaled and the bisection done locally.
template <unsigned Points, class F>
double gk_piece(F& f, double a, double b, double abs_tol, unsigned depth, double* err, double* l1) {
  double e = 0, L = 0;
  const double v = boost::math::quadrature::gauss_kronrod<double, Points>::integrate(f, a, b, 0, 0.0, &e, &L);
  e *= 0.5 * std::abs(b - a);
  const double floor = 16 * std::numeric_limits<double>::epsilon() * L;
  if (depth == 0 || e <= std::max(abs_tol, floor) || !std::isfinite(v)) {
    *err += e;
    *l1 += L;
    return v;
  }
  const double m = 0.5 * (a + b);
  return gk_piece<Points>(f, a, m, 0.5 * abs_tol, depth - 1, err, l1) +
         gk_piece<Points>(f, m, b, 0.5 * abs_tol, depth - 1, err, l1);
}

// Tolerance is relative to max(1, ∫|f|).
template <unsigned Points, class F>
double gk_adaptive(F&& f, double a, double b, unsigned depth, double tol, double* err, double* l1) {
  double e0 = 0, L0 = 0;
  boost::math::quadrature::gauss_kronrod<double, Points>::integrate(f, a, b, 0, 0.0, &e0, &L0);
  double e = 0, L = 0;
  const double v = gk_piece<Points>(f, a, b, tol * std::max(1.0, L0), depth, &e, &L);
  if (err) *err = e;
  if (l1) *l1 = L;
  return v;
}

}  // namespace detail

// Adaptive Gauss–Kronrod after power substitutions at annotated endpoints.
inline QuadResult singular_quad_detailed(const SingularIntegrand& s, double lo, double hi, double tol) {
  if (!(tol > 0)) throw invalid_input("singular_quad: tolerance must be positive");
  QuadResult total;
  double l1 = 0;
  for (const auto& pc : detail::split_pieces(s, lo, hi)) {
    const auto tr = detail::transformed(s.f, pc);
    double err = 0, piece_l1 = 0;
    const double v = detail::gk_adaptive<31>(tr.g, tr.w0, tr.w1, 25, tol, &err, &piece_l1);
    if (!std::isfinite(v)) throw numerical_failure("singular_quad: non-finite integral");
    total.value += v;
    total.error += err;
    l1 += piece_l1;
  }
  const double floor = 64 * std::numeric_limits<double>::epsilon() * l1;
  if (total.error > std::max(tol * std::max(1.0, l1), floor))
    throw numerical_failure("singular_quad: tolerance " + std::to_string(tol) + " not met (error estimate " +
                            std::to_string(total.error) + ")");
  return total;
}

inline double singular_quad(const SingularIntegrand& s, double lo, double hi, double tol) {
  return singular_quad_detailed(s, lo, hi, tol).value;
}

// Same substitutions followed by a fixed composite 3-point Gauss–Legendre
// rule on `panels` equal panels per piece. Used to measure convergence order.
inline double singular_quad_composite(const SingularIntegrand& s, double lo, double hi, int panels) {
  if (panels < 1) throw invalid_input("singular_quad_composite: panels must be positive");
  static const double xg[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double wg[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
  double total = 0;
  for (const auto& pc : detail::split_pieces(s, lo, hi)) {
    const auto tr = detail::transformed(s.f, pc);
    const double H = (tr.w1 - tr.w0) / panels;
    for (int k = 0; k < panels; ++k) {
      const double m = tr.w0 + (k + 0.5) * H;
      for (int q = 0; q < 3; ++q) total += 0.5 * H * wg[q] * tr.g(m + 0.5 * H * xg[q]);
    }
  }
  return total;
}

// B_x(p, q) = ∫_0^x t^{p-1}(1-t)^{q-1} dt for 0<x<1, p>0; for -1<p<0 it is
// continued by one integration by parts, which keeps
// B_x(a, 1-b) = ₂F₁(a, b; a+1; x) x^a / a valid.
inline double incomplete_beta(double x, double p, double q) {
  if (!(x > 0 && x < 1)) throw invalid_input("incomplete_beta: x must lie in ]0,1[");
  if (!(p > -1) || p == 0) throw invalid_input("incomplete_beta: p must satisfy p > -1, p != 0");
  if (!std::isfinite(q)) throw invalid_input("incomplete_beta: q must be finite");
  if (p < 0)
    return std::pow(x, p) * std::pow(1 - x, q - 1) / p + (q - 1) / p * incomplete_beta(x, p + 1, q - 1);
  SingularIntegrand s{[p, q](double t) { return std::pow(t, p - 1) * std::pow(1 - t, q - 1); },
                      {{0.0, p - 1}}};
  return singular_quad(s, 0.0, x, 1e-14);
}

}  // namespace heis::specfun
