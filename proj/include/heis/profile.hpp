#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "error.hpp"
#include "interval.hpp"

namespace heis {

// Values and first two derivatives of the coefficient functions at one t.
struct ProfileJet {
  double a = 0, da = 0, dda = 0;
  double b = 0, db = 0, ddb = 0;
};

// dt² + a(t)(dz + x dy - y dx)² + b(t)(dx² + dy²), given through (a, b) and
// their derivatives on an open interval.
class MetricProfile {
 public:
  using Evaluator = std::function<ProfileJet(double)>;

  MetricProfile(Interval domain, Evaluator eval, nlohmann::json descriptor = nullptr)
      : domain_(domain),
        eval_(std::make_shared<const Evaluator>(std::move(eval))),
        descriptor_(std::move(descriptor)) {
    if (!(domain_.lo < domain_.hi)) throw invalid_input("profile domain is empty");
  }

  const Interval& domain() const { return domain_; }
  bool contains(double t) const { return domain_.contains(t); }

  ProfileJet jet(double t) const {
    if (!domain_.contains(t))
      throw invalid_input("t = " + std::to_string(t) + " lies outside the profile domain");
    ProfileJet j = (*eval_)(t);
    if (!(j.a > 0) || !(j.b > 0))
      throw invalid_input("profile coefficients must be positive at t = " + std::to_string(t));
    return j;
  }

  double a(double t) const { return jet(t).a; }
  double b(double t) const { return jet(t).b; }

  // null when the profile has no serial form
  const nlohmann::json& descriptor() const { return descriptor_; }

 private:
  Interval domain_;
  std::shared_ptr<const Evaluator> eval_;
  nlohmann::json descriptor_;
};

// Unbounded ends are written as "-inf" / "inf"; null is read as unbounded too.
inline nlohmann::json domain_to_json(const Interval& d) {
  auto end = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
  };
  return nlohmann::json::array({end(d.lo), end(d.hi)});
}

inline Interval domain_from_json(const nlohmann::json& j) {
  if (j.is_null()) return {};
  if (!j.is_array() || j.size() != 2) throw invalid_input("domain must be [lo, hi]");
  auto end = [](const nlohmann::json& e, double unbounded) {
    if (e.is_null()) return unbounded;
    if (e.is_number()) return e.get<double>();
    if (e.is_string() && (e == "inf" || e == "-inf")) {
      if ((e == "inf") != (unbounded > 0)) throw invalid_input("domain: infinite end on the wrong side");
      return unbounded;
    }
    throw invalid_input("domain ends must be numbers, \"-inf\" or \"inf\"");
  };
  return {end(j[0], -inf), end(j[1], inf)};
}

// a = a0 e^{αt}, b = b0 e^{βt}
inline MetricProfile exponential_profile(double a0, double alpha, double b0, double beta,
                                         Interval domain = {}) {
  if (!(a0 > 0) || !(b0 > 0)) throw invalid_input("exponential profile needs a0, b0 > 0");
  nlohmann::json desc = {{"kind", "exponential"},
                         {"params", {{"a0", a0}, {"alpha", alpha}, {"b0", b0}, {"beta", beta}}},
                         {"domain", domain_to_json(domain)}};
  return MetricProfile(
      domain,
      [=](double t) {
        const double a = a0 * std::exp(alpha * t), b = b0 * std::exp(beta * t);
        return ProfileJet{a, alpha * a, alpha * alpha * a, b, beta * b, beta * beta * b};
      },
      std::move(desc));
}

inline MetricProfile constant_profile(double a, double b) {
  return exponential_profile(a, 0.0, b, 0.0);
}

namespace detail {

// Cubic spline with not-a-knot ends. Returns value and two derivatives.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size() - 1;  // number of intervals, >= 3
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) h[i] = x_[i + 1] - x_[i];
    // Tridiagonal system in the interior second derivatives M_1..M_{n-1}.
    const std::size_t m = n - 1;
    std::vector<double> lo(m, 0), di(m, 0), up(m, 0), rhs(m, 0);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = k + 1;
      lo[k] = h[i - 1];
      di[k] = 2 * (h[i - 1] + h[i]);
      up[k] = h[i];
      rhs[k] = 6 * ((y_[i + 1] - y_[i]) / h[i] - (y_[i] - y_[i - 1]) / h[i - 1]);
    }
    // M_0 = ((h0+h1)M_1 - h0 M_2)/h1 and the mirror relation at the right end.
    di[0] += h[0] * (h[0] + h[1]) / h[1];
    up[0] -= h[0] * h[0] / h[1];
    di[m - 1] += h[n - 1] * (h[n - 1] + h[n - 2]) / h[n - 2];
    lo[m - 1] -= h[n - 1] * h[n - 1] / h[n - 2];
    for (std::size_t k = 1; k < m; ++k) {
      const double w = lo[k] / di[k - 1];
      di[k] -= w * up[k - 1];
      rhs[k] -= w * rhs[k - 1];
    }
    M_.assign(n + 1, 0.0);
    M_[m] = rhs[m - 1] / di[m - 1];
    for (std::size_t k = m - 1; k-- > 0;) M_[k + 1] = (rhs[k] - up[k] * M_[k + 2]) / di[k];
    M_[0] = ((h[0] + h[1]) * M_[1] - h[0] * M_[2]) / h[1];
    M_[n] = ((h[n - 1] + h[n - 2]) * M_[n - 1] - h[n - 1] * M_[n - 2]) / h[n - 2];
  }

  std::array<double, 3> operator()(double t) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    i = std::min(i, x_.size() - 2);
    const double h = x_[i + 1] - x_[i];
    const double A = (x_[i + 1] - t) / h, B = (t - x_[i]) / h;
    const double v = A * y_[i] + B * y_[i + 1] +
                     ((A * A * A - A) * M_[i] + (B * B * B - B) * M_[i + 1]) * h * h / 6;
    const double d = (y_[i + 1] - y_[i]) / h - (3 * A * A - 1) * h * M_[i] / 6 +
                     (3 * B * B - 1) * h * M_[i + 1] / 6;
    const double dd = A * M_[i] + B * M_[i + 1];
    return {v, d, dd};
  }

 private:
  std::vector<double> x_, y_, M_;
};

}  // namespace detail

// Spline-backed profile: not-a-knot cubic splines of ln a and ln b, so a and
// b stay positive and C² between the samples.
inline MetricProfile sampled_profile(std::vector<double> t, const std::vector<double>& a,
                                     const std::vector<double>& b) {
  if (t.size() < 4 || a.size() != t.size() || b.size() != t.size())
    throw invalid_input("sampled profile needs at least 4 samples of t, a, b of equal length");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw invalid_input("sampled profile t must be strictly increasing");
  std::vector<double> la(a.size()), lb(b.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!(a[i] > 0) || !(b[i] > 0)) throw invalid_input("sampled profile needs a, b > 0");
    la[i] = std::log(a[i]);
    lb[i] = std::log(b[i]);
  }
  nlohmann::json desc = {{"kind", "sampled"}, {"t", t}, {"a", a}, {"b", b}};
  auto sa = std::make_shared<detail::CubicSpline>(t, la);
  auto sb = std::make_shared<detail::CubicSpline>(t, lb);
  // Samples are closed at the ends; the profile domain is the open hull.
  Interval dom{t.front(), t.back()};
  return MetricProfile(
      dom,
      [sa, sb](double s) {
        const auto [la_, dla, ddla] = (*sa)(s);
        const auto [lb_, dlb, ddlb] = (*sb)(s);
        const double av = std::exp(la_), bv = std::exp(lb_);
        return ProfileJet{av, dla * av, (ddla + dla * dla) * av,
                          bv, dlb * bv, (ddlb + dlb * dlb) * bv};
      },
      std::move(desc));
}

// Largest relative disagreement between the derivative evaluators and
// central differences of the value evaluators.
inline double derivative_mismatch(const MetricProfile& p, double t, double h = 1e-4) {
  const ProfileJet j = p.jet(t), jp = p.jet(t + h), jm = p.jet(t - h);
  auto rel = [](double exact, double approx, double scale) {
    return std::abs(exact - approx) / std::max({std::abs(exact), scale, 1e-300});
  };
  return std::max({rel(j.da, (jp.a - jm.a) / (2 * h), j.a),
                   rel(j.dda, (jp.a - 2 * j.a + jm.a) / (h * h), j.a),
                   rel(j.db, (jp.b - jm.b) / (2 * h), j.b),
                   rel(j.ddb, (jp.b - 2 * j.b + jm.b) / (h * h), j.b)});
}

}  // namespace heis
