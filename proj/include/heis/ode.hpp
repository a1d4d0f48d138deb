#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "error.hpp"

namespace heis::ode {

template <std::size_t N>
using Vec = std::array<double, N>;

// One accepted Dormand–Prince step with its continuous extension.
template <std::size_t N>
struct DenseStep {
  double t0 = 0, h = 0;
  std::array<Vec<N>, 5> r{};

  double t1() const { return t0 + h; }

  Vec<N> value(double t) const {
    const double th = (t - t0) / h, th1 = 1 - th;
    Vec<N> y;
    for (std::size_t i = 0; i < N; ++i)
      y[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
    return y;
  }

  Vec<N> derivative(double t) const {
    const double th = (t - t0) / h, th1 = 1 - th;
    Vec<N> d;
    for (std::size_t i = 0; i < N; ++i)
      d[i] = (r[1][i] + (1 - 2 * th) * r[2][i] + th * (2 - 3 * th) * r[3][i] +
              2 * th * th1 * (1 - 2 * th) * r[4][i]) /
             h;
    return d;
  }
};

struct Options {
  double rtol = 1e-10;
  double atol = 1e-10;
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0;         // 0: automatic
  double min_step_rel = 1e-14;     // underflow when |h| < this·max(1,|t|)
  std::size_t max_steps = 2000000;
};

enum class Status { Reached, Stopped, StepUnderflow, NonFinite };

struct Result {
  Status status = Status::Reached;
  double t = 0;
  std::size_t accepted = 0, rejected = 0;
};

namespace dp {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
inline constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                        d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                        d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
}  // namespace dp

// Adaptive Dormand–Prince 5(4) with PI step control and FSAL. `observer`
// receives every accepted DenseStep and returns false to stop.
template <std::size_t N, class Rhs, class Observer>
Result integrate(Rhs&& f, double t0, Vec<N> y, double t1, const Options& opt, Observer&& observer) {
  using namespace dp;
  if (!(opt.rtol > 0) || !(opt.atol > 0)) throw invalid_input("integrator tolerances must be positive");
  Result res;
  res.t = t0;
  if (t1 == t0) return res;
  const double dir = t1 > t0 ? 1.0 : -1.0;
  auto scale = [&](double u, double v) { return opt.atol + opt.rtol * std::max(std::abs(u), std::abs(v)); };
  auto finite = [](const Vec<N>& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };

  double t = t0;
  Vec<N> k1 = f(t, y);
  if (!finite(y) || !finite(k1)) {
    res.status = Status::NonFinite;
    return res;
  }
  Vec<N> k2, k3, k4, k5, k6, k7, yt, y1;

  double h = std::abs(opt.initial_step);
  if (h == 0) {
    // Starting step from the size of y, f and a trial Euler step.
    double d0 = 0, d1n = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk = scale(y[i], y[i]);
      d0 += (y[i] / sk) * (y[i] / sk);
      d1n += (k1[i] / sk) * (k1[i] / sk);
    }
    d0 = std::sqrt(d0 / N);
    d1n = std::sqrt(d1n / N);
    double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
    h0 = std::min(h0, std::abs(t1 - t0));
    for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + dir * h0 * k1[i];
    const Vec<N> f1 = f(t + dir * h0, yt);
    double d2 = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const double sk = scale(y[i], y[i]);
      d2 += ((f1[i] - k1[i]) / sk) * ((f1[i] - k1[i]) / sk);
    }
    d2 = std::sqrt(d2 / N) / h0;
    const double dm = std::max(d1n, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    h = std::min(100 * h0, h1);
  }
  h = std::min({h, opt.max_step, std::abs(t1 - t0)});

  double facold = 1e-4;
  bool last_rejected = false;
  constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;
  constexpr double facc1 = 5.0, facc2 = 0.1;  // growth limits 5x up, 10x down

  while (true) {
    if (res.accepted + res.rejected >= opt.max_steps)
      throw numerical_failure("integrator exceeded the maximum number of steps");
    const double min_h = opt.min_step_rel * std::max(1.0, std::abs(t));
    if (h < min_h) {
      res.status = Status::StepUnderflow;
      res.t = t;
      return res;
    }
    bool last = false;
    if (std::abs(t1 - t) <= h * (1 + 1e-12)) {
      h = std::abs(t1 - t);
      last = true;
    }
    const double hs = dir * h;
    for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * a21 * k1[i];
    k2 = f(t + c2 * hs, yt);
    for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
    k3 = f(t + c3 * hs, yt);
    for (std::size_t i = 0; i < N; ++i) yt[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    k4 = f(t + c4 * hs, yt);
    for (std::size_t i = 0; i < N; ++i)
      yt[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    k5 = f(t + c5 * hs, yt);
    for (std::size_t i = 0; i < N; ++i)
      yt[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const double tn = last ? t1 : t + hs;
    k6 = f(t + hs, yt);
    for (std::size_t i = 0; i < N; ++i)
      y1[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    k7 = f(tn, y1);

    double err = 0;
    bool ok = finite(y1) && finite(k7);
    if (ok) {
      for (std::size_t i = 0; i < N; ++i) {
        const double ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double q = ei / scale(y[i], y1[i]);
        err += q * q;
      }
      err = std::sqrt(err / N);
      ok = std::isfinite(err);
    }
    if (!ok) {
      // Overflow inside the step: shrink hard and retry.
      ++res.rejected;
      h *= 0.1;
      last_rejected = true;
      continue;
    }
    const double fac11 = std::pow(std::max(err, 1e-300), expo1);
    if (err <= 1) {
      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(facc2, std::min(facc1, fac / safe));
      double hnew = h / fac;
      facold = std::max(err, 1e-4);

      DenseStep<N> st;
      st.t0 = t;
      st.h = tn - t;
      for (std::size_t i = 0; i < N; ++i) {
        const double ydiff = y1[i] - y[i];
        const double bspl = hs * k1[i] - ydiff;
        st.r[0][i] = y[i];
        st.r[1][i] = ydiff;
        st.r[2][i] = bspl;
        st.r[3][i] = ydiff - hs * k7[i] - bspl;
        st.r[4][i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
      }
      ++res.accepted;
      t = tn;
      y = y1;
      k1 = k7;
      res.t = t;
      if (!observer(st)) {
        res.status = Status::Stopped;
        return res;
      }
      if (last) {
        res.status = Status::Reached;
        return res;
      }
      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
      h = std::min(hnew, opt.max_step);
    } else {
      ++res.rejected;
      h /= std::min(facc1, fac11 / safe);
      last_rejected = true;
    }
  }
}

// Bisection for a sign change of g on [ta, tb]; returns the crossing time
// to within tol.
template <class G>
double bisect_sign(G&& g, double ta, double tb, double tol) {
  double ga = g(ta);
  for (int it = 0; it < 200 && std::abs(tb - ta) > tol; ++it) {
    const double tm = 0.5 * (ta + tb);
    const double gm = g(tm);
    if ((gm > 0) == (ga > 0) && gm != 0) {
      ta = tm;
      ga = gm;
    } else {
      tb = tm;
    }
  }
  return 0.5 * (ta + tb);
}

}  // namespace heis::ode
