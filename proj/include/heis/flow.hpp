#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "interval.hpp"
#include "ode.hpp"
#include "profile.hpp"

namespace heis {

struct LogDerivState {
  double lambda = 0;
  double mu = 0;
  friend bool operator==(const LogDerivState&, const LogDerivState&) = default;
};

struct FlowRhs {
  double dlambda = 0;
  double dmu = 0;
  double ab_ratio = 0;  // 4a/b², must be > 0 for a metric
};

// 2λ' = -(λ² + 2μ² + 6λμ + 12Λ), 2μ' = 3λμ + 4Λ, 4a/b² = -(μ² + 2λμ + 4Λ)
inline FlowRhs flow_rhs(const LogDerivState& s, double Lambda) {
  const double l = s.lambda, m = s.mu;
  return {-0.5 * (l * l + 2 * m * m + 6 * l * m + 12 * Lambda), 0.5 * (3 * l * m + 4 * Lambda),
          -(m * m + 2 * l * m + 4 * Lambda)};
}

using Mat2x2 = std::array<std::array<double, 2>, 2>;

inline Mat2x2 flow_jacobian(const LogDerivState& s, double /*Lambda*/) {
  const double l = s.lambda, m = s.mu;
  return {{{-(l + 3 * m), -(3 * l + 2 * m)}, {1.5 * m, 1.5 * l}}};
}

inline double sign_quantity(const LogDerivState& s, double Lambda) {
  return s.mu * s.mu + 2 * s.lambda * s.mu + 4 * Lambda;
}

// μ² + λμ + 2Λ, the factor whose vanishing gives the sol1 hyperbola.
inline double k_numerator(const LogDerivState& s, double Lambda) {
  return s.mu * s.mu + s.lambda * s.mu + 2 * Lambda;
}

inline double p_lambda(const LogDerivState& s, double Lambda) {
  const double l = s.lambda, m = s.mu, lm = l + m;
  return lm * lm * lm * m + (2 * Lambda / 3) * (3 * l * l + 18 * l * m + 11 * m * m) +
         128 * Lambda * Lambda / 9;
}

inline std::array<double, 2> p_lambda_gradient(const LogDerivState& s, double Lambda) {
  const double l = s.lambda, m = s.mu, lm = l + m;
  return {3 * lm * lm * m + (2 * Lambda / 3) * (6 * l + 18 * m),
          3 * lm * lm * m + lm * lm * lm + (2 * Lambda / 3) * (18 * l + 22 * m)};
}

struct FlowInvariants {
  double p_lambda_value = 0;
  std::optional<double> K;  // empty when the sign quantity vanishes
  double sign_quantity = 0;
};

inline FlowInvariants invariants(const LogDerivState& s, double Lambda) {
  FlowInvariants inv;
  inv.p_lambda_value = p_lambda(s, Lambda);
  inv.sign_quantity = sign_quantity(s, Lambda);
  if (inv.sign_quantity != 0) {
    const double q = k_numerator(s, Lambda) / inv.sign_quantity;
    inv.K = q * q * q * inv.p_lambda_value;
  }
  return inv;
}

// Largest of the three unprimed Einstein equations evaluated on a profile.
inline double full_system_residual(const MetricProfile& prof, double Lambda, double t) {
  const ProfileJet j = prof.jet(t);
  const double l = j.da / j.a, m = j.db / j.b;
  const double dl = j.dda / j.a - l * l, dm = j.ddb / j.b - m * m;
  const double r = j.a / (j.b * j.b);
  const double e1 = 2 * dl + 4 * dm + l * l + 2 * m * m + 4 * Lambda;
  const double e2 = 2 * dl + l * l + 2 * l * m - 8 * r + 4 * Lambda;
  const double e3 = 2 * dm + 2 * m * m + l * m + 8 * r + 4 * Lambda;
  return std::max({std::abs(e1), std::abs(e2), std::abs(e3)});
}

struct FlowParams {
  double Lambda = -6;
  double tolerance = 1e-10;
  double max_step = inf;
};

// Integration runs from t0 towards t1; t1 < t0 integrates backwards.
struct TimeSpan {
  double t0 = 0;
  double t1 = 1;
};

enum class EventKind { BlowUp, StepUnderflow, MuZero, SignQuantityZero };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::BlowUp: return "blow_up";
    case EventKind::StepUnderflow: return "step_underflow";
    case EventKind::MuZero: return "mu_zero";
    case EventKind::SignQuantityZero: return "sign_quantity_zero";
  }
  return "?";
}

struct FlowEvent {
  EventKind kind;
  double t;
  LogDerivState state;
};

enum class Termination { Completed, BlowUp, StepUnderflow, Degenerate };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::Completed: return "completed";
    case Termination::BlowUp: return "blow_up";
    case Termination::StepUnderflow: return "step_underflow";
    case Termination::Degenerate: return "degenerate";
  }
  return "?";
}

class FlowTrajectory {
 public:
  double Lambda = 0;
  double t_start = 0;
  double t_stop = 0;  // end of the covered range (event time if halted)
  LogDerivState initial_state;
  FlowInvariants initial;
  Termination termination = Termination::Completed;
  std::vector<ode::DenseStep<2>> steps;
  std::vector<FlowEvent> events;
  double max_K_drift = 0;       // max relative |K - K0| over the nodes
  double K_drift_per_unit = 0;  // max over nodes of drift / max(1, |t - t0|)

  double direction() const { return t_stop >= t_start ? 1.0 : -1.0; }
  double t_min() const { return std::min(t_start, t_stop); }
  double t_max() const { return std::max(t_start, t_stop); }
  bool covers(double t) const { return t >= t_min() && t <= t_max(); }

  const ode::DenseStep<2>& step_containing(double t) const {
    if (!covers(t)) throw invalid_input("t = " + std::to_string(t) + " outside the trajectory range");
    if (steps.empty()) throw invalid_input("empty trajectory");
    const double dir = direction();
    // Steps are ordered along the integration direction.
    auto it = std::lower_bound(steps.begin(), steps.end(), t, [dir](const ode::DenseStep<2>& s, double v) {
      return dir * s.t1() < dir * v;
    });
    if (it == steps.end()) --it;
    return *it;
  }

  LogDerivState state_at(double t) const {
    if (steps.empty() && t == t_start) return initial_state;
    const auto y = step_containing(t).value(t);
    return {y[0], y[1]};
  }

  // Derivative of the dense interpolant.
  std::array<double, 2> derivative_at(double t) const { return step_containing(t).derivative(t); }

  // Node times and states: t_start followed by each accepted step end inside
  // the covered range.
  std::vector<std::pair<double, LogDerivState>> nodes() const {
    std::vector<std::pair<double, LogDerivState>> out;
    out.emplace_back(t_start, initial_state);
    for (const auto& s : steps) {
      const double t = s.t1();
      if (!covers(t)) break;
      out.emplace_back(t, LogDerivState{s.r[0][0] + s.r[1][0], s.r[0][1] + s.r[1][1]});
    }
    if (out.back().first != t_stop) out.emplace_back(t_stop, state_at(t_stop));
    return out;
  }

  std::optional<double> blowup_time() const {
    for (const auto& e : events)
      if (e.kind == EventKind::BlowUp || e.kind == EventKind::StepUnderflow) return e.t;
    return std::nullopt;
  }
};

inline double relative_K_drift(const FlowInvariants& ref, const FlowInvariants& now) {
  if (!ref.K || !now.K) return 0;
  const double scale = std::abs(*ref.K) > 1e-12 ? std::abs(*ref.K) : 1.0;
  return std::abs(*now.K - *ref.K) / scale;
}

inline FlowTrajectory integrate_flow(const LogDerivState& s0, const TimeSpan& span, const FlowParams& params) {
  if (!(params.tolerance > 0)) throw invalid_input("integrate_flow: tolerance must be positive");
  if (!std::isfinite(span.t0) || !std::isfinite(span.t1) || span.t0 == span.t1)
    throw invalid_input("integrate_flow: invalid time span");
  if (!std::isfinite(s0.lambda) || !std::isfinite(s0.mu))
    throw invalid_input("integrate_flow: initial state must be finite");
  const double threshold = 1.0 / params.tolerance;
  if (std::abs(s0.lambda) + std::abs(s0.mu) > threshold)
    throw invalid_input("integrate_flow: initial state is already beyond the blow-up threshold");

  const double Lambda = params.Lambda;
  FlowTrajectory tr;
  tr.Lambda = Lambda;
  tr.t_start = span.t0;
  tr.t_stop = span.t0;
  tr.initial_state = s0;
  tr.initial = invariants(s0, Lambda);

  auto rhs = [Lambda](double, const ode::Vec<2>& y) {
    const FlowRhs r = flow_rhs({y[0], y[1]}, Lambda);
    return ode::Vec<2>{r.dlambda, r.dmu};
  };
  const double t_res = 1e-12;
  bool halted = false;
  auto observer = [&](const ode::DenseStep<2>& st) {
    tr.steps.push_back(st);
    const double ta = st.t0, tb = st.t1();
    const auto ya = st.r[0];
    const auto yb = st.value(tb);
    auto state = [&st](double t) {
      const auto y = st.value(t);
      return LogDerivState{y[0], y[1]};
    };
    // μ = 0 crossings do not stop the flow.
    if ((ya[1] > 0 && yb[1] <= 0) || (ya[1] < 0 && yb[1] >= 0)) {
      const double tc = ode::bisect_sign([&](double t) { return st.value(t)[1]; }, ta, tb, t_res);
      tr.events.push_back({EventKind::MuZero, tc, state(tc)});
    }
    const double qa = sign_quantity({ya[0], ya[1]}, Lambda), qb = sign_quantity({yb[0], yb[1]}, Lambda);
    if (qa != 0 && (qa > 0) != (qb > 0)) {
      const double tc = ode::bisect_sign([&](double t) { return sign_quantity(state(t), Lambda); }, ta, tb, t_res);
      tr.events.push_back({EventKind::SignQuantityZero, tc, state(tc)});
      tr.t_stop = tc;
      tr.termination = Termination::Degenerate;
      halted = true;
      return false;
    }
    if (std::abs(yb[0]) + std::abs(yb[1]) > threshold) {
      const double tc = ode::bisect_sign(
          [&](double t) {
            const auto y = st.value(t);
            return std::abs(y[0]) + std::abs(y[1]) - threshold;
          },
          ta, tb, t_res);
      tr.events.push_back({EventKind::BlowUp, tc, state(tc)});
      tr.t_stop = tc;
      tr.termination = Termination::BlowUp;
      halted = true;
      return false;
    }
    tr.t_stop = tb;
    const FlowInvariants inv = invariants({yb[0], yb[1]}, Lambda);
    const double drift = relative_K_drift(tr.initial, inv);
    tr.max_K_drift = std::max(tr.max_K_drift, drift);
    tr.K_drift_per_unit = std::max(tr.K_drift_per_unit, drift / std::max(1.0, std::abs(tb - span.t0)));
    return true;
  };
  ode::Options opt;
  opt.rtol = params.tolerance;
  opt.atol = params.tolerance;
  opt.max_step = params.max_step;
  const ode::Result r = ode::integrate<2>(rhs, span.t0, {s0.lambda, s0.mu}, span.t1, opt, observer);
  if (r.status == ode::Status::StepUnderflow && !halted) {
    tr.t_stop = r.t;
    tr.events.push_back({EventKind::StepUnderflow, r.t, tr.state_at(r.t)});
    tr.termination = Termination::StepUnderflow;
  } else if (r.status == ode::Status::NonFinite) {
    throw numerical_failure("integrate_flow: non-finite state at t = " + std::to_string(r.t));
  }
  return tr;
}

inline FlowTrajectory integrate_flow(const LogDerivState& s0, double Lambda, const TimeSpan& span,
                                     FlowParams params) {
  params.Lambda = Lambda;
  return integrate_flow(s0, span, params);
}

// a and b by quadrature of λ and μ along the dense output, with b(t0) = 1 and
// a(t0) fixed by 4a/b² = -(μ² + 2λμ + 4Λ) at the initial time.
inline MetricProfile reconstruct_profile(const FlowTrajectory& tr) {
  if (tr.steps.empty()) throw invalid_input("reconstruct_profile: empty trajectory");
  for (const auto& [t, s] : tr.nodes())
    if (!(sign_quantity(s, tr.Lambda) < 0))
      throw invalid_input("reconstruct_profile: sign quantity >= 0 at t = " + std::to_string(t) +
                          " (not a Riemannian metric)");
  struct Data {
    FlowTrajectory tr;
    std::vector<std::array<double, 2>> cumulative;  // ∫λ, ∫μ from t_start to each step start
    double a0;
  };
  auto d = std::make_shared<Data>();
  d->tr = tr;
  d->a0 = -sign_quantity(tr.initial_state, tr.Lambda) / 4;
  static const double xg[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double wg[3] = {5.0 / 9, 8.0 / 9, 5.0 / 9};
  // The interpolant is a quartic in t on each step, so 3-point Gauss is exact.
  auto partial = [](const ode::DenseStep<2>& st, double t) {
    std::array<double, 2> s{0, 0};
    const double half = 0.5 * (t - st.t0), mid = 0.5 * (t + st.t0);
    for (int q = 0; q < 3; ++q) {
      const auto y = st.value(mid + half * xg[q]);
      s[0] += half * wg[q] * y[0];
      s[1] += half * wg[q] * y[1];
    }
    return s;
  };
  std::array<double, 2> acc{0, 0};
  for (const auto& st : d->tr.steps) {
    d->cumulative.push_back(acc);
    const auto p = partial(st, st.t1());
    acc[0] += p[0];
    acc[1] += p[1];
  }
  const double Lambda = tr.Lambda;
  Interval dom{tr.t_min(), tr.t_max()};
  return MetricProfile(dom, [d, partial, Lambda](double t) {
    const auto& st = d->tr.step_containing(t);
    const std::size_t idx = static_cast<std::size_t>(&st - d->tr.steps.data());
    const auto p = partial(st, t);
    const double Il = d->cumulative[idx][0] + p[0], Im = d->cumulative[idx][1] + p[1];
    const auto y = st.value(t);
    const LogDerivState s{y[0], y[1]};
    const FlowRhs f = flow_rhs(s, Lambda);
    const double a = d->a0 * std::exp(Il), b = std::exp(Im);
    return ProfileJet{a, s.lambda * a, (f.dlambda + s.lambda * s.lambda) * a,
                      b, s.mu * b, (f.dmu + s.mu * s.mu) * b};
  });
}

inline MetricProfile reconstruct_profile(const FlowTrajectory& tr, double Lambda) {
  if (Lambda != tr.Lambda) throw invalid_input("reconstruct_profile: Λ differs from the trajectory's");
  return reconstruct_profile(tr);
}

// ã(t) = a(kt)/k², b̃(t) = b(kt)/k²; Einstein constant Λ becomes k²Λ.
inline MetricProfile homothety_rescale(const MetricProfile& prof, double k) {
  if (k == 0 || !std::isfinite(k)) throw invalid_input("homothety_rescale: k must be nonzero and finite");
  const Interval d = prof.domain();
  Interval nd = k > 0 ? Interval{d.lo / k, d.hi / k} : Interval{d.hi / k, d.lo / k};
  nlohmann::json desc = nullptr;
  if (!prof.descriptor().is_null())
    desc = {{"kind", "homothety"}, {"k", k}, {"base", prof.descriptor()}};
  return MetricProfile(
      nd,
      [prof, k](double t) {
        const ProfileJet j = prof.jet(k * t);
        const double k2 = k * k;
        return ProfileJet{j.a / k2, j.da / k, j.dda, j.b / k2, j.db / k, j.ddb};
      },
      std::move(desc));
}

enum class Stability { StableNode, UnstableNode, Saddle, StableFocus, UnstableFocus, Center, NonHyperbolic };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::StableNode: return "stable_node";
    case Stability::UnstableNode: return "unstable_node";
    case Stability::Saddle: return "saddle";
    case Stability::StableFocus: return "stable_focus";
    case Stability::UnstableFocus: return "unstable_focus";
    case Stability::Center: return "center";
    case Stability::NonHyperbolic: return "non_hyperbolic";
  }
  return "?";
}

struct FixedPoint {
  LogDerivState state;
  bool metric_valid = false;  // sign quantity < 0
  double sign_quantity = 0;
  Mat2x2 jacobian{};
  std::array<std::complex<double>, 2> eigenvalues{};
  Stability stability = Stability::NonHyperbolic;
};

inline std::array<std::complex<double>, 2> eigenvalues(const Mat2x2& J) {
  const double tr = J[0][0] + J[1][1], det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
  const double disc = tr * tr / 4 - det;
  if (disc >= 0) {
    const double r = std::sqrt(disc);
    // Larger-magnitude root first, the other from det to avoid cancellation.
    const double big = tr / 2 + (tr >= 0 ? r : -r);
    const double small = big != 0 ? det / big : tr / 2 - (tr >= 0 ? r : -r);
    return {std::complex<double>(std::min(big, small)), std::complex<double>(std::max(big, small))};
  }
  const double im = std::sqrt(-disc);
  return {std::complex<double>(tr / 2, -im), std::complex<double>(tr / 2, im)};
}

inline Stability stability_of(const Mat2x2& J) {
  const auto ev = eigenvalues(J);
  const double re0 = ev[0].real(), re1 = ev[1].real();
  const bool complex = ev[0].imag() != 0;
  if (re0 == 0 || re1 == 0) return complex ? Stability::Center : Stability::NonHyperbolic;
  if (complex) return re0 < 0 ? Stability::StableFocus : Stability::UnstableFocus;
  if (re0 < 0 && re1 < 0) return Stability::StableNode;
  if (re0 > 0 && re1 > 0) return Stability::UnstableNode;
  return Stability::Saddle;
}

inline std::vector<FixedPoint> fixed_points_and_stability(double Lambda) {
  if (!(Lambda < 0)) throw invalid_input("fixed_points_and_stability: needs Λ < 0");
  const double s = std::sqrt(-2 * Lambda / 3);
  const double d = 2 * std::sqrt(-Lambda) / std::sqrt(3.0);
  std::vector<FixedPoint> out;
  const std::array<LogDerivState, 4> pts{LogDerivState{2 * s, s}, LogDerivState{-2 * s, -s},
                                         LogDerivState{d, d}, LogDerivState{-d, -d}};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const LogDerivState st = pts[i];
    FixedPoint fp;
    fp.state = st;
    fp.sign_quantity = sign_quantity(st, Lambda);
    fp.metric_valid = i < 2;
    fp.jacobian = flow_jacobian(st, Lambda);
    fp.eigenvalues = eigenvalues(fp.jacobian);
    fp.stability = stability_of(fp.jacobian);
    out.push_back(fp);
  }
  return out;
}

}  // namespace heis
