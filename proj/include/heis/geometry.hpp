#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "error.hpp"
#include "heisenberg.hpp"
#include "linalg.hpp"
#include "profile.hpp"

namespace heis {

struct SpacetimePoint {
  double t = 0;
  HeisenbergElement h;
};

// Γ[k][i][j] is the coefficient of ∂_k in ∇_{∂_i}∂_j; coordinates (t,x,y,z).
using Christoffel = std::array<Mat4, 4>;

struct RicciComponents {
  Mat4 ricci{};
  Mat4 metric{};
};

inline Mat4 metric_components(const ProfileJet& j, double x, double y) {
  const double a = j.a, b = j.b;
  Mat4 g{};
  g[0][0] = 1;
  g[1][1] = b + a * y * y;
  g[2][2] = b + a * x * x;
  g[3][3] = a;
  g[1][2] = g[2][1] = -a * x * y;
  g[1][3] = g[3][1] = -a * y;
  g[2][3] = g[3][2] = a * x;
  return g;
}

inline Mat4 metric_at(const MetricProfile& prof, const SpacetimePoint& p) {
  return metric_components(prof.jet(p.t), p.h.x, p.h.y);
}

// The cross terms grow like a·x², so far from the axis the metric matrix is
// badly conditioned relative to b.
inline bool conditioning_warning(const MetricProfile& prof, const SpacetimePoint& p) {
  const ProfileJet j = prof.jet(p.t);
  const double r2 = std::max(p.h.x * p.h.x, p.h.y * p.h.y);
  return j.a * r2 > 1e8 * j.b;
}

// σ(t,x,y,z) = (t,y,x,-z)
inline SpacetimePoint sigma_involution(const SpacetimePoint& p) {
  return {p.t, {p.h.y, p.h.x, -p.h.z}};
}

// (σ*g)_p = Jᵀ g_{σ(p)} J with J the (constant) Jacobian of σ.
inline Mat4 sigma_pullback(const MetricProfile& prof, const SpacetimePoint& p) {
  Mat4 J{};
  J[0][0] = 1;
  J[1][2] = 1;
  J[2][1] = 1;
  J[3][3] = -1;
  return matmul(transpose(J), matmul(metric_at(prof, sigma_involution(p)), J));
}

inline Christoffel christoffel(const MetricProfile& prof, const SpacetimePoint& p) {
  const ProfileJet j = prof.jet(p.t);
  const double a = j.a, b = j.b, da = j.da, db = j.db;
  const double x = p.h.x, y = p.h.y;
  const double la = da / a, lb = db / b, r = a / b;
  enum { T = 0, X = 1, Y = 2, Z = 3 };
  Christoffel G{};
  auto set = [&G](int i, int k, int l, double v) {
    G[i][k][l] = v;
    G[i][l][k] = v;
  };
  // ∇_t ∂_t = 0
  // ∇_t ∂_z = ½(ln a)' ∂_z
  set(Z, T, Z, 0.5 * la);
  // ∇_z ∂_z = -½ a' ∂_t
  set(T, Z, Z, -0.5 * da);
  // ∇_t ∂_x = (y/2)(ln b/a)' ∂_z + ½(ln b)' ∂_x
  set(Z, T, X, 0.5 * y * (lb - la));
  set(X, T, X, 0.5 * lb);
  // ∇_t ∂_y = (x/2)(ln a/b)' ∂_z + ½(ln b)' ∂_y
  set(Z, T, Y, 0.5 * x * (la - lb));
  set(Y, T, Y, 0.5 * lb);
  // ∇_z ∂_x = ½a'y ∂_t - (a/b)x ∂_z + (a/b) ∂_y
  set(T, Z, X, 0.5 * da * y);
  set(Z, Z, X, -r * x);
  set(Y, Z, X, r);
  // ∇_z ∂_y = -½a'x ∂_t - (a/b)y ∂_z - (a/b) ∂_x
  set(T, Z, Y, -0.5 * da * x);
  set(Z, Z, Y, -r * y);
  set(X, Z, Y, -r);
  // ∇_x ∂_x = -½(a'y² + b') ∂_t + 2(a/b)xy ∂_z - 2(a/b)y ∂_y
  set(T, X, X, -0.5 * (da * y * y + db));
  set(Z, X, X, 2 * r * x * y);
  set(Y, X, X, -2 * r * y);
  // ∇_y ∂_y = -½(a'x² + b') ∂_t - 2(a/b)xy ∂_z - 2(a/b)x ∂_x
  set(T, Y, Y, -0.5 * (da * x * x + db));
  set(Z, Y, Y, -2 * r * x * y);
  set(X, Y, Y, -2 * r * x);
  // ∇_x ∂_y = ½a'xy ∂_t + (a/b)(y² - x²) ∂_z + (a/b)y ∂_x + (a/b)x ∂_y
  set(T, X, Y, 0.5 * da * x * y);
  set(Z, X, Y, r * (y * y - x * x));
  set(X, X, Y, r * y);
  set(Y, X, Y, r * x);
  return G;
}

inline RicciComponents ricci_analytic(const MetricProfile& prof, const SpacetimePoint& p) {
  const ProfileJet j = prof.jet(p.t);
  const double a = j.a, b = j.b, da = j.da, db = j.db, dda = j.dda, ddb = j.ddb;
  const double x = p.h.x, y = p.h.y;
  const double la = da / a, lb = db / b;          // (ln a)', (ln b)'
  const double dla = dda / a - la * la;           // (ln a)''
  const double dlb = ddb / b - lb * lb;           // (ln b)''
  const double r = a / b;
  RicciComponents out;
  out.metric = metric_components(j, x, y);
  Mat4& R = out.ricci;
  R[0][0] = -(0.25 * la * la + 0.5 * lb * lb + 0.5 * dla + dlb) * out.metric[0][0];
  R[1][1] = -0.5 * (dda * y * y + ddb) - 0.25 * la * db + 2 * r * r * y * y +
            0.25 * y * y * la * da - 0.5 * da * y * y * lb - 2 * r;
  R[2][2] = -0.5 * (dda * x * x + ddb) - 0.25 * la * db + 2 * r * r * x * x +
            0.25 * x * x * la * da - 0.5 * da * x * x * lb - 2 * r;
  R[3][3] = (-dda / (2 * a) + da * da / (4 * a * a) - da * db / (2 * a * b) + 2 * a / (b * b)) *
            out.metric[3][3];
  R[1][2] = 0.5 * dda * x * y - da * da / (4 * a) * x * y - 2 * r * r * x * y + 0.5 * da * lb * x * y;
  R[1][3] = 0.5 * dda * y + 0.25 * y * da * (lb - la) - 2 * r * r * y + 0.25 * da * lb * y;
  R[2][3] = -(0.5 * dda * x + 0.25 * x * da * (lb - la) - 2 * r * r * x + 0.25 * da * lb * x);
  R[2][1] = R[1][2];
  R[3][1] = R[1][3];
  R[3][2] = R[2][3];
  return out;
}

inline double einstein_residual(const MetricProfile& prof, double lambda_const,
                                const SpacetimePoint& p) {
  const RicciComponents rc = ricci_analytic(prof, p);
  return max_abs(rc.ricci - lambda_const * rc.metric);
}

struct FdRicci {
  RicciComponents components;
  double step = 0;
  // Estimated round-off in the second differences, relative to |g|.
  double condition_estimate = 0;
  bool precision_warning = false;
};

inline double default_fd_step(const SpacetimePoint& p) { return 1e-4 * std::max(1.0, std::abs(p.t)); }

// Ricci tensor from central differences of metric_at alone, through the
// generic Christoffel-from-metric formula.
inline FdRicci ricci_fd_oracle(const MetricProfile& prof, const SpacetimePoint& p, double step) {
  if (!(step > 0)) throw invalid_input("FD step must be positive");
  if (!prof.contains(p.t - 2 * step) || !prof.contains(p.t + 2 * step))
    throw invalid_input("FD step too large for the profile domain at t = " + std::to_string(p.t));
  const double h = step;
  auto g_at = [&](const std::array<double, 4>& q) {
    return metric_at(prof, SpacetimePoint{q[0], {q[1], q[2], q[3]}});
  };
  const std::array<double, 4> q0{p.t, p.h.x, p.h.y, p.h.z};
  auto shifted = [&](int m, double sm, int n = -1, double sn = 0) {
    auto q = q0;
    q[m] += sm;
    if (n >= 0) q[n] += sn;
    return g_at(q);
  };
  const Mat4 g = g_at(q0);
  std::array<Mat4, 4> dg{};                     // dg[m][i][j] = ∂_m g_ij
  std::array<std::array<Mat4, 4>, 4> ddg{};     // ddg[m][n][i][j] = ∂_m ∂_n g_ij
  std::array<Mat4, 4> gp{}, gm{};
  for (int m = 0; m < 4; ++m) {
    gp[m] = shifted(m, h);
    gm[m] = shifted(m, -h);
  }
  for (int m = 0; m < 4; ++m)
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k) {
        dg[m][i][k] = (gp[m][i][k] - gm[m][i][k]) / (2 * h);
        ddg[m][m][i][k] = (gp[m][i][k] - 2 * g[i][k] + gm[m][i][k]) / (h * h);
      }
  for (int m = 0; m < 4; ++m)
    for (int n = m + 1; n < 4; ++n) {
      const Mat4 pp = shifted(m, h, n, h), pm = shifted(m, h, n, -h);
      const Mat4 mp = shifted(m, -h, n, h), mm = shifted(m, -h, n, -h);
      for (int i = 0; i < 4; ++i)
        for (int k = 0; k < 4; ++k) {
          const double v = (pp[i][k] - pm[i][k] - mp[i][k] + mm[i][k]) / (4 * h * h);
          ddg[m][n][i][k] = v;
          ddg[n][m][i][k] = v;
        }
    }
  const Mat4 gi = inverse(g);
  // Christoffel symbols of the first kind and their derivatives.
  // c1[l][i][j] = ½(∂_i g_lj + ∂_j g_li - ∂_l g_ij)
  std::array<Mat4, 4> c1{};
  std::array<std::array<Mat4, 4>, 4> dc1{};  // dc1[m][l][i][j] = ∂_m c1[l][i][j]
  for (int l = 0; l < 4; ++l)
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 4; ++k) {
        c1[l][i][k] = 0.5 * (dg[i][l][k] + dg[k][l][i] - dg[l][i][k]);
        for (int m = 0; m < 4; ++m)
          dc1[m][l][i][k] = 0.5 * (ddg[m][i][l][k] + ddg[m][k][l][i] - ddg[m][l][i][k]);
      }
  // ∂_m g^{kl} = -g^{ka} ∂_m g_ab g^{bl}
  std::array<Mat4, 4> dgi{};
  for (int m = 0; m < 4; ++m) dgi[m] = -1.0 * matmul(gi, matmul(dg[m], gi));
  Christoffel G{};
  std::array<Christoffel, 4> dG{};  // dG[m][k][i][j] = ∂_m Γ^k_ij
  for (int k = 0; k < 4; ++k)
    for (int i = 0; i < 4; ++i)
      for (int jj = 0; jj < 4; ++jj) {
        double s = 0;
        for (int l = 0; l < 4; ++l) s += gi[k][l] * c1[l][i][jj];
        G[k][i][jj] = s;
        for (int m = 0; m < 4; ++m) {
          double d = 0;
          for (int l = 0; l < 4; ++l) d += dgi[m][k][l] * c1[l][i][jj] + gi[k][l] * dc1[m][l][i][jj];
          dG[m][k][i][jj] = d;
        }
      }
  // R_ij = ∂_k Γ^k_ij - ∂_j Γ^k_ik + Γ^k_kl Γ^l_ij - Γ^k_jl Γ^l_ik
  FdRicci out;
  out.step = h;
  out.components.metric = g;
  Mat4& R = out.components.ricci;
  for (int i = 0; i < 4; ++i)
    for (int jj = 0; jj < 4; ++jj) {
      double s = 0;
      for (int k = 0; k < 4; ++k) {
        s += dG[k][k][i][jj] - dG[jj][k][i][k];
        for (int l = 0; l < 4; ++l) s += G[k][k][l] * G[l][i][jj] - G[k][jj][l] * G[l][i][k];
      }
      R[i][jj] = s;
    }
  const double cond = max_abs(g) * max_abs(gi);
  out.condition_estimate = cond * std::numeric_limits<double>::epsilon() / (h * h);
  out.precision_warning = out.condition_estimate > 1e-4;
  return out;
}

inline FdRicci ricci_fd_oracle(const MetricProfile& prof, const SpacetimePoint& p) {
  return ricci_fd_oracle(prof, p, default_fd_step(p));
}

}  // namespace heis
