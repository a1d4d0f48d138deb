#pragma once

#include <array>
#include <cmath>
#include <functional>

#include "geometry.hpp"
#include "linalg.hpp"

namespace heis {

// A 2-form as an antisymmetric coordinate matrix: ω = Σ_{i<j} ω_ij dx^i∧dx^j.
using TwoForm = std::function<Mat4(const SpacetimePoint&)>;

inline int levi_civita(int i, int j, int k, int l) {
  const int p[4] = {i, j, k, l};
  int sign = 1;
  for (int u = 0; u < 4; ++u)
    for (int v = u + 1; v < 4; ++v) {
      if (p[u] == p[v]) return 0;
      if (p[u] > p[v]) sign = -sign;
    }
  return sign;
}

// Hodge star for the orientation dt∧dx∧dy∧dz:
// (*ω)_ij = ½ √det g ε_ijkl ω^kl.
inline Mat4 hodge_star(const Mat4& omega, const Mat4& g) {
  const auto [gi, det] = inverse_det(g);
  const Mat4 up = matmul(gi, matmul(omega, gi));  // ω^kl (g symmetric)
  const double vol = std::sqrt(det);
  Mat4 r{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double s = 0;
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) s += levi_civita(i, j, k, l) * up[k][l];
      r[i][j] = 0.5 * vol * s;
    }
  return r;
}

// Coefficient of dt∧dx∧dy∧dz in ω∧η.
inline double wedge_top(const Mat4& w, const Mat4& e) {
  return w[0][1] * e[2][3] - w[0][2] * e[1][3] + w[0][3] * e[1][2] + w[1][2] * e[0][3] -
         w[1][3] * e[0][2] + w[2][3] * e[0][1];
}

// Components (dω)_{ijk}, i<j<k, from central differences; returns the largest.
inline double exterior_derivative_fd(const TwoForm& w, const SpacetimePoint& p, double h) {
  auto at = [&](int m, double s) {
    std::array<double, 4> q{p.t, p.h.x, p.h.y, p.h.z};
    q[m] += s;
    return w(SpacetimePoint{q[0], {q[1], q[2], q[3]}});
  };
  std::array<Mat4, 4> d{};
  for (int m = 0; m < 4; ++m) {
    const Mat4 wp = at(m, h), wm = at(m, -h);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) d[m][i][j] = (wp[i][j] - wm[i][j]) / (2 * h);
  }
  double worst = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (int k = j + 1; k < 4; ++k)
        worst = std::max(worst, std::abs(d[i][j][k] - d[j][i][k] + d[k][i][j]));
  return worst;
}

}  // namespace heis
