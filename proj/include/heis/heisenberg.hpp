#pragma once

#include <array>

namespace heis {

struct HeisenbergElement {
  double x = 0, y = 0, z = 0;
  friend bool operator==(const HeisenbergElement&, const HeisenbergElement&) = default;
};

// (x,y,z)·(a,b,c) = (a+x, b+y, c+z+ya-xb)
constexpr HeisenbergElement heisenberg_product(const HeisenbergElement& p,
                                               const HeisenbergElement& q) {
  return {q.x + p.x, q.y + p.y, q.z + p.z + p.y * q.x - p.x * q.y};
}

constexpr HeisenbergElement heisenberg_inverse(const HeisenbergElement& p) {
  return {-p.x, -p.y, -p.z};
}

using Mat2 = std::array<std::array<double, 2>, 2>;

// (v, z) -> (Av, det(A) z) is an automorphism for every A in GL(2).
constexpr HeisenbergElement apply_linear(const Mat2& A, const HeisenbergElement& p) {
  const double det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
  return {A[0][0] * p.x + A[0][1] * p.y, A[1][0] * p.x + A[1][1] * p.y, det * p.z};
}

using Vec3 = std::array<double, 3>;

// Left-invariant frame e1 = ∂x + y∂z, e2 = ∂y - x∂z, e3 = ∂z and its dual
// coframe dx, dy, dz + x dy - y dx, in (x,y,z) components.
struct Frame {
  std::array<Vec3, 3> e;
  std::array<Vec3, 3> coframe;
};

constexpr Frame frame_at(const HeisenbergElement& p) {
  Frame f{};
  f.e[0] = {1, 0, p.y};
  f.e[1] = {0, 1, -p.x};
  f.e[2] = {0, 0, 1};
  f.coframe[0] = {1, 0, 0};
  f.coframe[1] = {0, 1, 0};
  f.coframe[2] = {-p.y, p.x, 1};
  return f;
}

// Flow of e_i for time s is right translation by the one-parameter subgroup.
constexpr HeisenbergElement frame_flow(int i, double s, const HeisenbergElement& p) {
  HeisenbergElement g{};
  if (i == 0) g.x = s;
  else if (i == 1) g.y = s;
  else g.z = s;
  return heisenberg_product(p, g);
}

// φ^j_{-h} φ^i_{-h} φ^j_h φ^i_h (p) = p + h²[e_i, e_j](p) + O(h³).
constexpr HeisenbergElement flow_commutator(int i, int j, double h, const HeisenbergElement& p) {
  auto q = frame_flow(i, h, p);
  q = frame_flow(j, h, q);
  q = frame_flow(i, -h, q);
  return frame_flow(j, -h, q);
}

}  // namespace heis
