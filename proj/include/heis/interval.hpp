#pragma once

#include <cmath>
#include <limits>

namespace heis {

inline constexpr double inf = std::numeric_limits<double>::infinity();

// Open interval ]lo, hi[. Either end may be infinite.
struct Interval {
  double lo = -inf;
  double hi = inf;

  bool contains(double t) const { return t > lo && t < hi; }
  bool bounded_below() const { return std::isfinite(lo); }
  bool bounded_above() const { return std::isfinite(hi); }
  double length() const { return hi - lo; }
};

}  // namespace heis
