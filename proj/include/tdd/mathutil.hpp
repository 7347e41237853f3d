#ifndef TDD_MATHUTIL_HPP
#define TDD_MATHUTIL_HPP

#include <algorithm>
#include <cmath>

namespace tdd {

/// Global rounding rule: round(x) = floor(x + 0.5). Used everywhere a
/// position or dimension is rounded (pyramid sizes, flow sampling,
/// map-coordinate lookup) so results are reproducible bit-for-bit.
inline int round_half_up(double x) {
  return static_cast<int>(std::floor(x + 0.5));
}

inline int clamp_int(int v, int lo, int hi) {
  return std::max(lo, std::min(hi, v));
}

}  // namespace tdd

#endif  // TDD_MATHUTIL_HPP
