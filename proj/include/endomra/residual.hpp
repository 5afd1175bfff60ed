// Residuals carry how they were obtained: exact arithmetic (value 0 means
// identically zero) or floating point with an error bound.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "endomra/exact.hpp"

namespace endomra {

struct Residual {
  double value = 0.0;
  bool exact = true;
  double bound = 0.0;  // additional error not reflected in value (truncation tails)
  std::string note;

  bool is_exact_zero() const { return exact && value == 0.0 && bound == 0.0; }
  /// value + bound <= tol
  bool within(double tol) const { return value + bound <= tol; }
};

/// |diff| for an exactly computed difference; nonzero differences never round to 0.
template <typename T>
Residual exact_residual(const T& diff) {
  Residual r;
  if constexpr (requires { diff.is_zero(); }) {
    if (diff.is_zero()) return r;
  } else {
    if (diff == T(0)) return r;
  }
  double v = 0;
  if constexpr (requires { diff.to_complex(); })
    v = std::abs(diff.to_complex());
  else
    v = std::abs(to_double(diff));
  r.value = std::max(v, std::numeric_limits<double>::denorm_min());
  return r;
}

inline Residual max_residual(const Residual& a, const Residual& b) {
  Residual r;
  r.value = std::max(a.value, b.value);
  r.exact = a.exact && b.exact;
  r.bound = std::max(a.bound, b.bound);
  r.note = a.note.empty() ? b.note : a.note;
  return r;
}

}  // namespace endomra
