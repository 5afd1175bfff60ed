// The N-fold circle map x -> N x mod 1 on rational angles, plus the base-N
// digit coding that turns it into the full shift on N letters.
#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "endomra/exact.hpp"
#include "endomra/sft.hpp"

namespace endomra {

struct TorusPoint {
  Rational angle;  // in [0, 1)
  friend bool operator==(const TorusPoint&, const TorusPoint&) = default;
  friend auto operator<=>(const TorusPoint& a, const TorusPoint& b) {
    if (a.angle < b.angle) return std::strong_ordering::less;
    if (a.angle > b.angle) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
};

inline Rational frac(const Rational& q) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  BigInt n = numerator(q), d = denominator(q);
  BigInt r = n % d;
  if (r < 0) r += d;
  return Rational(r, d);
}

class TorusSystem {
 public:
  explicit TorusSystem(int degree) : degree_(degree) {
    if (degree < 2) throw ValidationError("torus degree must be >= 2");
    if (degree > 36) throw ValidationError("torus degree must be <= 36");
  }
  int degree() const { return degree_; }

  TorusPoint point(const Rational& angle) const {
    if (angle < 0 || angle >= 1) throw ValidationError("angle must lie in [0, 1): " + to_string(angle));
    return {angle};
  }
  void validate(const TorusPoint& x) const { point(x.angle); }

  /// The digit shift that codes this map.
  SftSystem digit_shift() const { return SftSystem::full_shift(degree_); }

  friend bool operator==(const TorusSystem&, const TorusSystem&) = default;

 private:
  int degree_;
};

inline TorusPoint apply(const TorusSystem& sys, const TorusPoint& x) {
  sys.validate(x);
  return {frac(x.angle * sys.degree())};
}

/// (x + d)/N for d = 0..N-1, increasing.
inline std::vector<TorusPoint> preimages(const TorusSystem& sys, const TorusPoint& x) {
  sys.validate(x);
  std::vector<TorusPoint> out;
  for (int d = 0; d < sys.degree(); ++d) out.push_back({(x.angle + d) / sys.degree()});
  return out;
}

inline int fiber_count_after(const TorusSystem& sys, const TorusPoint& x) {
  sys.validate(x);
  return sys.degree();
}

/// Canonical base-N expansion (never ending in (N-1)^infinity).
inline SftPoint to_digits(const TorusSystem& sys, const TorusPoint& x) {
  sys.validate(x);
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  const BigInt den = denominator(x.angle);
  BigInt rem = numerator(x.angle);
  std::map<BigInt, std::size_t> seen;
  Word digits;
  while (!seen.count(rem)) {
    seen[rem] = digits.size();
    rem *= sys.degree();
    digits.push_back(static_cast<int>(BigInt(rem / den).convert_to<long long>()));
    rem %= den;
  }
  std::size_t start = seen[rem];
  return canonical(SftPoint{Word(digits.begin(), digits.begin() + static_cast<std::ptrdiff_t>(start)),
                            Word(digits.begin() + static_cast<std::ptrdiff_t>(start), digits.end())});
}

/// Value of the digit string in [0, 1]; (N-1)^infinity codes 1.
inline Rational digits_value(const TorusSystem& sys, const SftPoint& d) {
  const int n = sys.degree();
  BigInt pre = 0, per = 0, scale_pre = 1, scale_per = 1;
  for (int l : d.prefix) {
    pre = pre * n + l;
    scale_pre *= n;
  }
  for (int l : d.period) {
    per = per * n + l;
    scale_per *= n;
  }
  return (Rational(pre) + Rational(per, scale_per - 1)) / Rational(scale_pre);
}

inline TorusPoint from_digits(const TorusSystem& sys, const SftPoint& d) {
  return {frac(digits_value(sys, d))};
}

/// Primitive cycles of length <= p_max: orbits of l/(N^p - 1), each starting
/// at its least angle, with x_i = r^{p-i}(x_0).
inline std::vector<Cycle<TorusPoint>> enumerate_cycles(const TorusSystem& sys, std::size_t p_max) {
  if (p_max < 1) throw PreconditionError("p_max must be >= 1");
  std::vector<Cycle<TorusPoint>> out;
  std::set<TorusPoint> covered;
  BigInt np = 1;
  for (std::size_t p = 1; p <= p_max; ++p) {
    np *= sys.degree();
    const BigInt den = np - 1;
    for (BigInt l = 0; l < den; ++l) {
      TorusPoint x0{Rational(l, den)};
      if (covered.count(x0)) continue;
      std::vector<TorusPoint> orbit{x0};
      TorusPoint y = apply(sys, x0);
      while (!(y == x0)) {
        orbit.push_back(y);
        y = apply(sys, y);
      }
      for (const auto& z : orbit) covered.insert(z);
      if (orbit.size() != p) continue;
      // x0 is the least point of its orbit since l increases
      Cycle<TorusPoint> c;
      c.points.push_back(x0);
      for (std::size_t i = 1; i < p; ++i) c.points.push_back(orbit[p - i]);
      out.push_back(std::move(c));
    }
  }
  return out;
}

inline void validate_cycle(const TorusSystem& sys, const Cycle<TorusPoint>& c) {
  const std::size_t p = c.length();
  if (p == 0) throw ValidationError("cycle must be nonempty");
  std::set<TorusPoint> distinct;
  for (const auto& x : c.points) {
    sys.validate(x);
    distinct.insert(x);
  }
  if (distinct.size() != p) throw ValidationError("cycle points must be distinct");
  for (std::size_t i = 0; i < p; ++i)
    if (!(apply(sys, c.at(static_cast<long long>(i) + 1)) == c.at(static_cast<long long>(i))))
      throw ValidationError("cycle points must satisfy r(x_{i+1}) = x_i");
}

inline Cycle<TorusPoint> cycle_through(const TorusSystem& sys, const TorusPoint& x0) {
  sys.validate(x0);
  std::vector<TorusPoint> orbit{x0};
  for (TorusPoint y = apply(sys, x0); !(y == x0); y = apply(sys, y)) {
    orbit.push_back(y);
    if (orbit.size() > 100000) throw ValidationError("point is not periodic");
  }
  const std::size_t p = orbit.size();
  Cycle<TorusPoint> c;
  c.points.push_back(x0);
  for (std::size_t i = 1; i < p; ++i) c.points.push_back(orbit[p - i]);
  return c;
}

inline Rational circle_distance(const Rational& a, const Rational& b) {
  Rational d = frac(a - b);
  return d > Rational(1, 2) ? 1 - d : d;
}

/// d(N^p x, x_i) = N^p d(x, x_i) when d(x, x_i) < 1/(2 N^p).
inline RepellingCertificate is_repelling(const TorusSystem& sys, const Cycle<TorusPoint>& cycle) {
  validate_cycle(sys, cycle);
  Rational np = 1;
  for (std::size_t i = 0; i < cycle.length(); ++i) np *= sys.degree();
  return {true, 1 / np, 1 / (2 * np)};
}

inline Rational metric_dist(const TorusSystem& sys, const TorusPoint& x, const TorusPoint& y) {
  sys.validate(x);
  sys.validate(y);
  return circle_distance(x.angle, y.angle);
}

/// A Haar-random point as an endless stream of i.i.d. base-N digits.  A
/// window of the next `width` digits is kept as an integer so each step of
/// the orbit costs O(1) and angles keep full double precision.
class DigitStream {
 public:
  DigitStream(int degree, std::mt19937_64& rng) : degree_(static_cast<std::uint64_t>(degree)), rng_(&rng) {
    width_ = 0;
    scale_ = 1;
    while (scale_ <= (~std::uint64_t{0}) / degree_ / degree_) {
      scale_ *= degree_;
      ++width_;
    }
    window_ = 0;
    for (int i = 0; i < width_; ++i) window_ = window_ * degree_ + draw();
  }

  double angle() const { return static_cast<double>(window_) / static_cast<double>(scale_); }

  /// x -> N x mod 1.
  void advance() { window_ = (window_ % (scale_ / degree_)) * degree_ + draw(); }

 private:
  std::uint64_t degree_;
  std::mt19937_64* rng_;
  int width_;
  std::uint64_t scale_;
  std::uint64_t window_;

  std::uint64_t draw() {
    // rejection sampling keeps digits exactly uniform
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % degree_;
    std::uint64_t v;
    do v = (*rng_)();
    while (v >= limit);
    return v % degree_;
  }
};

/// Uniform double in [0, 1) from the top 53 bits; portable across standard libraries.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace endomra
