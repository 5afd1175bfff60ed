#pragma once

#include <gtest/gtest.h>

#include <random>

#include "endomra/endomra.hpp"

namespace endomra::testing {

inline SftSystem gm() { return SftSystem::golden_mean(); }
inline SftPoint pt(const SftSystem& sys, const std::string& s) { return sys.parse_point(s); }
inline Rational q(long long a, long long b = 1) { return make_rational(a, b); }
inline Algebraic alg(const std::string& s) { return parse_algebraic(s); }

inline Cycle<SftPoint> gm_fixed_cycle() { return cycle_through(gm(), pt(gm(), "(1)")); }

inline TorusSystem doubling() { return TorusSystem(2); }

inline Cycle<TorusPoint> torus_cycle(const TorusSystem& sys, Rational x) { return cycle_through(sys, sys.point(std::move(x))); }

/// Random admissible eventually periodic point.
inline SftPoint random_point(const SftSystem& sys, std::mt19937_64& rng) {
  while (true) {
    Word prefix, period;
    const std::size_t m = rng() % 4, p = 1 + rng() % 3;
    for (std::size_t i = 0; i < m; ++i) prefix.push_back(static_cast<int>(rng() % sys.size()));
    for (std::size_t i = 0; i < p; ++i) period.push_back(static_cast<int>(rng() % sys.size()));
    try {
      return sys.point(prefix, period);
    } catch (const ValidationError&) {
    }
  }
}

}  // namespace endomra::testing
