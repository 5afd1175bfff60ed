#include "common.hpp"

#include <cmath>

using namespace endomra;
using namespace endomra::testing;

TEST(InvariantMeasure, GoldenMeanStationaryVector) {
  const auto rho = invariant_measure(gm());
  EXPECT_EQ(rho.mass({0}), q(2, 3));
  EXPECT_EQ(rho.mass({1}), q(1, 3));
  EXPECT_EQ(rho.mass({0, 0}), q(1, 3));
}

TEST(InvariantMeasure, EigenvectorOracle) {
  // M(j, w) = A(j, w) / N(w); the stationary vector must satisfy M pi = pi
  const auto sys = gm();
  const auto rho = invariant_measure(sys);
  std::vector<Rational> pi{rho.mass({0}), rho.mass({1})};
  for (int j = 0; j < 2; ++j) {
    Rational s = 0;
    for (int w = 0; w < 2; ++w)
      if (sys.allowed(j, w)) s += pi[static_cast<std::size_t>(w)] / sys.in_degree(w);
    EXPECT_EQ(s, pi[static_cast<std::size_t>(j)]);
  }
  // independent float power iteration
  double a = 0.5, b = 0.5;
  for (int i = 0; i < 200; ++i) {
    const double na = 0.5 * a + b, nb = 0.5 * a;
    a = na;
    b = nb;
  }
  EXPECT_NEAR(a, to_double(pi[0]), 1e-12);
  EXPECT_NEAR(b, to_double(pi[1]), 1e-12);
}

TEST(InvariantMeasure, CylinderRecursion) {
  // rho([i w]) = A(i, w_0) / N(w_0) rho([w])
  const auto sys = gm();
  const auto rho = invariant_measure(sys);
  for (std::size_t d = 1; d <= 6; ++d)
    for (const auto& w : sys.words(d))
      for (int i = 0; i < sys.size(); ++i) {
        Word iw{i};
        iw.insert(iw.end(), w.begin(), w.end());
        const Rational expect = sys.allowed(i, w[0]) ? rho.mass(w) / sys.in_degree(w[0]) : Rational(0);
        EXPECT_EQ(sys.admissible(iw) ? rho.mass(iw) : Rational(0), expect);
      }
}

TEST(InvariantMeasure, RefinementConsistency) {
  const auto sys = gm();
  const auto rho = invariant_measure(sys);
  for (std::size_t d = 1; d <= 6; ++d)
    for (const auto& w : sys.words(d)) {
      Rational s = 0;
      for (int a : sys.successors(w)) {
        Word wa = w;
        wa.push_back(a);
        s += rho.mass(wa);
      }
      EXPECT_EQ(s, rho.mass(w));
    }
}

TEST(InvariantMeasure, RejectsBadWeight) {
  const auto sys = gm();
  CylinderFunction<Rational> w(sys, 2, q(1, 2));
  EXPECT_THROW(MarkovMeasure::from_weight(w), ValidationError);
}

TEST(InvariantMeasure, ReducibleMatrixNotUnique) {
  const SftSystem two(Alphabet({'a', 'b'}), {{1, 0}, {0, 1}});
  EXPECT_THROW(invariant_measure(two), PreconditionError);
}

TEST(InvariantMeasure, NonUniformWeight) {
  // full 2-shift with V(0x) = 1/3, V(1x) = 2/3: stationary letter masses (1/3, 2/3)
  const auto sys = SftSystem::full_shift(2);
  CylinderFunction<Rational> v(sys, 1);
  v.set({0}, q(1, 3));
  v.set({1}, q(2, 3));
  const auto nu = invariant_measure(v);
  EXPECT_EQ(nu.mass({0}), q(1, 3));
  EXPECT_EQ(nu.mass({1, 0}), q(2, 9));
  // Perron-Frobenius: int R_V f dnu = int f dnu
  for (std::size_t d = 1; d <= 4; ++d)
    for (const auto& w : sys.words(d)) {
      const auto f = CylinderFunction<Rational>::indicator(sys, w);
      EXPECT_EQ(nu.integrate(transfer(v, f)), nu.integrate(f));
    }
}

TEST(Integrate, Examples) {
  const auto sys = gm();
  const auto rho = invariant_measure(sys);
  EXPECT_EQ(rho.integrate(CylinderFunction<Rational>::indicator(sys, {1})), q(1, 3));
  EXPECT_EQ(rho.integrate(CylinderFunction<Rational>::constant(sys, 1)), q(1));
  const HaarMeasure haar(doubling());
  const TrigPolynomial<Algebraic> f({{0, Algebraic(q(3))}, {2, Algebraic(q(1))}});
  EXPECT_EQ(haar.integrate(f), Algebraic(q(3)));
}

TEST(StrongInvariance, GoldenMeanIndicators) {
  const auto sys = gm();
  const auto rho = invariant_measure(sys);
  for (std::size_t d = 1; d <= 6; ++d)
    for (const auto& w : sys.words(d)) {
      const auto f = CylinderFunction<Rational>::indicator(sys, w);
      EXPECT_TRUE(strong_invariance_residual(rho, f).is_exact_zero());
      // invariance under r
      EXPECT_EQ(rho.integrate(f.compose_shift(1)), rho.integrate(f));
    }
  EXPECT_TRUE(strong_invariance_residual(rho, CylinderFunction<Rational>::constant(sys, 1)).is_exact_zero());
}

TEST(StrongInvariance, HaarMonomials) {
  for (int N : {2, 3}) {
    const HaarMeasure haar{TorusSystem(N)};
    for (long long m = -12; m <= 12; ++m)
      EXPECT_TRUE(strong_invariance_residual(haar, TrigPolynomial<Algebraic>::monomial(m, Algebraic(1))).is_exact_zero());
  }
}

TEST(Sampling, GoldenMeanFrequencies) {
  const auto sys = gm();
  const auto rho = invariant_measure(sys);
  const std::size_t n = 100000;
  const auto words = rho.sample_words(n, 3, 11);
  std::map<Word, double> count;
  for (const auto& w : words) count[w] += 1;
  for (const auto& w : sys.words(3)) {
    const double p = to_double(rho.mass(w));
    const double se = std::sqrt(p * (1 - p) / static_cast<double>(n));
    EXPECT_NEAR(count[w] / static_cast<double>(n), p, 4 * se) << sys.alphabet().format(w);
  }
  // first letter: 2/3 within 3 standard errors
  double ones = 0;
  for (const auto& w : words) ones += w[0] == 0 ? 1 : 0;
  EXPECT_NEAR(ones / static_cast<double>(n), 2.0 / 3.0, 3 * std::sqrt(2.0 / 9.0 / static_cast<double>(n)));
}

TEST(Sampling, HaarMeanAndDeterminism) {
  const HaarMeasure haar(doubling());
  const std::size_t n = 100000;
  const auto x = haar.sample_angles(n, 5);
  double m = 0;
  for (double a : x) m += a;
  m /= static_cast<double>(n);
  EXPECT_NEAR(m, 0.5, 3 * std::sqrt(1.0 / 12.0 / static_cast<double>(n)));
  EXPECT_EQ(x, haar.sample_angles(n, 5));
  EXPECT_EQ(invariant_measure(gm()).sample_words(50, 4, 3), invariant_measure(gm()).sample_words(50, 4, 3));
}

TEST(Sampling, ZeroSamplesRejected) {
  EXPECT_THROW(invariant_measure(gm()).sample_words(0, 2, 1), PreconditionError);
  EXPECT_THROW(HaarMeasure(doubling()).sample_angles(0, 1), PreconditionError);
}
