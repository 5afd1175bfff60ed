#include "common.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>

using namespace endomra;
using namespace endomra::testing;

namespace {

TrigPolynomial<Algebraic> trig(std::map<long long, std::string> c) {
  std::map<long long, Algebraic> out;
  for (const auto& [n, v] : c) out[n] = alg(v);
  return TrigPolynomial<Algebraic>(out);
}

// |m0|^2 = 1 + cos(2 pi k x) for (1 + z^k)/sqrt 2
double haar_log_modulus_integral() {
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto f = [](double x) { return std::log(std::sqrt(2.0) * std::abs(std::cos(std::numbers::pi * x))); };
  return integrator.integrate(f, 0.0, 0.5) + integrator.integrate(f, 0.5, 1.0);
}

}  // namespace

TEST(Qmf, GoldenMeanFilterExact) {
  const auto sys = gm();
  EXPECT_TRUE(qmf_residual(sys, golden_mean_filter(sys)).is_exact_zero());
}

TEST(Qmf, HaarExact) {
  const auto t = doubling();
  EXPECT_TRUE(qmf_residual(t, haar_type_filter()).is_exact_zero());
  EXPECT_TRUE(qmf_residual(t, haar_type_filter(3)).is_exact_zero());
}

TEST(Qmf, ConstantCases) {
  const auto t = doubling();
  EXPECT_TRUE(qmf_residual(t, TorusFilter{trig({{0, "1"}}), {}}).is_exact_zero());
  EXPECT_TRUE(qmf_residual(t, TorusFilter{trig({{1, "1"}}), {}}).is_exact_zero());
  const auto r = qmf_residual(t, TorusFilter{trig({{0, "2"}}), {}});
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.value, 3.0);
  // scaled golden-mean filter: average of |2 m0|^2 is 4
  const auto sys = gm();
  auto f = golden_mean_filter(sys);
  f.m0 = Algebraic(2) * f.m0;
  EXPECT_EQ(qmf_residual(sys, f).value, 3.0);
}

TEST(LowPass, Examples) {
  const auto sys = gm();
  EXPECT_TRUE(low_pass_residual(sys, golden_mean_filter(sys), gm_fixed_cycle()).is_exact_zero());
  const auto t = doubling();
  EXPECT_TRUE(low_pass_residual(t, haar_type_filter(), torus_cycle(t, q(0))).is_exact_zero());
  const auto r = low_pass_residual(t, haar_type_filter(), torus_cycle(t, q(1, 3)));
  EXPECT_GT(r.value, 0.4);  // |1 - sqrt 2| pattern: |m0(e^{2 pi i/3}) - sqrt 2|
  EXPECT_NEAR(r.value, std::abs(std::complex<double>(0.5, std::sqrt(3.0) / 2) / std::sqrt(2.0) - std::sqrt(2.0)), 1e-12);
}

TEST(LowPass, PhasesMustBeUnimodular) {
  const auto sys = gm();
  auto f = golden_mean_filter(sys);
  f.phases = Phases{{Algebraic(2)}};
  EXPECT_THROW(low_pass_residual(sys, f, gm_fixed_cycle()), ValidationError);
  f.phases = Phases{{Algebraic(-1)}};
  EXPECT_FALSE(low_pass_residual(sys, f, gm_fixed_cycle()).is_exact_zero());
}

TEST(Weight, GoldenMean) {
  const auto sys = gm();
  const auto w = weight_from_filter(sys, golden_mean_filter(sys));
  for (const auto& word : sys.words(3)) {
    const Algebraic expect = (word[0] == 1) ? Algebraic(0) : Algebraic(1);
    EXPECT_EQ(w(word), expect) << sys.alphabet().format(word);
  }
}

TEST(Weight, HaarIsCosSquared) {
  const auto t = doubling();
  const auto w = weight_from_filter(t, haar_type_filter());
  EXPECT_EQ(w, trig({{-1, "1/4"}, {0, "1/2"}, {1, "1/4"}}));
  for (double x : {0.0, 0.1, 0.37, 0.5, 0.9}) EXPECT_NEAR(w(x).real(), std::pow(std::cos(std::numbers::pi * x), 2), 1e-14);
}

TEST(Weight, ZeroFilterAndViolation) {
  const auto sys = gm();
  SftFilter zero{CylinderFunction<Algebraic>(sys, 2), {}};
  EXPECT_TRUE(weight_from_filter(sys, zero).is_zero());
  auto big = golden_mean_filter(sys);
  big.m0 = Algebraic(2) * big.m0;
  EXPECT_THROW(weight_from_filter(sys, big), ValidationError);
  EXPECT_THROW(weight_from_filter(doubling(), TorusFilter{trig({{0, "2"}}), {}}), ValidationError);
}

TEST(Ruelle, UniformWeightOnIndicator) {
  const auto sys = gm();
  const auto r = apply_ruelle(uniform_weight(sys), CylinderFunction<Rational>::indicator(sys, {0}));
  EXPECT_EQ(r({0}), q(1, 2));
  EXPECT_EQ(r({1}), q(1));
}

TEST(Ruelle, HaarPreservesConstants) {
  const auto t = doubling();
  const auto w = weight_from_filter(t, haar_type_filter());
  EXPECT_EQ(apply_ruelle(t, w, TrigPolynomial<Algebraic>::constant(Algebraic(1))), TrigPolynomial<Algebraic>::constant(Algebraic(1)));
  EXPECT_TRUE(apply_ruelle(t, w, TrigPolynomial<Algebraic>()).is_zero());
  const auto sys = gm();
  EXPECT_TRUE(apply_ruelle(weight_from_filter(sys, golden_mean_filter(sys)), CylinderFunction<Algebraic>(sys, 3)).is_zero());
}

TEST(Ruelle, MatchesPointwiseDefinition) {
  // R_W f(x) = sum over preimages y of W(y) f(y), on every depth-<=6 indicator
  const auto sys = gm();
  const auto w = weight_from_filter(sys, golden_mean_filter(sys));
  for (std::size_t d = 1; d <= 6; ++d)
    for (const auto& word : sys.words(d)) {
      const auto f = CylinderFunction<Algebraic>::indicator(sys, word);
      const auto rf = apply_ruelle(w, f);
      for (const auto& u : sys.words(std::max<std::size_t>(d, 2))) {
        const auto x = sys.representative(u);
        Algebraic s(0);
        for (const auto& y : preimages(sys, x)) s = s + w.at(y) * f.at(y);
        EXPECT_EQ(rf.at(x), s);
      }
    }
}

TEST(Ruelle, QmfImpliesConstantFixed) {
  const auto sys = gm();
  const auto w = weight_from_filter(sys, golden_mean_filter(sys));
  EXPECT_EQ(apply_ruelle(w, CylinderFunction<Algebraic>::constant(sys, Algebraic(1))), CylinderFunction<Algebraic>::constant(sys, Algebraic(1)));
}

TEST(Ruelle, PerronFrobeniusDuality) {
  const auto sys = gm();
  const auto rho = invariant_measure(sys);
  for (std::size_t d = 1; d <= 5; ++d)
    for (const auto& word : sys.words(d)) {
      const auto f = CylinderFunction<Rational>::indicator(sys, word);
      EXPECT_EQ(rho.integrate(apply_ruelle(rho.weight(), f)), rho.integrate(f));
    }
}

TEST(Harmonic, GoldenMeanContainsOne) {
  const auto sys = gm();
  const auto basis = harmonic_space(weight_from_filter(sys, golden_mean_filter(sys)), 2);
  bool has_one = false;
  for (const auto& h : basis) has_one = has_one || h == CylinderFunction<Algebraic>::constant(sys, Algebraic(1));
  EXPECT_TRUE(has_one || basis.size() == 1);
  ASSERT_FALSE(basis.empty());
  // the space is one-dimensional and spanned by 1
  ASSERT_EQ(basis.size(), 1u);
  const auto& h = basis[0];
  const Algebraic c = h({0, 0});
  EXPECT_EQ(h, c * CylinderFunction<Algebraic>::constant(sys, Algebraic(1)));
}

TEST(Harmonic, HaarUniqueConstant) {
  const auto t = doubling();
  const auto basis = harmonic_space(t, weight_from_filter(t, haar_type_filter()), 8);
  ASSERT_EQ(basis.size(), 1u);
  EXPECT_TRUE(basis[0].is_constant());
}

TEST(Harmonic, ZeroWeight) {
  const auto sys = gm();
  EXPECT_TRUE(harmonic_space(CylinderFunction<Algebraic>(sys, 2), 3).empty());
  EXPECT_TRUE(harmonic_space(doubling(), TrigPolynomial<Algebraic>(), 4).empty());
}

TEST(WCycles, GoldenMean) {
  const auto sys = gm();
  const auto w = weight_from_filter(sys, golden_mean_filter(sys));
  const auto cycles = find_w_cycles(sys, w, 3);
  ASSERT_FALSE(cycles.empty());
  EXPECT_EQ(cycles[0], gm_fixed_cycle());
  // brute force: W evaluated on every point of every cycle
  const auto up_to_8 = find_w_cycles(sys, w, 8);
  for (const auto& c : enumerate_cycles(sys, 8)) {
    bool all = true;
    for (const auto& x : c.points) all = all && w.at(x) == Algebraic(1);
    EXPECT_EQ(all, std::find(up_to_8.begin(), up_to_8.end(), c) != up_to_8.end());
  }
  EXPECT_EQ(up_to_8.size(), 1u);
}

TEST(WCycles, Haar) {
  const auto t = doubling();
  const auto cycles = find_w_cycles(t, weight_from_filter(t, haar_type_filter()), 8, 1e-9);
  ASSERT_EQ(cycles.size(), 1u);
  EXPECT_EQ(cycles[0].points[0].angle, q(0));
}

TEST(WCycles, CosThreePi) {
  const auto t = doubling();
  const auto w = weight_from_filter(t, haar_type_filter(3));
  // closed form: cos^2(3 pi x) = 1 iff 3x is an integer
  for (std::size_t p_max : {2u, 8u}) {
    const auto cycles = find_w_cycles(t, w, p_max, 1e-9);
    ASSERT_EQ(cycles.size(), 2u);
    EXPECT_EQ(cycles[0].points[0].angle, q(0));
    EXPECT_EQ(cycles[1].points[0].angle, q(1, 3));
    EXPECT_EQ(cycles[1].points[1].angle, q(2, 3));
    for (const auto& c : enumerate_cycles(t, p_max)) {
      bool all = true;
      for (const auto& x : c.points) all = all && denominator(Rational(3 * x.angle)) == 1;
      EXPECT_EQ(all, std::find(cycles.begin(), cycles.end(), c) != cycles.end());
    }
  }
}

TEST(ConditionalExpectation, ZeroStepIsIdentity) {
  const auto sys = gm();
  const auto f = CylinderFunction<Rational>::indicator(sys, {0, 1});
  EXPECT_EQ(conditional_expectation(uniform_weight(sys), f, 0), f);
}

TEST(ConditionalExpectation, OneStepGoldenMean) {
  const auto sys = gm();
  const auto e = conditional_expectation(uniform_weight(sys), CylinderFunction<Rational>::indicator(sys, {0}), 1);
  for (const auto& w : sys.words(2)) EXPECT_EQ(e(w), Rational(sys.allowed(0, w[1]) ? 1 : 0, sys.in_degree(w[1])));
}

TEST(ConditionalExpectation, ConvergesToMean) {
  const auto sys = gm();
  const auto f = CylinderFunction<Rational>::indicator(sys, {1});
  const auto e = conditional_expectation(uniform_weight(sys), f, 30);
  for (const auto& [w, v] : e.values()) EXPECT_NEAR(to_double(v), 1.0 / 3.0, 1e-8);
}

TEST(ConditionalExpectation, ProjectionProperties) {
  const auto sys = gm();
  const auto v = uniform_weight(sys);
  for (std::size_t n = 1; n <= 3; ++n)
    for (const auto& a : sys.words(3))
      for (const auto& b : sys.words(2)) {
        const auto f = CylinderFunction<Rational>::indicator(sys, a);
        const auto g = CylinderFunction<Rational>::indicator(sys, b);
        const auto e = conditional_expectation(v, f, n);
        EXPECT_EQ(conditional_expectation(v, e, n), e);
        const auto gr = g.compose_shift(n);
        EXPECT_EQ(conditional_expectation(v, f * gr, n), e * gr);
      }
  // torus: E_n(z^m) keeps only frequencies divisible by 2^n
  const auto t = doubling();
  const auto e = conditional_expectation(t, uniform_weight(t), trig({{1, "1"}, {4, "1"}, {6, "1"}}), 1);
  EXPECT_EQ(e, trig({{4, "1"}, {6, "1"}}));
}

TEST(AveragingDecay, GoldenMeanRatioHalf) {
  const auto sys = gm();
  const auto d = averaging_decay(invariant_measure(sys), CylinderFunction<Rational>::indicator(sys, {0}), 20);
  ASSERT_EQ(d.size(), 21u);
  for (std::size_t n = 1; n < d.size(); ++n) EXPECT_EQ(d[n] / d[n - 1], q(1, 2));
}

TEST(AveragingDecay, ConstantsAndTorus) {
  const auto sys = gm();
  for (const auto& v : averaging_decay(invariant_measure(sys), CylinderFunction<Rational>::constant(sys, 5), 5)) EXPECT_EQ(v, q(0));
  const auto t = doubling();
  const auto d = averaging_decay(t, uniform_weight(t), trig({{1, "1"}}), 5);
  EXPECT_NEAR(d[0], 1.0, 1e-12);
  for (std::size_t n = 1; n < d.size(); ++n) EXPECT_EQ(d[n], 0.0);
  EXPECT_THROW(averaging_decay(invariant_measure(sys), CylinderFunction<Rational>::constant(sys, 1), 0), PreconditionError);
}

TEST(Lyapunov, QuadratureOracle) {
  EXPECT_NEAR(haar_log_modulus_integral(), -std::log(2.0) / 2, 1e-10);
}

TEST(Lyapunov, HaarMonteCarlo) {
  const auto e = lyapunov_A(doubling(), haar_type_filter(), 4000, 500, 3);
  EXPECT_FALSE(e.minus_infinity);
  EXPECT_NEAR(e.value, -std::log(2.0) / 2, 4 * e.std_error);
  EXPECT_NEAR(e.value, haar_log_modulus_integral(), 5e-3);
  EXPECT_FALSE(e.hypothesis_violated);
}

TEST(Lyapunov, UnimodularViolatesHypothesis) {
  const auto t = doubling();
  const auto e = lyapunov_A(t, TorusFilter{trig({{1, "1"}}), {}}, 10, 10, 1);
  EXPECT_TRUE(e.hypothesis_violated);
  EXPECT_NEAR(e.value, 0.0, 1e-12);
  const auto sys = gm();
  SftFilter ones{CylinderFunction<Algebraic>::constant(sys, Algebraic(1)), {}};
  const auto s = lyapunov_A(invariant_measure(sys), ones);
  EXPECT_TRUE(s.hypothesis_violated);
  EXPECT_EQ(s.value, 0.0);
}

TEST(Lyapunov, GoldenMeanMinusInfinity) {
  const auto sys = gm();
  const auto e = lyapunov_A(invariant_measure(sys), golden_mean_filter(sys));
  EXPECT_TRUE(e.minus_infinity);
  EXPECT_TRUE(e.exact);
  EXPECT_NEAR(e.zero_set_mass, 1.0 / 3.0, 1e-15);
  const auto mc = lyapunov_A(invariant_measure(sys), golden_mean_filter(sys), 100, 20, 1);
  EXPECT_TRUE(mc.minus_infinity);
}

TEST(Birkhoff, GoldenMeanZeroOnPattern21) {
  const auto sys = gm();
  const auto b = birkhoff_log_mean(sys, golden_mean_filter(sys), pt(sys, "121(1)"), 10);
  EXPECT_TRUE(b.minus_infinity);
  EXPECT_EQ(b.first_zero, 1u);
  const auto c = birkhoff_log_mean(sys, golden_mean_filter(sys), pt(sys, "(1)"), 10);
  EXPECT_NEAR(c.value, std::log(2.0) / 2, 1e-15);
}

TEST(Birkhoff, HaarConverges) {
  const auto b = birkhoff_log_mean(doubling(), haar_type_filter(), 10000, 1);
  EXPECT_LT(std::abs(std::exp(b.value) - std::exp(-std::log(2.0) / 2)), 1e-2);
}
