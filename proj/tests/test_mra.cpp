#include "common.hpp"

#include <cmath>
#include <numbers>

using namespace endomra;
using namespace endomra::testing;

namespace {

PathSpace gm_space() { return PathSpace::for_sft(gm(), gm_fixed_cycle(), invariant_measure(gm())); }
PathSpace haar_space() { return PathSpace::for_torus(doubling(), torus_cycle(doubling(), q(0))); }
PathSpace thirds_space() { return PathSpace::for_torus(doubling(), torus_cycle(doubling(), q(1, 3))); }

TrigPolynomial<Algebraic> trig(std::map<long long, Rational> c) {
  std::map<long long, Algebraic> out;
  for (const auto& [n, v] : c) out[n] = Algebraic(v);
  return TrigPolynomial<Algebraic>(out);
}

// h_C for (1 + z^3)/sqrt 2 and C = {1/3, 2/3}: 1 minus the order-3 Fejer kernel / 3
TrigPolynomial<Algebraic> thirds_h() {
  return trig({{0, q(2, 3)}, {1, q(-2, 9)}, {-1, q(-2, 9)}, {2, q(-1, 9)}, {-2, q(-1, 9)}});
}

std::size_t words_ending_in(const SftSystem& sys, int letter, std::size_t len) {
  std::size_t n = 0;
  for (const auto& w : sys.words(len))
    if (w.back() == letter) ++n;
  return n;
}

}  // namespace

// --- phi-hat ---------------------------------------------------------------------

TEST(Scaling, GoldenAllOnesPrefixGivesOne) {
  const auto s = gm_space();
  const auto f = golden_mean_filter(gm());
  for (const auto& x : {"(1)", "2(1)", "12(1)"}) {
    const auto e = eval_scaling(s, f, make_path(s, pt(gm(), x), {0, 0, 0}));
    ASSERT_TRUE(e.exact);
    EXPECT_EQ(*e.exact_value, Algebraic(1)) << x;
  }
}

TEST(Scaling, GoldenPrefixWithTwoVanishes) {
  const auto s = gm_space();
  const auto f = golden_mean_filter(gm());
  const auto x = pt(gm(), "(1)");
  for (const Word& prefix : {Word{1}, Word{0, 1}, Word{0, 1, 0}, Word{1, 0, 0, 0}}) {
    const auto e = eval_scaling(s, f, make_path(s, x, prefix));
    EXPECT_TRUE(e.exact_value->is_zero());
  }
}

TEST(Scaling, HaarPurePathIsOne) {
  const auto s = haar_space();
  const auto sys = doubling();
  const auto e = eval_scaling(s, haar_type_filter(), make_path(s, to_digits(sys, sys.point(q(0))), {}));
  EXPECT_NEAR(std::abs(e.value - std::complex<double>(1.0)), 0.0, e.tail_bound + 1e-15);
}

TEST(Scaling, HaarMatchesVieteProduct) {
  // base 1/2 with the 0 tail: z_k = 2^{-k-1}, |phi-hat| = prod cos(pi 2^{-k-1}) = 2/pi
  const auto s = haar_space();
  const auto sys = doubling();
  const auto e = eval_scaling(s, haar_type_filter(), make_path(s, to_digits(sys, sys.point(q(1, 2))), {}));
  EXPECT_LE(std::abs(std::abs(e.value) - 2.0 / std::numbers::pi), e.tail_bound + 1e-12);
  EXPECT_LE(e.tail_bound, 1e-10);
}

TEST(Scaling, ModulusSquaredIsPathWeight) {
  const auto s = gm_space();
  const auto sys = gm();
  const auto f = golden_mean_filter(sys);
  const auto W = weight_from_filter(sys, f);
  std::size_t checked = 0;
  for (const auto& x : {pt(sys, "(1)"), pt(sys, "2(1)"), pt(sys, "(12)")})
    for (const auto& w : enumerate_paths(s, x, 5)) {
      Word letters;
      for (long long k = 1; k <= static_cast<long long>(w.prefix.size()) + 3; ++k) letters.push_back(path_letter(s, w, k));
      const Algebraic p = path_cylinder_measure(s, x, letters, [&](const SftPoint& z) { return W.at(z); });
      EXPECT_EQ(eval_scaling(s, f, w).exact_value->norm(), p);
      ++checked;
    }
  EXPECT_GT(checked, 20u);
}

TEST(Scaling, GoldenRelationExact) {
  const auto s = gm_space();
  const auto sys = gm();
  std::vector<SolenoidPath> paths;
  for (const auto& x : {"(1)", "2(1)", "(12)", "112(1)", "1(12)"})
    for (auto& w : enumerate_paths(s, pt(sys, x), 6)) paths.push_back(std::move(w));
  ASSERT_GE(paths.size(), 50u);
  EXPECT_TRUE(scaling_relation_residual(s, golden_mean_filter(sys), paths).is_exact_zero());
}

TEST(Scaling, HaarRelationWithinTolerance) {
  const auto s = haar_space();
  const auto sys = doubling();
  std::vector<SolenoidPath> paths;
  for (const auto& a : {q(0), q(1, 2), q(1, 3), q(1, 5), q(3, 7)})
    for (auto& w : enumerate_paths(s, to_digits(sys, sys.point(a)), 4)) paths.push_back(std::move(w));
  ASSERT_GE(paths.size(), 50u);
  const auto r = scaling_relation_residual(s, haar_type_filter(), paths);
  EXPECT_LE(r.value, 1e-10);
}

TEST(Scaling, RefusesLowPassViolation) {
  const auto sys = gm();
  const auto s = PathSpace::for_sft(sys, cycle_through(sys, pt(sys, "(12)")), invariant_measure(sys));
  EXPECT_THROW(eval_scaling(s, golden_mean_filter(sys), make_path(s, pt(sys, "(12)"), {})), PreconditionError);
  const auto t = thirds_space();
  EXPECT_THROW(eval_scaling(t, haar_type_filter(), make_path(t, to_digits(doubling(), doubling().point(q(1, 3))), {})),
               PreconditionError);
}

TEST(Scaling, RefusesQmfViolation) {
  const auto sys = gm();
  const auto s = gm_space();
  auto f = golden_mean_filter(sys);
  f.m0 = Algebraic(2) * f.m0;
  EXPECT_THROW(eval_scaling(s, f, make_path(s, pt(sys, "(1)"), {})), PreconditionError);
}

// --- h_C -----------------------------------------------------------------------------

TEST(Hc, GoldenBothRoutesIdenticallyOne) {
  const auto s = gm_space();
  const auto r = compute_h_c(s, golden_mean_filter(gm()));
  for (const auto& [w, v] : r.fixed_point.values()) EXPECT_EQ(v, Algebraic(1));
  EXPECT_TRUE(r.path_sum.exact);
  for (const auto& [w, v] : r.path_sum.value.values()) EXPECT_EQ(v, Algebraic(1));
  EXPECT_TRUE(r.consistent);
  EXPECT_EQ(r.discrepancy, 0.0);
}

TEST(Hc, GoldenPathSumPointwise) {
  const auto s = gm_space();
  std::mt19937_64 rng(3);
  for (int n = 0; n < 20; ++n) {
    const auto x = random_point(gm(), rng);
    const auto p = h_path_sum(s, golden_mean_filter(gm()), x);
    EXPECT_TRUE(p.exact());
    EXPECT_EQ(p.value, Algebraic(1));
  }
}

TEST(Hc, HaarIsOne) {
  const auto s = haar_space();
  const auto r = compute_h_c(s, haar_type_filter(), {}, 8, 8, {q(1, 3), q(1, 5), q(1, 2)});
  EXPECT_EQ(r.fixed_point, trig({{0, q(1)}}));
  EXPECT_TRUE(r.consistent);
  for (const auto& [a, est] : r.cycle_checks) EXPECT_NEAR(est.value, 1.0, est.bound + 1e-12);
}

TEST(Hc, ThirdsFixedPoint) {
  const auto sys = doubling();
  const auto h = h_fixed_point(sys, haar_type_filter(3), torus_cycle(sys, q(1, 3)));
  EXPECT_EQ(h, thirds_h());
  EXPECT_EQ(*h.exact_at(q(1, 3)), Algebraic(1));
  EXPECT_EQ(*h.exact_at(q(2, 3)), Algebraic(1));
  EXPECT_TRUE(h.exact_at(q(0))->is_zero());
}

TEST(Hc, ThirdsPathSumAgreesOffCycle) {
  const auto s = thirds_space();
  const auto f = haar_type_filter(3);
  for (const auto& a : {q(1, 5), q(1, 7), q(2, 5)}) {
    // the a-priori bound is the unassigned mass, which here includes the mass of the other W-cycle {0}
    const auto est = h_path_sum(s, f, to_double(a));
    const double exact = thirds_h().at(a).real();
    EXPECT_LE(std::abs(est.value - exact), est.bound + 1e-12);
    EXPECT_NEAR(est.value, exact, 1e-5);
  }
}

TEST(Hc, HarmonicAndBounded) {
  const auto sys = doubling();
  const auto f = haar_type_filter(3);
  const auto h = thirds_h();
  EXPECT_EQ(apply_ruelle(sys, weight_from_filter(sys, f), h), h);
  for (int j = 0; j <= 360; ++j) {
    const double v = h(j / 360.0).real();
    EXPECT_GE(v, -1e-12);
    EXPECT_LE(v, 1 + 1e-12);
  }
  const auto g = golden_mean_filter(gm());
  const auto hg = h_fixed_point(gm(), g, gm_fixed_cycle());
  EXPECT_EQ(apply_ruelle(weight_from_filter(gm(), g), hg), hg);
}

TEST(Hc, RefusesNonWCycle) {
  const auto sys = gm();
  const auto s = PathSpace::for_sft(sys, cycle_through(sys, pt(sys, "(12)")), invariant_measure(sys));
  EXPECT_THROW(h_path_sum(s, golden_mean_filter(sys), pt(sys, "(1)")), PreconditionError);
}

// --- correlation ---------------------------------------------------------------------

TEST(Correlation, GoldenIndicator) {
  const auto s = gm_space();
  const auto sys = gm();
  const auto rho = invariant_measure(sys);
  const auto f = CylinderFunction<Algebraic>::indicator(sys, {0});
  EXPECT_EQ(rho.integrate(f), Algebraic(q(2, 3)));
  EXPECT_TRUE(correlation_residual(s, rho, golden_mean_filter(sys), f).is_exact_zero());
}

TEST(Correlation, GoldenAllCylinders) {
  const auto s = gm_space();
  const auto sys = gm();
  const auto rho = invariant_measure(sys);
  for (std::size_t d = 1; d <= 4; ++d)
    for (const auto& w : sys.words(d))
      EXPECT_TRUE(correlation_residual(s, rho, golden_mean_filter(sys), CylinderFunction<Algebraic>::indicator(sys, w)).is_exact_zero());
}

TEST(Correlation, HaarFirstHarmonic) {
  const auto s = haar_space();
  const auto r = correlation_residual(s, haar_type_filter(), trig({{1, q(1)}}));
  EXPECT_LE(r.value, r.bound);
  EXPECT_LE(r.bound, 1e-4);
}

TEST(Correlation, ThirdsNontrivialH) {
  // int z h = coefficient of z^{-1} in h = -2/9
  const auto s = thirds_space();
  const auto r = correlation_residual(s, haar_type_filter(3), trig({{1, q(1)}}));
  EXPECT_LE(r.value, r.bound + 1e-12);
  EXPECT_LE(r.value, 1e-5);
}

// --- S_0 ---------------------------------------------------------------------------------

TEST(S0, GoldenIsometryRandomPairs) {
  const auto sys = gm();
  const auto rho = invariant_measure(sys);
  const auto filter = golden_mean_filter(sys);
  const auto h = CylinderFunction<Algebraic>::constant(sys, Algebraic(1));
  std::mt19937_64 rng(11);
  auto random_fn = [&] {
    CylinderFunction<Algebraic> f(sys, 1 + rng() % 3);
    std::map<Word, Algebraic> t;
    for (const auto& [w, v] : f.values())
      t[w] = Algebraic(static_cast<long long>(rng() % 7) - 3) + Algebraic(static_cast<long long>(rng() % 5) - 2) * Algebraic::i();
    return CylinderFunction<Algebraic>::from_table(sys, f.depth(), t);
  };
  for (int n = 0; n < 20; ++n) EXPECT_TRUE(s0_isometry_residual(rho, filter, h, random_fn(), random_fn()).is_exact_zero());
}

TEST(S0, HaarIsometry) {
  const auto sys = doubling();
  const auto f = haar_type_filter();
  const auto one = trig({{0, q(1)}});
  EXPECT_TRUE(s0_isometry_residual(sys, f, one, one, one).is_exact_zero());
  EXPECT_TRUE(s0_isometry_residual(sys, f, one, trig({{1, q(2)}, {-3, q(1)}}), trig({{1, q(1)}, {0, q(5)}})).is_exact_zero());
  EXPECT_TRUE(s0_isometry_residual(sys, f, one, TrigPolynomial<Algebraic>(), one).is_exact_zero());
  EXPECT_TRUE(s0_isometry_residual(sys, haar_type_filter(3), thirds_h(), trig({{2, q(1)}}), trig({{-1, q(3)}})).is_exact_zero());
}

TEST(S0, RejectsNonFixedH) {
  const auto sys = gm();
  const auto filter = golden_mean_filter(sys);
  EXPECT_THROW(validate_qmf_h(filter, CylinderFunction<Algebraic>::indicator(sys, {0})), ValidationError);
  EXPECT_THROW(validate_qmf_h(doubling(), haar_type_filter(), trig({{1, q(1)}})), ValidationError);
  EXPECT_THROW(validate_qmf_h(doubling(), haar_type_filter(), trig({{0, q(2)}, {1, q(1)}, {-1, q(1)}})), ValidationError);
}

// --- purity ----------------------------------------------------------------------------------

TEST(Purity, HaarRateNearHalf) {
  // xi = z: E_k = 1 and s_k = exp(k int ln|m_0|^2) = 2^{-k}
  const auto r = purity_decay(doubling(), haar_type_filter(), trig({{1, q(1)}}), 20, 4000, 1);
  ASSERT_EQ(r.s.size(), 20u);
  EXPECT_FALSE(r.hypothesis_violated);
  EXPECT_NEAR(r.fitted_rate, 0.5, 0.05);
  EXPECT_TRUE(r.decaying);
  EXPECT_LT(r.s.back(), 1e-4);
}

TEST(Purity, GoldenVanishesOnPositiveMass) {
  const auto sys = gm();
  const auto r = purity_decay(invariant_measure(sys), golden_mean_filter(sys), CylinderFunction<Algebraic>::indicator(sys, {1, 0}), 6);
  EXPECT_TRUE(r.exact);
  for (std::size_t k = 0; k < r.s.size(); ++k) {
    EXPECT_EQ(r.s[k], 0.0);
    EXPECT_GT(r.zero_mass[k], 0.0);
  }
  EXPECT_TRUE(std::isnan(r.fitted_rate));
}

TEST(Purity, UnimodularFlagged) {
  const auto sys = gm();
  const SftFilter one{CylinderFunction<Algebraic>::constant(sys, Algebraic(1)), {}};
  const auto r = purity_decay(invariant_measure(sys), one, CylinderFunction<Algebraic>::constant(sys, Algebraic(1)), 5);
  EXPECT_TRUE(r.hypothesis_violated);
  EXPECT_FALSE(r.decaying);
  const auto t = purity_decay(doubling(), TorusFilter{trig({{1, q(1)}}), {}}, trig({{0, q(1)}}), 5, 100, 1);
  EXPECT_TRUE(t.hypothesis_violated);
  EXPECT_FALSE(t.decaying);
}

// --- multiplicity ------------------------------------------------------------------------------

TEST(Multiplicity, GoldenFibonacciCounts) {
  const auto sys = gm();
  const auto h = CylinderFunction<Algebraic>::constant(sys, Algebraic(1));
  const auto x = pt(sys, "(1)");
  const std::size_t expect[] = {2, 3, 5, 8};
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto m = multiplicity(sys, h, x, n);
    EXPECT_TRUE(m.exact());
    EXPECT_EQ(m.lower, expect[n - 1]);
    EXPECT_EQ(m.lower, words_ending_in(sys, 0, n + 1));
  }
  EXPECT_EQ(multiplicity(sys, h, pt(sys, "2(1)"), 1).lower, 1u);
  EXPECT_EQ(multiplicity(sys, CylinderFunction<Algebraic>::constant(sys, Algebraic(0)), x, 3).lower, 0u);
}

TEST(Multiplicity, Recursion) {
  const auto sys = gm();
  const auto h = CylinderFunction<Algebraic>::indicator(sys, {0, 0});
  for (const auto& x : {pt(sys, "(1)"), pt(sys, "2(1)"), pt(sys, "(12)")})
    for (std::size_t n = 1; n <= 5; ++n) {
      std::size_t sum = 0;
      for (const auto& y : preimages(sys, x)) sum += multiplicity(sys, h, y, n).lower;
      EXPECT_EQ(multiplicity(sys, h, x, n + 1).lower, sum);
    }
}

TEST(Multiplicity, Circle) {
  const auto sys = doubling();
  const auto m = multiplicity(sys, trig({{0, q(1)}}), sys.point(q(1, 3)), 3);
  EXPECT_TRUE(m.exact());
  EXPECT_EQ(m.lower, 8u);
  // h vanishes at 0 but not at 1/2
  const auto z = multiplicity(sys, thirds_h(), sys.point(q(0)), 1);
  EXPECT_TRUE(z.exact());
  EXPECT_EQ(z.lower, 1u);
}
