// Scaling function phi-hat as an infinite product over paths, the harmonic
// function h_C by path sums and by the fixed-point route, the correlation and
// scaling identities, the isometry S_0 and its purity diagnostics, and the
// multiplicity function.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "endomra/exact.hpp"
#include "endomra/linalg.hpp"
#include "endomra/measure.hpp"
#include "endomra/observable.hpp"
#include "endomra/residual.hpp"
#include "endomra/ruelle.hpp"
#include "endomra/sft.hpp"
#include "endomra/solenoid.hpp"
#include "endomra/torus.hpp"

namespace endomra {

struct ScalingEvaluation {
  std::complex<double> value;
  std::optional<Algebraic> exact_value;  // set iff exact
  bool exact = false;
  double tail_bound = 0.0;
};

struct MraOptions {
  std::size_t m_max = 20;       // longest canonical prefix visited by path sums
  double prune = 1e-10;         // subtrees of smaller P_x-mass are dropped (counted in the bound)
  double tail_target = 1e-15;   // truncation target for circle tail products
};

// --- cycles behind a path space ----------------------------------------------

inline Cycle<SftPoint> symbolic_cycle(const PathSpace& s) { return {s.cycle_symbols()}; }

inline Cycle<TorusPoint> circle_cycle(const PathSpace& s) {
  if (!s.circle()) throw PreconditionError("path space is not built on the circle");
  Cycle<TorusPoint> c;
  for (const auto& z : s.cycle_symbols()) c.points.push_back(from_digits(*s.circle(), z));
  return c;
}

namespace detail {

/// First `len` letters of z_k (k >= 0).
inline Word leading_letters(const PathSpace& s, const SolenoidPath& w, long long k, std::size_t len) {
  Word out;
  out.reserve(len);
  for (std::size_t t = 0; t < len; ++t) {
    const long long pos = k - static_cast<long long>(t);
    out.push_back(pos >= 1 ? path_letter(s, w, pos) : w.base.letter(static_cast<std::size_t>(-pos)));
  }
  return out;
}

inline void require_filter(const SftSystem& sys, const SftFilter& filter, const Cycle<SftPoint>& cycle) {
  if (!qmf_residual(sys, filter).is_exact_zero()) throw PreconditionError("filter violates the QMF condition");
  filter.phases.validate(cycle.length());
  if (!low_pass_residual(sys, filter, cycle).is_exact_zero()) throw PreconditionError("filter violates the low-pass condition on the cycle");
}

inline void require_filter(const TorusSystem& sys, const TorusFilter& filter, const Cycle<TorusPoint>& cycle) {
  if (!qmf_residual(sys, filter).is_exact_zero()) throw PreconditionError("filter violates the QMF condition");
  filter.phases.validate(cycle.length());
  const auto r = low_pass_residual(sys, filter, cycle);
  if (!(r.is_exact_zero() || (!r.exact && r.value + r.bound <= 1e-12)))
    throw PreconditionError("filter violates the low-pass condition on the cycle");
}

inline std::complex<double> complex_of(const Algebraic& a) { return a.to_complex(); }

}  // namespace detail

// --- phi-hat -----------------------------------------------------------------------

/// phi-hat(omega) = prod_{k>=1} conj(alpha_{i+k}) m_0(z_k) / sqrt(c(z_k)).  On an SFT
/// the factors are exactly 1 once z_k's leading letters are tail letters.
inline ScalingEvaluation eval_scaling(const PathSpace& s, const SftFilter& filter, const SolenoidPath& w) {
  const SftSystem& sys = s.shift();
  detail::require_filter(sys, filter, symbolic_cycle(s));
  const std::size_t depth = std::max<std::size_t>(filter.m0.depth(), 2);
  const long long last = static_cast<long long>(w.prefix.size() + depth);
  Algebraic product(1);
  for (long long k = 1; k <= last && !product.is_zero(); ++k) {
    const Word head = detail::leading_letters(s, w, k, depth);
    const Algebraic m = filter.m0(head);
    if (m.is_zero()) {
      product = Algebraic(0);
      break;
    }
    product = product * filter.phases.at(w.alignment + k).conj() * m / Algebraic::sqrt(sys.in_degree(head[1]));
  }
  ScalingEvaluation e;
  e.exact = true;
  e.exact_value = product;
  e.value = product.to_complex();
  return e;
}

inline ScalingEvaluation eval_scaling(const PathSpace& s, const TorusFilter& filter, const SolenoidPath& w,
                                      const MraOptions& opt = {}) {
  const TorusSystem& sys = *s.circle();
  detail::require_filter(sys, filter, circle_cycle(s));
  const int N = sys.degree();
  const double rootN = std::sqrt(static_cast<double>(N));
  const double L = filter.m0.lipschitz();
  const long long m = static_cast<long long>(w.prefix.size());
  // sum_{k > m + t} L N^{-(k-m)} / sqrt N
  auto tail_sum = [&](long long t) { return L / rootN * std::pow(static_cast<double>(N), -static_cast<double>(t)) / (N - 1); };
  long long t = 1;
  while (t < 200 && std::expm1(tail_sum(t)) > opt.tail_target) ++t;
  Rational z = digits_value(sys, w.base);
  std::complex<double> product = 1.0;
  const long long last = m + t;
  for (long long k = 1; k <= last; ++k) {
    z = (z + path_letter(s, w, k)) / N;
    product *= detail::complex_of(filter.phases.at(w.alignment + k).conj()) * filter.m0.at(z) / rootN;
  }
  ScalingEvaluation e;
  e.value = product;
  e.tail_bound = std::abs(product) * std::expm1(tail_sum(t)) + 8.0 * static_cast<double>(last) * std::numeric_limits<double>::epsilon();
  return e;
}

/// |(U phi-hat)(omega) - m_0(x) phi-hat(omega)| with U phi-hat(omega) = alpha_i sqrt(c(x)) phi-hat(r-hat omega).
inline Residual scaling_relation_residual(const PathSpace& s, const SftFilter& filter, const std::vector<SolenoidPath>& paths) {
  Residual worst;
  for (const auto& w : paths) {
    const auto moved = eval_scaling(s, filter, r_hat(s, w));
    const auto here = eval_scaling(s, filter, w);
    const Algebraic lhs =
        filter.phases.at(w.alignment) * Algebraic::sqrt(fiber_count_after(s.shift(), w.base)) * *moved.exact_value;
    const Algebraic rhs = filter.m0.at(w.base) * *here.exact_value;
    worst = max_residual(worst, exact_residual(lhs - rhs));
  }
  return worst;
}

inline Residual scaling_relation_residual(const PathSpace& s, const TorusFilter& filter, const std::vector<SolenoidPath>& paths,
                                          const MraOptions& opt = {}) {
  const TorusSystem& sys = *s.circle();
  const double rootN = std::sqrt(static_cast<double>(sys.degree()));
  Residual worst;
  worst.exact = false;
  for (const auto& w : paths) {
    const auto moved = eval_scaling(s, filter, r_hat(s, w), opt);
    const auto here = eval_scaling(s, filter, w, opt);
    const std::complex<double> m0x = filter.m0.at(digits_value(sys, w.base));
    const std::complex<double> lhs = detail::complex_of(filter.phases.at(w.alignment)) * rootN * moved.value;
    const std::complex<double> rhs = m0x * here.value;
    Residual r;
    r.exact = false;
    r.value = std::abs(lhs - rhs);
    r.bound = rootN * moved.tail_bound + std::abs(m0x) * here.tail_bound;
    worst = max_residual(worst, r);
  }
  return worst;
}

// --- h_C by path sums -----------------------------------------------------------------

/// sum over N_C(x) of |phi-hat|^2 = prod W(z_k); since h_C <= 1 the gap 1 - sum bounds the rest.
struct PathSum {
  Algebraic value;
  Algebraic gap;  // 1 - value: exact upper bound for h_C(x) - value
  std::size_t nodes = 0;
  bool exact() const { return gap.is_zero(); }
};

struct PathSumEstimate {
  double value = 0.0;
  double bound = 0.0;  // |h_C(x) - value| <= bound
  std::size_t nodes = 0;
};

inline PathSum h_path_sum(const PathSpace& s, const SftFilter& filter, const SftPoint& x, const MraOptions& opt = {}) {
  const SftSystem& sys = s.shift();
  const auto cycle = symbolic_cycle(s);
  detail::require_filter(sys, filter, cycle);
  sys.validate(x);
  const auto weight = weight_from_filter(sys, filter);
  for (const auto& c : cycle.points)
    if (!(weight.at(c) == Algebraic(1))) throw PreconditionError("cycle is not a W-cycle");
  const std::size_t L = std::max<std::size_t>(weight.depth(), 2);
  const long long p = static_cast<long long>(s.period());

  PathSum out;
  Algebraic remaining(1);
  Word prefix;
  // head = leading letters of z_m
  std::function<bool(const Word&, const Algebraic&)> visit = [&](const Word& head, const Algebraic& mass) {
    ++out.nodes;
    const long long m = static_cast<long long>(prefix.size());
    const int next = head[0];
    for (int t = 0; t < static_cast<int>(s.tail_count()); ++t)
      for (int i = 0; i < p; ++i) {
        if (m > 0 && prefix.back() == s.tail_letter(t, i, m)) continue;
        if (!sys.allowed(s.tail_letter(t, i, m + 1), next)) continue;
        Algebraic v = mass;
        Word h = head;
        for (long long k = m + 1; k < m + static_cast<long long>(L) && !v.is_zero(); ++k) {
          h.insert(h.begin(), s.tail_letter(t, i, k));
          h.pop_back();
          v = v * weight(h);
        }
        out.value += v;
        remaining -= v;
        if (remaining.is_zero()) return true;
      }
    if (prefix.size() >= opt.m_max) return false;
    for (int j = 0; j < sys.size(); ++j) {
      if (!sys.allowed(j, next)) continue;
      Word h = head;
      h.insert(h.begin(), j);
      h.pop_back();
      const Algebraic child = mass * weight(h);
      if (child.is_zero() || child.to_complex().real() < opt.prune) continue;
      prefix.push_back(j);
      const bool done = visit(h, child);
      prefix.pop_back();
      if (done) return true;
    }
    return false;
  };
  visit(x.leading(L), Algebraic(1));
  out.gap = remaining;
  return out;
}

/// h_C as a cylinder function: the path sum depends only on the first
/// max(depth(W) - 1, 1) letters of x.
struct PathSumFunction {
  CylinderFunction<Algebraic> value;
  double max_gap = 0.0;
  bool exact = true;
};

inline PathSumFunction h_path_sum_function(const PathSpace& s, const SftFilter& filter, const MraOptions& opt = {}) {
  const SftSystem& sys = s.shift();
  const std::size_t d = std::max<std::size_t>(weight_from_filter(sys, filter).depth() - 1, 1);
  PathSumFunction out{CylinderFunction<Algebraic>(sys, d)};
  for (const auto& w : sys.words(d)) {
    auto r = h_path_sum(s, filter, sys.representative(w), opt);
    out.value.set(w, r.value);
    out.exact = out.exact && r.exact();
    out.max_gap = std::max(out.max_gap, r.gap.to_complex().real());
  }
  return out;
}

inline PathSumEstimate h_path_sum(const PathSpace& s, const TorusFilter& filter, double angle, const MraOptions& opt = {}) {
  const TorusSystem& sys = *s.circle();
  const auto cycle = circle_cycle(s);
  detail::require_filter(sys, filter, cycle);
  const auto weight = weight_from_filter(sys, filter);
  for (const auto& c : cycle.points) {
    auto v = evaluate(weight, c);
    if (v.exact ? !(*v.exact == Algebraic(1)) : std::abs(v.value - 1.0) > 1e-12) throw PreconditionError("cycle is not a W-cycle");
  }
  const RealTrigEvaluator W(weight);
  const int N = sys.degree();
  const double LW = weight.lipschitz();
  long long tail_len = 1;
  auto tail_sum = [&](long long t) { return LW * std::pow(static_cast<double>(N), -static_cast<double>(t)) / (N - 1); };
  while (tail_len < 200 && std::expm1(tail_sum(tail_len)) > opt.tail_target) ++tail_len;
  const long long p = static_cast<long long>(s.period());

  PathSumEstimate out;
  double numeric = 0.0;
  Word prefix;
  std::function<void(double, double)> visit = [&](double z, double mass) {
    ++out.nodes;
    const long long m = static_cast<long long>(prefix.size());
    for (int t = 0; t < static_cast<int>(s.tail_count()); ++t)
      for (int i = 0; i < p; ++i) {
        if (m > 0 && prefix.back() == s.tail_letter(t, i, m)) continue;
        // shorter tails for light nodes: absolute error mass * expm1(tail) stays below the target
        long long len = 1;
        while (len < tail_len && mass * std::expm1(tail_sum(len)) > opt.tail_target) ++len;
        double v = mass, y = z;
        for (long long k = m + 1; k <= m + len; ++k) {
          y = (y + s.tail_letter(t, i, k)) / N;
          v *= W(y);
        }
        out.value += v;
        numeric += v * std::expm1(tail_sum(len));
      }
    if (m >= static_cast<long long>(opt.m_max)) return;
    for (int j = 0; j < N; ++j) {
      const double y = (z + j) / N;
      const double child = mass * W(y);
      if (child < opt.prune) continue;
      prefix.push_back(j);
      visit(y, child);
      prefix.pop_back();
    }
  };
  visit(angle, 1.0);
  const double rounding = 1e-13 + 8.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(out.nodes);
  out.bound = std::max(0.0, 1.0 - out.value) + numeric + rounding;
  return out;
}

// --- h_C by the fixed-point route -------------------------------------------------------

/// The element of the harmonic space equal to 1 on C and 0 on every other
/// W-cycle of length <= p_max; requires exact evaluation at those points.
inline CylinderFunction<Algebraic> h_fixed_point(const SftSystem& sys, const SftFilter& filter, const Cycle<SftPoint>& cycle,
                                                 std::size_t depth = 0, std::size_t p_max = 8) {
  detail::require_filter(sys, filter, cycle);
  const auto weight = weight_from_filter(sys, filter);
  const auto basis = harmonic_space(weight, std::max(depth, weight.depth()));
  if (basis.empty()) throw PreconditionError("no harmonic functions at this depth");
  std::vector<std::pair<SftPoint, Algebraic>> pins;
  const std::set<SftPoint> own(cycle.points.begin(), cycle.points.end());
  for (const auto& c : find_w_cycles(sys, weight, p_max))
    for (const auto& x : c.points) pins.emplace_back(x, own.count(x) ? Algebraic(1) : Algebraic(0));
  for (const auto& x : cycle.points)
    if (std::none_of(pins.begin(), pins.end(), [&](const auto& q) { return q.first == x; }))
      throw PreconditionError("cycle is not a W-cycle");
  Matrix<Algebraic> m(pins.size(), basis.size());
  std::vector<Algebraic> rhs;
  for (std::size_t r = 0; r < pins.size(); ++r) {
    for (std::size_t c = 0; c < basis.size(); ++c) m(r, c) = basis[c].at(pins[r].first);
    rhs.push_back(pins[r].second);
  }
  std::vector<Algebraic> coef;
  try {
    coef = solve_unique(m, rhs);
  } catch (const std::exception& e) {
    throw PreconditionError(std::string("harmonic function not pinned down by W-cycle values: ") + e.what());
  }
  std::size_t d = 1;
  for (const auto& b : basis) d = std::max(d, b.depth());
  CylinderFunction<Algebraic> h(sys, d);
  for (std::size_t c = 0; c < basis.size(); ++c) h = h + coef[c] * basis[c].refine(d);
  return h.coarsen();
}

inline TrigPolynomial<Algebraic> h_fixed_point(const TorusSystem& sys, const TorusFilter& filter, const Cycle<TorusPoint>& cycle,
                                               long long max_frequency = 8, std::size_t p_max = 8) {
  detail::require_filter(sys, filter, cycle);
  const auto weight = weight_from_filter(sys, filter);
  const auto basis = harmonic_space(sys, weight, max_frequency);
  if (basis.empty()) throw PreconditionError("no harmonic functions at this truncation");
  std::vector<std::pair<TorusPoint, Algebraic>> pins;
  const std::set<TorusPoint> own(cycle.points.begin(), cycle.points.end());
  for (const auto& c : find_w_cycles(sys, weight, p_max))
    for (const auto& x : c.points) pins.emplace_back(x, own.count(x) ? Algebraic(1) : Algebraic(0));
  for (const auto& x : cycle.points)
    if (std::none_of(pins.begin(), pins.end(), [&](const auto& q) { return q.first == x; }))
      throw PreconditionError("cycle is not a W-cycle");
  Matrix<Algebraic> m(pins.size(), basis.size());
  std::vector<Algebraic> rhs;
  for (std::size_t r = 0; r < pins.size(); ++r) {
    for (std::size_t c = 0; c < basis.size(); ++c) {
      auto v = basis[c].exact_at(pins[r].first.angle);
      if (!v) throw PreconditionError("exact evaluation at W-cycle point " + to_string(pins[r].first.angle) + " unavailable");
      m(r, c) = *v;
    }
    rhs.push_back(pins[r].second);
  }
  std::vector<Algebraic> coef;
  try {
    coef = solve_unique(m, rhs);
  } catch (const std::exception& e) {
    throw PreconditionError(std::string("harmonic function not pinned down by W-cycle values: ") + e.what());
  }
  TrigPolynomial<Algebraic> h;
  for (std::size_t c = 0; c < basis.size(); ++c) h = h + coef[c] * basis[c];
  return h;
}

/// Both routes with their cross-check.
struct HcReportSft {
  CylinderFunction<Algebraic> fixed_point;
  PathSumFunction path_sum;
  bool consistent = false;   // routes agree (exactly when the path sum is exact)
  double discrepancy = 0.0;  // max |fixed - path sum|
};

inline HcReportSft compute_h_c(const PathSpace& s, const SftFilter& filter, const MraOptions& opt = {}, std::size_t depth = 0,
                               std::size_t p_max = 8) {
  auto fixed = h_fixed_point(s.shift(), filter, symbolic_cycle(s), depth, p_max);
  auto path = h_path_sum_function(s, filter, opt);
  HcReportSft r{fixed, path};
  const std::size_t d = std::max(fixed.depth(), path.value.depth());
  bool ok = true;
  for (const auto& w : s.shift().words(d)) {
    const Algebraic diff = fixed(w) - path.value(w);
    r.discrepancy = std::max(r.discrepancy, diff.abs());
    if (path.exact)
      ok = ok && diff.is_zero();
    else
      ok = ok && diff.abs() <= path.max_gap + 1e-12;
  }
  r.consistent = ok;
  return r;
}

struct HcReportTorus {
  TrigPolynomial<Algebraic> fixed_point;
  std::vector<std::pair<Rational, PathSumEstimate>> cycle_checks;  // path sums at cycle points
  bool consistent = false;
  double discrepancy = 0.0;
};

inline HcReportTorus compute_h_c(const PathSpace& s, const TorusFilter& filter, const MraOptions& opt = {}, long long max_frequency = 8,
                                 std::size_t p_max = 8, const std::vector<Rational>& extra_points = {}) {
  const TorusSystem& sys = *s.circle();
  const auto cycle = circle_cycle(s);
  HcReportTorus r{h_fixed_point(sys, filter, cycle, max_frequency, p_max)};
  std::vector<Rational> points;
  for (const auto& x : cycle.points) points.push_back(x.angle);
  points.insert(points.end(), extra_points.begin(), extra_points.end());
  bool ok = true;
  for (const auto& a : points) {
    auto est = h_path_sum(s, filter, to_double(a), opt);
    const double diff = std::abs(r.fixed_point.at(a) - est.value);
    r.discrepancy = std::max(r.discrepancy, diff);
    ok = ok && diff <= est.bound;
    r.cycle_checks.emplace_back(a, est);
  }
  r.consistent = ok;
  return r;
}

// --- correlation identity ----------------------------------------------------------------

/// <pi(f) phi-hat, phi-hat> = int f h_C drho.  The left side is the lambda_C
/// integral of f(x)|phi-hat|^2, summed over paths per base cylinder.
inline Residual correlation_residual(const PathSpace& s, const MarkovMeasure& rho, const SftFilter& filter,
                                     const CylinderFunction<Algebraic>& f, const MraOptions& opt = {}, std::size_t p_max = 8) {
  const auto path = h_path_sum_function(s, filter, opt);
  const auto fixed = h_fixed_point(s.shift(), filter, symbolic_cycle(s), 0, p_max);
  const Algebraic lhs = rho.integrate(f * path.value.refine(std::max(path.value.depth(), f.depth())));
  const Algebraic rhs = rho.integrate(f * fixed.refine(std::max(fixed.depth(), f.depth())));
  Residual r = exact_residual(lhs - rhs);
  if (!path.exact) {
    r.exact = false;
    double fmax = 0;
    for (const auto& [w, v] : f.values()) fmax = std::max(fmax, v.abs());
    r.bound = fmax * path.max_gap;
  }
  return r;
}

/// Circle version: the left side on a uniform grid of `grid` points (exact for
/// trig polynomials of degree < grid), each path sum carrying its own bound.
/// grid = 0 picks the smallest power of two >= 8 above deg(f) + deg(h).
inline Residual correlation_residual(const PathSpace& s, const TorusFilter& filter, const TrigPolynomial<Algebraic>& f,
                                     const MraOptions& opt = {}, std::size_t grid = 0, long long max_frequency = 8,
                                     std::size_t p_max = 8) {
  const TorusSystem& sys = *s.circle();
  const auto h = h_fixed_point(sys, filter, circle_cycle(s), max_frequency, p_max);
  if (grid == 0)
    for (grid = 8; static_cast<long long>(grid) <= f.degree() + h.degree(); grid *= 2) {
    }
  if (static_cast<long long>(grid) <= f.degree() + h.degree()) throw PreconditionError("grid too coarse for deg(f) + deg(h)");
  Algebraic rhs;
  for (const auto& [n, c] : f.coefficients()) rhs += c * h.coefficient(-n);
  std::complex<double> lhs = 0;
  double gap = 0;
  for (std::size_t j = 0; j < grid; ++j) {
    const Rational a = make_rational(static_cast<long long>(j), static_cast<long long>(grid));
    auto est = h_path_sum(s, filter, to_double(a), opt);
    lhs += f.at(a) * est.value;
    gap += est.bound;
  }
  lhs /= static_cast<double>(grid);
  Residual r;
  r.exact = false;
  r.value = std::abs(lhs - rhs.to_complex());
  r.bound = f.l1_norm() * gap / static_cast<double>(grid);
  r.note = "grid " + std::to_string(grid);
  return r;
}

// --- the isometry S_0 ------------------------------------------------------------------------

inline CylinderFunction<Algebraic> s0_apply(const SftFilter& filter, const CylinderFunction<Algebraic>& f) {
  const auto g = f.compose_shift(1);
  const std::size_t d = std::max(g.depth(), filter.m0.depth());
  return filter.m0.refine(d) * g.refine(d);
}

inline TrigPolynomial<Algebraic> s0_apply(const TorusSystem& sys, const TorusFilter& filter, const TrigPolynomial<Algebraic>& f) {
  return filter.m0 * f.compose_power(sys.degree());
}

/// (1/#r^{-1}(x)) sum_{r(y)=x} |m_0(y)|^2 h(y) = h(x), exactly.
inline void validate_qmf_h(const SftFilter& filter, const CylinderFunction<Algebraic>& h) {
  const SftSystem& sys = filter.m0.system();
  const std::size_t d = std::max(h.depth(), filter.m0.depth());
  auto lhs = transfer(uniform_weight(sys), filter.m0.abs2().refine(d) * h.refine(d));
  if (!(lhs == h)) throw ValidationError("h is not a fixed point of the |m_0|^2 averaging operator");
  for (const auto& [w, v] : h.values())
    if (!v.is_real() || v.sign() < 0) throw ValidationError("h must be real and nonnegative");
}

inline void validate_qmf_h(const TorusSystem& sys, const TorusFilter& filter, const TrigPolynomial<Algebraic>& h) {
  if (!((filter.m0.abs2() * h).decimate(sys.degree()) == h))
    throw ValidationError("h is not a fixed point of the |m_0|^2 averaging operator");
  if (!(h.conj() == h)) throw ValidationError("h must be real");
}

inline Residual s0_isometry_residual(const MarkovMeasure& rho, const SftFilter& filter, const CylinderFunction<Algebraic>& h,
                                     const CylinderFunction<Algebraic>& f, const CylinderFunction<Algebraic>& g) {
  validate_qmf_h(filter, h);
  auto inner_h = [&](const CylinderFunction<Algebraic>& a, const CylinderFunction<Algebraic>& b) {
    const std::size_t d = std::max({a.depth(), b.depth(), h.depth()});
    return rho.integrate(a.refine(d) * b.conj().refine(d) * h.refine(d));
  };
  return exact_residual(inner_h(s0_apply(filter, f), s0_apply(filter, g)) - inner_h(f, g));
}

inline Residual s0_isometry_residual(const TorusSystem& sys, const TorusFilter& filter, const TrigPolynomial<Algebraic>& h,
                                     const TrigPolynomial<Algebraic>& f, const TrigPolynomial<Algebraic>& g) {
  validate_qmf_h(sys, filter, h);
  auto inner_h = [&](const TrigPolynomial<Algebraic>& a, const TrigPolynomial<Algebraic>& b) { return (a * b.conj() * h).coefficient(0); };
  return exact_residual(inner_h(s0_apply(sys, filter, f), s0_apply(sys, filter, g)) - inner_h(f, g));
}

// --- purity diagnostics -------------------------------------------------------------------------

/// s_k(x) = |m_0^{(k)}(x)|^2 E_k^c(|xi|^2)(x), summarized per k by its
/// rho-geometric mean exp(int ln s_k drho) (0 when s_k vanishes on positive mass).
struct PurityReport {
  std::vector<double> s;          // k = 1..k_max
  std::vector<double> zero_mass;  // rho{s_k = 0}
  bool exact = false;             // s computed from exact cylinder values
  double fitted_rate = 0.0;       // exp(slope of ln s_k), NaN when some s_k = 0
  bool hypothesis_violated = false;
  bool decaying = false;          // non-increasing and ending below s_1
  std::size_t samples = 0;
};

namespace detail {

inline void finish_purity(PurityReport& r) {
  const std::size_t n = r.s.size();
  bool positive = true;
  for (double v : r.s) positive = positive && v > 0;
  if (positive && n >= 2) {
    double sk = 0, sy = 0, skk = 0, sky = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double k = static_cast<double>(i + 1), y = std::log(r.s[i]);
      sk += k;
      sy += y;
      skk += k * k;
      sky += k * y;
    }
    const double slope = (static_cast<double>(n) * sky - sk * sy) / (static_cast<double>(n) * skk - sk * sk);
    r.fitted_rate = std::exp(slope);
  } else {
    r.fitted_rate = std::numeric_limits<double>::quiet_NaN();
  }
  bool monotone = true;
  for (std::size_t i = 1; i < n; ++i) monotone = monotone && r.s[i] <= r.s[i - 1] * (1 + 1e-12);
  r.decaying = !r.hypothesis_violated && monotone && n >= 1 && (r.s.back() < r.s.front() || r.s.back() == 0.0);
}

}  // namespace detail

inline PurityReport purity_decay(const MarkovMeasure& rho, const SftFilter& filter, const CylinderFunction<Algebraic>& xi,
                                 std::size_t k_max) {
  if (k_max < 1) throw PreconditionError("k_max must be >= 1");
  const SftSystem& sys = rho.system();
  if (!qmf_residual(sys, filter).is_exact_zero()) throw PreconditionError("filter violates the QMF condition");
  PurityReport r;
  r.exact = true;
  r.hypothesis_violated = unimodular_everywhere(filter);
  const auto m2 = filter.m0.abs2();
  const auto xi2 = xi.abs2();
  const auto avg = uniform_weight(sys);
  CylinderFunction<Algebraic> M = m2;          // |m_0^{(k)}|^2
  CylinderFunction<Algebraic> R = transfer(avg, xi2);  // R_c^k |xi|^2
  for (std::size_t k = 1; k <= k_max; ++k) {
    if (k > 1) {
      M = m2.refine(std::max(m2.depth(), M.depth() + 1)) * M.compose_shift(1);
      R = transfer(avg, R);
    }
    const auto E = R.compose_shift(k);
    const std::size_t d = std::max(M.depth(), E.depth());
    const auto sk = M.refine(d) * E.refine(d);
    Rational zero = 0;
    double log_mean = 0;
    for (const auto& [w, v] : sk.values()) {
      const Rational mass = rho.mass(w);
      if (mass == 0) continue;
      if (v.is_zero())
        zero += mass;
      else
        log_mean += to_double(mass) * std::log(v.abs());
    }
    r.zero_mass.push_back(to_double(zero));
    r.s.push_back(zero > 0 ? 0.0 : std::exp(log_mean));
  }
  detail::finish_purity(r);
  return r;
}

/// Circle version: Monte Carlo over Haar-random digit streams.
inline PurityReport purity_decay(const TorusSystem& sys, const TorusFilter& filter, const TrigPolynomial<Algebraic>& xi, std::size_t k_max,
                                 std::size_t samples, std::uint64_t seed) {
  if (k_max < 1 || samples < 1) throw PreconditionError("k_max and samples must be >= 1");
  if (!qmf_residual(sys, filter).is_exact_zero()) throw PreconditionError("filter violates the QMF condition");
  PurityReport r;
  r.samples = samples;
  r.hypothesis_violated = unimodular_everywhere(filter);
  const RealTrigEvaluator m2(filter.m0.abs2());
  std::vector<RealTrigEvaluator> E;  // R_c^k |xi|^2
  TrigPolynomial<Algebraic> q = xi.abs2();
  for (std::size_t k = 1; k <= k_max; ++k) {
    q = q.decimate(sys.degree());
    E.emplace_back(q);
  }
  std::vector<double> log_sum(k_max, 0.0);
  std::vector<std::size_t> zeros(k_max, 0);
  std::mt19937_64 rng(seed);
  for (std::size_t n = 0; n < samples; ++n) {
    DigitStream x(sys.degree(), rng);
    double logM = 0;
    bool dead = false;
    for (std::size_t k = 1; k <= k_max; ++k) {
      const double a = m2(x.angle());
      if (a <= 0) dead = true;
      if (!dead) logM += std::log(a);
      x.advance();
      const double e = E[k - 1](x.angle());
      if (dead || e <= 0)
        ++zeros[k - 1];
      else
        log_sum[k - 1] += logM + std::log(e);
    }
  }
  for (std::size_t k = 0; k < k_max; ++k) {
    const double zm = static_cast<double>(zeros[k]) / static_cast<double>(samples);
    r.zero_mass.push_back(zm);
    r.s.push_back(zeros[k] > 0 ? 0.0 : std::exp(log_sum[k] / static_cast<double>(samples)));
  }
  detail::finish_purity(r);
  return r;
}

// --- multiplicity ---------------------------------------------------------------------------------

/// #(r^{-n}(x) cap {h != 0}) as [lower, upper]; equal when every sign is certified.
struct Multiplicity {
  std::size_t lower = 0;
  std::size_t upper = 0;
  bool exact() const { return lower == upper; }
};

inline Multiplicity multiplicity(const SftSystem& sys, const CylinderFunction<Algebraic>& h, const SftPoint& x, std::size_t n) {
  sys.validate(x);
  std::vector<SftPoint> level{x};
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<SftPoint> next;
    for (const auto& y : level)
      for (auto& z : preimages(sys, y)) next.push_back(std::move(z));
    level = std::move(next);
  }
  Multiplicity m;
  for (const auto& y : level)
    if (!h.at(y).is_zero()) ++m.lower;
  m.upper = m.lower;
  return m;
}

inline Multiplicity multiplicity(const TorusSystem& sys, const TrigPolynomial<Algebraic>& h, const TorusPoint& x, std::size_t n,
                                 double margin = 1e-9) {
  sys.validate(x);
  BigInt scale = 1;
  for (std::size_t k = 0; k < n; ++k) scale *= sys.degree();
  Multiplicity m;
  const double sup = h.l1_norm();
  for (BigInt l = 0; l < scale; ++l) {
    const Rational y = (x.angle + Rational(l)) / Rational(scale);
    if (auto v = h.exact_at(y)) {
      if (!v->is_zero()) ++m.lower, ++m.upper;
      continue;
    }
    const double a = std::abs(h.at(y));
    if (a > margin * std::max(sup, 1.0)) {
      ++m.lower;
      ++m.upper;
    } else {
      ++m.upper;
    }
  }
  return m;
}

}  // namespace endomra
