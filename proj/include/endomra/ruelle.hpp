// Filters m_0, weights W = |m_0|^2 / c, the transfer operator R_W, harmonic
// functions, W-cycles, conditional expectations and the log-mean constant
// A = int ln|m_0| drho.
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "endomra/exact.hpp"
#include "endomra/linalg.hpp"
#include "endomra/measure.hpp"
#include "endomra/observable.hpp"
#include "endomra/residual.hpp"
#include "endomra/sft.hpp"
#include "endomra/torus.hpp"

namespace endomra {

inline constexpr std::size_t kDefaultGrid = 1u << 14;
inline constexpr double kDefaultCycleTol = 1e-9;

/// Phases alpha_i attached to a cycle; empty means all 1.
struct Phases {
  std::vector<Algebraic> values;

  Algebraic at(long long i) const {
    if (values.empty()) return Algebraic(1);
    const auto p = static_cast<long long>(values.size());
    return values[static_cast<std::size_t>(((i % p) + p) % p)];
  }
  void validate(std::size_t p) const {
    if (!values.empty() && values.size() != p) throw ValidationError("need one phase per cycle point");
    for (const auto& a : values)
      if (!(a.norm() == Algebraic(1))) throw ValidationError("phases must have modulus 1: " + a.str());
  }
};

struct SftFilter {
  CylinderFunction<Algebraic> m0;
  Phases phases;
};

struct TorusFilter {
  TrigPolynomial<Algebraic> m0;
  Phases phases;
};

/// m_0(11.) = sqrt 2, m_0(12.) = 1, m_0(21.) = 0 on the golden mean shift.
inline SftFilter golden_mean_filter(const SftSystem& sys) {
  std::map<Word, Algebraic> t{{{0, 0}, Algebraic::sqrt(2)}, {{0, 1}, Algebraic(1)}, {{1, 0}, Algebraic(0)}};
  return {CylinderFunction<Algebraic>::from_table(sys, 2, t), {}};
}

/// m_0(z) = (1 + z^k)/sqrt 2 on the doubling map; k = 1 is the Haar filter.
inline TorusFilter haar_type_filter(long long k = 1) {
  const Algebraic s = Algebraic(1) / Algebraic::sqrt(2);
  return {TrigPolynomial<Algebraic>({{0, s}, {k, s}}), {}};
}

// --- evaluation helpers -----------------------------------------------------

struct PointValue {
  std::complex<double> value;
  std::optional<Algebraic> exact;
};

inline PointValue evaluate(const CylinderFunction<Algebraic>& f, const SftPoint& x) {
  const Algebraic& v = f.at(x);
  return {v.to_complex(), v};
}

inline PointValue evaluate(const TrigPolynomial<Algebraic>& f, const TorusPoint& x) {
  auto e = f.exact_at(x.angle);
  return {e ? e->to_complex() : f.at(x.angle), e};
}

// --- QMF, low-pass, weight ---------------------------------------------------

/// sup_x |(1/#r^{-1}(x)) sum_{r(y)=x} |m_0(y)|^2 - 1|.
inline Residual qmf_residual(const SftSystem& sys, const SftFilter& filter) {
  auto avg = transfer(uniform_weight(sys), filter.m0.abs2());
  Residual worst;
  for (const auto& [w, v] : avg.values()) worst = max_residual(worst, exact_residual(v - Algebraic(1)));
  return worst;
}

/// Sup norm of a trig polynomial: exact for constants, otherwise a grid sup
/// with the coefficient l1 norm as a certified upper bound in the note.
template <typename T>
Residual trig_sup(const TrigPolynomial<T>& p, std::size_t grid = kDefaultGrid) {
  if (p.is_zero()) return {};
  if (p.is_constant()) return exact_residual(p.coefficient(0));
  Residual r;
  r.exact = false;
  for (std::size_t j = 0; j < grid; ++j)
    r.value = std::max(r.value, std::abs(p(static_cast<double>(j) / static_cast<double>(grid))));
  r.note = "grid " + std::to_string(grid) + ", l1 bound " + std::to_string(p.l1_norm());
  return r;
}

inline Residual qmf_residual(const TorusSystem& sys, const TorusFilter& filter) {
  auto avg = filter.m0.abs2().decimate(sys.degree());
  return trig_sup(avg - TrigPolynomial<Algebraic>::constant(Algebraic(1)));
}

/// max_i |m_0(x_i) - alpha_i sqrt(c(x_i))|.
inline Residual low_pass_residual(const SftSystem& sys, const SftFilter& filter, const Cycle<SftPoint>& cycle) {
  validate_cycle(sys, cycle);
  filter.phases.validate(cycle.length());
  Residual worst;
  for (std::size_t i = 0; i < cycle.length(); ++i) {
    const auto& x = cycle.points[i];
    Algebraic target = filter.phases.at(static_cast<long long>(i)) * Algebraic::sqrt(fiber_count_after(sys, x));
    worst = max_residual(worst, exact_residual(filter.m0.at(x) - target));
  }
  return worst;
}

inline Residual low_pass_residual(const TorusSystem& sys, const TorusFilter& filter, const Cycle<TorusPoint>& cycle) {
  validate_cycle(sys, cycle);
  filter.phases.validate(cycle.length());
  Residual worst;
  for (std::size_t i = 0; i < cycle.length(); ++i) {
    const auto& x = cycle.points[i];
    Algebraic target = filter.phases.at(static_cast<long long>(i)) * Algebraic::sqrt(sys.degree());
    auto v = evaluate(filter.m0, x);
    if (v.exact) {
      worst = max_residual(worst, exact_residual(*v.exact - target));
    } else {
      Residual r;
      r.exact = false;
      r.value = std::abs(v.value - target.to_complex());
      worst = max_residual(worst, r);
    }
  }
  return worst;
}

/// W = |m_0|^2 / c on depth max(k, 2); throws when W > 1 somewhere.
inline CylinderFunction<Algebraic> weight_from_filter(const SftSystem& sys, const SftFilter& filter) {
  const std::size_t d = std::max<std::size_t>(filter.m0.depth(), 2);
  CylinderFunction<Algebraic> w(sys, d);
  const auto m = filter.m0.abs2();
  for (const auto& word : sys.words(d)) {
    Algebraic v = m(word) / Algebraic(sys.in_degree(word[1]));
    if ((Algebraic(1) - v).sign() < 0)
      throw ValidationError("W = |m0|^2/c exceeds 1 on [" + sys.alphabet().format(word) + "]: QMF violated");
    w.set(word, v);
  }
  return w;
}

inline TrigPolynomial<Algebraic> weight_from_filter(const TorusSystem& sys, const TorusFilter& filter) {
  auto w = Algebraic(make_rational(1, sys.degree())) * filter.m0.abs2();
  if (!qmf_residual(sys, filter).is_exact_zero()) {
    // without the QMF identity W <= 1 is not automatic; check on a grid
    for (std::size_t j = 0; j < kDefaultGrid; ++j) {
      double x = static_cast<double>(j) / static_cast<double>(kDefaultGrid);
      if (w(x).real() > 1 + 1e-12)
        throw ValidationError("W = |m0|^2/N exceeds 1 near x = " + std::to_string(x) + ": QMF violated");
    }
  }
  return w;
}

// --- transfer operator -------------------------------------------------------

template <typename T, typename U>
CylinderFunction<T> apply_ruelle(const CylinderFunction<U>& weight, const CylinderFunction<T>& f) {
  return transfer(weight, f);
}

template <typename T>
TrigPolynomial<T> apply_ruelle(const TorusSystem& sys, const TrigPolynomial<T>& weight, const TrigPolynomial<T>& f) {
  return transfer(sys.degree(), weight, f);
}

/// Basis of {h : R_W h = h} among depth-`depth` cylinder functions.
inline std::vector<CylinderFunction<Algebraic>> harmonic_space(const CylinderFunction<Algebraic>& weight, std::size_t depth) {
  const SftSystem& sys = weight.system();
  const std::size_t d = std::max(depth, weight.depth());
  const auto words = sys.words(d);
  Matrix<Algebraic> m(words.size(), words.size());
  for (std::size_t c = 0; c < words.size(); ++c) {
    CylinderFunction<Algebraic> e(sys, d);
    e.set(words[c], Algebraic(1));
    auto image = transfer(weight, e).refine(d);
    for (std::size_t r = 0; r < words.size(); ++r) m(r, c) = image(words[r]);
  }
  auto kernel = nullspace(m - Matrix<Algebraic>::identity(words.size()));
  std::vector<CylinderFunction<Algebraic>> out;
  for (const auto& v : kernel) {
    CylinderFunction<Algebraic> h(sys, d);
    for (std::size_t i = 0; i < words.size(); ++i) h.set(words[i], v[i]);
    out.push_back(h.coarsen());
  }
  return out;
}

/// Fixed points of R_W among trig polynomials with frequencies in [-K, K];
/// K is raised to deg(W)/(N-1) if needed so that the space is R_W-invariant.
inline std::vector<TrigPolynomial<Algebraic>> harmonic_space(const TorusSystem& sys, const TrigPolynomial<Algebraic>& weight,
                                                             long long max_frequency) {
  const long long n = sys.degree();
  const long long k = std::max(max_frequency, (weight.degree() + n - 2) / (n - 1));
  const std::size_t dim = static_cast<std::size_t>(2 * k + 1);
  Matrix<Algebraic> m(dim, dim);
  for (long long c = -k; c <= k; ++c) {
    auto image = transfer(n, weight, TrigPolynomial<Algebraic>::monomial(c, Algebraic(1)));
    for (const auto& [f, v] : image.coefficients()) {
      if (f < -k || f > k) throw std::logic_error("frequency truncation is not invariant");
      m(static_cast<std::size_t>(f + k), static_cast<std::size_t>(c + k)) = v;
    }
  }
  auto kernel = nullspace(m - Matrix<Algebraic>::identity(dim));
  std::vector<TrigPolynomial<Algebraic>> out;
  for (const auto& v : kernel) {
    std::map<long long, Algebraic> coeffs;
    for (std::size_t i = 0; i < dim; ++i) coeffs[static_cast<long long>(i) - k] = v[i];
    out.emplace_back(coeffs);
  }
  return out;
}

// --- W-cycles ------------------------------------------------------------------

/// Cycles of length <= p_max on which W = 1; tol = 0 demands exact equality.
inline std::vector<Cycle<SftPoint>> find_w_cycles(const SftSystem& sys, const CylinderFunction<Algebraic>& weight, std::size_t p_max,
                                                  double tol = 0.0) {
  if (tol < 0) throw PreconditionError("tolerance must be >= 0");
  std::vector<Cycle<SftPoint>> out;
  for (auto& c : enumerate_cycles(sys, p_max)) {
    bool all = true;
    for (const auto& x : c.points) {
      const Algebraic& w = weight.at(x);
      all = all && (tol == 0.0 ? w == Algebraic(1) : std::abs(w.to_complex() - 1.0) <= tol);
    }
    if (all) out.push_back(std::move(c));
  }
  return out;
}

inline std::vector<Cycle<TorusPoint>> find_w_cycles(const TorusSystem& sys, const TrigPolynomial<Algebraic>& weight, std::size_t p_max,
                                                    double tol = kDefaultCycleTol) {
  if (tol < 0) throw PreconditionError("tolerance must be >= 0");
  std::vector<Cycle<TorusPoint>> out;
  for (auto& c : enumerate_cycles(sys, p_max)) {
    bool all = true;
    for (const auto& x : c.points) {
      auto v = evaluate(weight, x);
      if (v.exact)
        all = all && (tol == 0.0 ? *v.exact == Algebraic(1) : std::abs(v.exact->to_complex() - 1.0) <= tol);
      else
        all = all && std::abs(v.value - 1.0) <= std::max(tol, 1e-12);
    }
    if (all) out.push_back(std::move(c));
  }
  return out;
}

// --- conditional expectations and averaging -------------------------------------

/// E_n^V(f) = (R_V^n f) o r^n.
template <typename T>
CylinderFunction<T> conditional_expectation(const CylinderFunction<Rational>& v, const CylinderFunction<T>& f, std::size_t n) {
  if (n == 0) return f;
  CylinderFunction<T> g = f;
  for (std::size_t i = 0; i < n; ++i) g = transfer(v, g);
  return g.compose_shift(n);
}

template <typename T>
TrigPolynomial<T> conditional_expectation(const TorusSystem& sys, const TrigPolynomial<T>& v, const TrigPolynomial<T>& f,
                                          std::size_t n) {
  TrigPolynomial<T> g = f;
  long long scale = 1;
  for (std::size_t i = 0; i < n; ++i) {
    g = transfer(sys.degree(), v, g);
    scale *= sys.degree();
  }
  return g.compose_power(scale);
}

/// Uniform weight 1/N as a trig polynomial.
inline TrigPolynomial<Algebraic> uniform_weight(const TorusSystem& sys) {
  return TrigPolynomial<Algebraic>::constant(Algebraic(make_rational(1, sys.degree())));
}

/// d_n = || R_V^n f - int f dnu ||_{L^1(nu)} for n = 0..n_max, exactly.
inline std::vector<Rational> averaging_decay(const MarkovMeasure& nu, const CylinderFunction<Rational>& f, std::size_t n_max) {
  if (n_max < 1) throw PreconditionError("n_max must be >= 1");
  const Rational mean = nu.integrate(f);
  std::vector<Rational> out;
  CylinderFunction<Rational> g = f;
  for (std::size_t n = 0; n <= n_max; ++n) {
    if (n > 0) g = transfer(nu.weight(), g);
    Rational d = 0;
    for (const auto& [w, v] : g.values()) d += nu.mass(w) * abs(v - mean);
    out.push_back(d);
  }
  return out;
}

/// Torus version: exact 0 when R^n f is constant, otherwise a grid L^1 estimate.
inline std::vector<double> averaging_decay(const TorusSystem& sys, const TrigPolynomial<Algebraic>& v, const TrigPolynomial<Algebraic>& f,
                                           std::size_t n_max, std::size_t grid = kDefaultGrid) {
  if (n_max < 1) throw PreconditionError("n_max must be >= 1");
  const Algebraic mean = f.coefficient(0);
  std::vector<double> out;
  TrigPolynomial<Algebraic> g = f;
  for (std::size_t n = 0; n <= n_max; ++n) {
    if (n > 0) g = transfer(sys.degree(), v, g);
    auto diff = g - TrigPolynomial<Algebraic>::constant(mean);
    if (diff.is_zero()) {
      out.push_back(0.0);
      continue;
    }
    double s = 0;
    for (std::size_t j = 0; j < grid; ++j) s += std::abs(diff((static_cast<double>(j) + 0.5) / static_cast<double>(grid)));
    out.push_back(s / static_cast<double>(grid));
  }
  return out;
}

// --- log-mean constant A ----------------------------------------------------------

struct LyapunovEstimate {
  double value = 0.0;            // A; -inf when m_0 vanishes on positive measure
  double std_error = 0.0;        // 0 for exact evaluations
  bool exact = false;
  bool minus_infinity = false;
  double zero_set_mass = 0.0;    // measure of {m_0 = 0}
  bool hypothesis_violated = false;  // |m_0| = 1 almost everywhere
  std::size_t samples = 0;
  std::size_t orbit_length = 0;
};

inline bool unimodular_everywhere(const SftFilter& f) {
  for (const auto& [w, v] : f.m0.values())
    if (!(v.norm() == Algebraic(1))) return false;
  return true;
}

inline bool unimodular_everywhere(const TorusFilter& f) {
  return (f.m0.abs2() - TrigPolynomial<Algebraic>::constant(Algebraic(1))).is_zero();
}

/// A = sum_w rho([w]) ln|m_0(w)| over the filter table, zero set reported separately.
inline LyapunovEstimate lyapunov_A(const MarkovMeasure& rho, const SftFilter& filter) {
  LyapunovEstimate e;
  e.exact = true;
  e.hypothesis_violated = unimodular_everywhere(filter);
  Rational zero_mass = 0;
  double acc = 0;
  for (const auto& [w, v] : filter.m0.values()) {
    Rational m = rho.mass(w);
    if (m == 0) continue;
    if (v.is_zero())
      zero_mass += m;
    else
      acc += to_double(m) * std::log(v.abs());
  }
  e.zero_set_mass = to_double(zero_mass);
  e.minus_infinity = zero_mass > 0;
  e.value = e.minus_infinity ? -std::numeric_limits<double>::infinity() : acc;
  return e;
}

/// Monte Carlo A for the circle: mean over `samples` Haar-random points of the
/// orbit average of ln|m_0| along `orbit_length` steps, with its standard error.
inline LyapunovEstimate lyapunov_A(const TorusSystem& sys, const TorusFilter& filter, std::size_t samples, std::size_t orbit_length,
                                   std::uint64_t seed) {
  if (samples < 2 || orbit_length < 1) throw PreconditionError("need >= 2 samples and orbit length >= 1");
  LyapunovEstimate e;
  e.samples = samples;
  e.orbit_length = orbit_length;
  e.hypothesis_violated = unimodular_everywhere(filter);
  std::mt19937_64 rng(seed);
  const RealTrigEvaluator m2_of(filter.m0.abs2());
  double mean = 0, m2 = 0;
  std::size_t zeros = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    DigitStream x(sys.degree(), rng);
    double acc = 0;
    for (std::size_t k = 0; k < orbit_length; ++k) {
      double a = m2_of(x.angle());
      if (a <= 0.0) {
        ++zeros;
        a = std::numeric_limits<double>::denorm_min();
      }
      acc += 0.5 * std::log(a);
      x.advance();
    }
    const double avg = acc / static_cast<double>(orbit_length);
    const double delta = avg - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (avg - mean);
  }
  e.value = mean;
  e.std_error = std::sqrt(m2 / static_cast<double>(samples - 1) / static_cast<double>(samples));
  e.zero_set_mass = static_cast<double>(zeros) / static_cast<double>(samples * orbit_length);
  return e;
}

/// Monte Carlo A on an SFT from sampled words (orbit averages over the word).
inline LyapunovEstimate lyapunov_A(const MarkovMeasure& rho, const SftFilter& filter, std::size_t samples, std::size_t orbit_length,
                                   std::uint64_t seed) {
  if (samples < 2 || orbit_length < 1) throw PreconditionError("need >= 2 samples and orbit length >= 1");
  LyapunovEstimate e;
  e.samples = samples;
  e.orbit_length = orbit_length;
  e.hypothesis_violated = unimodular_everywhere(filter);
  const std::size_t k = filter.m0.depth();
  auto words = rho.sample_words(samples, orbit_length + k, seed);
  double mean = 0, m2 = 0;
  std::size_t hits = 0, zeros = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    double acc = 0;
    bool zero = false;
    for (std::size_t j = 0; j < orbit_length; ++j) {
      const Algebraic& v = filter.m0(Word(words[s].begin() + static_cast<std::ptrdiff_t>(j), words[s].end()));
      if (v.is_zero()) {
        zero = true;
        ++zeros;
        continue;
      }
      acc += std::log(v.abs());
    }
    if (zero) continue;
    const double avg = acc / static_cast<double>(orbit_length);
    ++hits;
    const double delta = avg - mean;
    mean += delta / static_cast<double>(hits);
    m2 += delta * (avg - mean);
  }
  e.zero_set_mass = static_cast<double>(zeros) / static_cast<double>(samples * orbit_length);
  if (zeros > 0) {
    e.minus_infinity = true;
    e.value = -std::numeric_limits<double>::infinity();
  } else {
    e.value = mean;
    e.std_error = hits > 1 ? std::sqrt(m2 / static_cast<double>(hits - 1) / static_cast<double>(hits)) : 0.0;
  }
  return e;
}

struct BirkhoffMean {
  double value = 0.0;  // (1/n) sum_{k<n} ln|m_0(r^k x)|
  bool minus_infinity = false;
  std::size_t first_zero = 0;  // orbit index of the first zero of m_0
};

/// Log-mean along the orbit of an exact SFT point.
inline BirkhoffMean birkhoff_log_mean(const SftSystem& sys, const SftFilter& filter, const SftPoint& x, std::size_t n) {
  sys.validate(x);
  if (n < 1) throw PreconditionError("n must be >= 1");
  BirkhoffMean b;
  SftPoint y = x;
  double acc = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const Algebraic& v = filter.m0.at(y);
    if (v.is_zero()) {
      b.minus_infinity = true;
      b.first_zero = k;
      b.value = -std::numeric_limits<double>::infinity();
      return b;
    }
    acc += std::log(v.abs());
    y = apply(sys, y);
  }
  b.value = acc / static_cast<double>(n);
  return b;
}

/// Log-mean along the orbit of a Haar-generic point drawn from `seed`.
inline BirkhoffMean birkhoff_log_mean(const TorusSystem& sys, const TorusFilter& filter, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw PreconditionError("n must be >= 1");
  std::mt19937_64 rng(seed);
  DigitStream x(sys.degree(), rng);
  const RealTrigEvaluator m2_of(filter.m0.abs2());
  BirkhoffMean b;
  double acc = 0;
  for (std::size_t k = 0; k < n; ++k) {
    double a = m2_of(x.angle());
    if (a <= 0.0) {
      b.minus_infinity = true;
      b.first_zero = k;
      b.value = -std::numeric_limits<double>::infinity();
      return b;
    }
    acc += 0.5 * std::log(a);
    x.advance();
  }
  b.value = acc / static_cast<double>(n);
  return b;
}

}  // namespace endomra
