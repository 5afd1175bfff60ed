// Observables with exact finite representations: cylinder functions on a
// subshift (a value per admissible word of fixed length) and trigonometric
// polynomials on the circle.  Both support the transfer operator
// (R_W f)(x) = sum_{r(y)=x} W(y) f(y) exactly.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "endomra/exact.hpp"
#include "endomra/sft.hpp"
#include "endomra/torus.hpp"

namespace endomra {

// --- scalar helpers shared by the exact and floating value types ---------

inline std::complex<double> as_complex(const Algebraic& a) { return a.to_complex(); }
inline std::complex<double> as_complex(const Rational& q) { return {to_double(q), 0.0}; }
inline std::complex<double> as_complex(const std::complex<double>& z) { return z; }

inline Algebraic conj_of(const Algebraic& a) { return a.conj(); }
inline Rational conj_of(const Rational& q) { return q; }
inline std::complex<double> conj_of(const std::complex<double>& z) { return std::conj(z); }

template <typename T>
bool is_zero_of(const T& v) {
  if constexpr (requires { v.is_zero(); })
    return v.is_zero();
  else
    return v == T(0);
}

// --- cylinder functions --------------------------------------------------

/// f(x) = table[x_0 ... x_{k-1}] on an SFT; the table covers every admissible word of length k.
template <typename T>
class CylinderFunction {
 public:
  CylinderFunction(SftSystem sys, std::size_t depth, const T& fill = T(0)) : sys_(std::move(sys)), depth_(depth) {
    if (depth_ < 1) throw ValidationError("cylinder depth must be >= 1");
    for (auto& w : sys_.words(depth_)) values_.emplace(std::move(w), fill);
  }

  /// Table from explicit entries; every admissible word must appear.
  static CylinderFunction from_table(const SftSystem& sys, std::size_t depth, const std::map<Word, T>& table) {
    CylinderFunction f(sys, depth);
    for (const auto& [w, v] : table) {
      if (w.size() != depth) throw ValidationError("table word has wrong length: " + sys.alphabet().format(w));
      if (!sys.admissible(w)) throw ValidationError("table word is not admissible: " + sys.alphabet().format(w));
      f.values_[w] = v;
    }
    if (table.size() != f.values_.size())
      throw ValidationError("table must define a value on every admissible word of length " + std::to_string(depth));
    return f;
  }

  /// Table from entries on words of length <= depth; each entry covers all
  /// admissible extensions, later (longer) entries override shorter ones.
  static CylinderFunction from_patterns(const SftSystem& sys, std::size_t depth, const std::map<Word, T>& patterns) {
    CylinderFunction f(sys, depth);
    std::map<Word, bool> set;
    std::vector<std::pair<Word, T>> ordered(patterns.begin(), patterns.end());
    std::stable_sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.first.size() < b.first.size(); });
    for (const auto& [pat, v] : ordered) {
      if (pat.empty() || pat.size() > depth) throw ValidationError("pattern length must be in 1..depth");
      for (auto& [w, val] : f.values_)
        if (std::equal(pat.begin(), pat.end(), w.begin())) {
          val = v;
          set[w] = true;
        }
    }
    if (set.size() != f.values_.size())
      throw ValidationError("patterns must cover every admissible word of length " + std::to_string(depth));
    return f;
  }

  static CylinderFunction constant(const SftSystem& sys, const T& v) { return CylinderFunction(sys, 1, v); }

  static CylinderFunction indicator(const SftSystem& sys, const Word& w) {
    if (w.empty() || !sys.admissible(w)) throw ValidationError("indicator needs a nonempty admissible word");
    CylinderFunction f(sys, w.size());
    f.values_.at(w) = T(1);
    return f;
  }

  const SftSystem& system() const { return sys_; }
  std::size_t depth() const { return depth_; }
  const std::map<Word, T>& values() const { return values_; }

  /// Value on any admissible word of length >= depth (only the first depth letters matter).
  const T& operator()(const Word& w) const {
    if (w.size() < depth_) throw PreconditionError("word shorter than the cylinder depth");
    auto it = values_.find(Word(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(depth_)));
    if (it == values_.end()) throw ValidationError("word outside the admissible language: " + sys_.alphabet().format(w));
    return it->second;
  }
  const T& at(const SftPoint& x) const { return (*this)(x.leading(depth_)); }

  void set(const Word& w, const T& v) {
    auto it = values_.find(w);
    if (it == values_.end()) throw ValidationError("not an admissible word of the table depth");
    it->second = v;
  }

  /// Same function on a finer table.
  CylinderFunction refine(std::size_t depth) const {
    if (depth < depth_) throw PreconditionError("refine cannot reduce depth");
    if (depth == depth_) return *this;
    CylinderFunction out(sys_, depth);
    for (auto& [w, v] : out.values_) v = (*this)(w);
    return out;
  }

  /// f o r^n
  CylinderFunction compose_shift(std::size_t n) const {
    CylinderFunction out(sys_, depth_ + n);
    for (auto& [w, v] : out.values_) v = (*this)(Word(w.begin() + static_cast<std::ptrdiff_t>(n), w.end()));
    return out;
  }

  template <typename F>
  CylinderFunction map(F&& fn) const {
    return map_to<T>(std::forward<F>(fn));
  }

  template <typename U, typename F>
  CylinderFunction<U> map_to(F&& fn) const {
    CylinderFunction<U> out(sys_, depth_);
    for (const auto& [w, v] : values_) out.set(w, U(fn(v)));
    return out;
  }

  template <typename F>
  static CylinderFunction combine(const CylinderFunction& a, const CylinderFunction& b, F&& fn) {
    if (!(a.sys_ == b.sys_)) throw PreconditionError("functions live on different systems");
    const std::size_t d = std::max(a.depth_, b.depth_);
    CylinderFunction out(a.sys_, d);
    for (auto& [w, v] : out.values_) v = fn(a(w), b(w));
    return out;
  }

  friend CylinderFunction operator+(const CylinderFunction& a, const CylinderFunction& b) {
    return combine(a, b, [](const T& x, const T& y) { return x + y; });
  }
  friend CylinderFunction operator-(const CylinderFunction& a, const CylinderFunction& b) {
    return combine(a, b, [](const T& x, const T& y) { return x - y; });
  }
  friend CylinderFunction operator*(const CylinderFunction& a, const CylinderFunction& b) {
    return combine(a, b, [](const T& x, const T& y) { return x * y; });
  }
  friend CylinderFunction operator*(const T& s, const CylinderFunction& a) {
    return a.map([&](const T& x) { return s * x; });
  }

  CylinderFunction conj() const {
    return map([](const T& x) { return conj_of(x); });
  }
  CylinderFunction abs2() const {
    return map([](const T& x) { return x * conj_of(x); });
  }

  bool is_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](const auto& kv) { return is_zero_of(kv.second); });
  }

  /// Equality as functions (after refinement to a common depth).
  friend bool operator==(const CylinderFunction& a, const CylinderFunction& b) {
    if (!(a.sys_ == b.sys_)) return false;
    const std::size_t d = std::max(a.depth_, b.depth_);
    for (const auto& w : a.sys_.words(d))
      if (!(a(w) == b(w))) return false;
    return true;
  }

  /// Smallest depth on which the function is still exactly representable.
  CylinderFunction coarsen() const {
    CylinderFunction cur = *this;
    while (cur.depth_ > 1) {
      CylinderFunction next(sys_, cur.depth_ - 1);
      bool ok = true;
      for (auto& [w, v] : next.values_) {
        bool first = true;
        for (int a : sys_.successors(w)) {
          Word ext = w;
          ext.push_back(a);
          const T& val = cur(ext);
          if (first) {
            v = val;
            first = false;
          } else if (!(v == val)) {
            ok = false;
            break;
          }
        }
        if (!ok) break;
      }
      if (!ok) break;
      cur = std::move(next);
    }
    return cur;
  }

 private:
  SftSystem sys_;
  std::size_t depth_;
  std::map<Word, T> values_;
};

/// 1/c(x) = 1/#r^{-1}(r(x)) = 1/N(x_1), the uniform weight.
inline CylinderFunction<Rational> uniform_weight(const SftSystem& sys) {
  CylinderFunction<Rational> w(sys, 2);
  for (const auto& word : sys.words(2)) w.set(word, Rational(1, sys.in_degree(word[1])));
  return w;
}

/// (R_W f)(x) = sum_i A(i, x_0) W(i x) f(i x), on depth max(max(dW, df) - 1, 1).
template <typename T, typename U>
CylinderFunction<T> transfer(const CylinderFunction<U>& weight, const CylinderFunction<T>& f) {
  const SftSystem& sys = f.system();
  if (!(weight.system() == sys)) throw PreconditionError("weight and observable live on different systems");
  const std::size_t k = std::max(weight.depth(), f.depth());
  const std::size_t d = std::max<std::size_t>(k - 1, 1);
  CylinderFunction<T> out(sys, d);
  for (const auto& u : sys.words(d)) {
    T acc(0);
    for (int i = 0; i < sys.size(); ++i) {
      if (!sys.allowed(i, u[0])) continue;
      Word iu{i};
      iu.insert(iu.end(), u.begin(), u.end());
      acc = acc + T(weight(iu)) * f(iu);
    }
    out.set(u, acc);
  }
  return out;
}

// --- trigonometric polynomials ---------------------------------------------

/// f(x) = sum_n c_n e^{2 pi i n x}; zero coefficients are never stored.
template <typename T>
class TrigPolynomial {
 public:
  TrigPolynomial() = default;
  explicit TrigPolynomial(const std::map<long long, T>& coeffs) {
    for (const auto& [n, c] : coeffs)
      if (!is_zero_of(c)) coeffs_[n] = c;
  }
  static TrigPolynomial constant(const T& c) { return TrigPolynomial({{0, c}}); }
  static TrigPolynomial monomial(long long n, const T& c) { return TrigPolynomial({{n, c}}); }

  const std::map<long long, T>& coefficients() const { return coeffs_; }
  T coefficient(long long n) const {
    auto it = coeffs_.find(n);
    return it == coeffs_.end() ? T(0) : it->second;
  }
  bool is_zero() const { return coeffs_.empty(); }
  bool is_constant() const { return coeffs_.empty() || (coeffs_.size() == 1 && coeffs_.begin()->first == 0); }
  long long degree() const {
    long long d = 0;
    for (const auto& [n, c] : coeffs_) d = std::max(d, n < 0 ? -n : n);
    return d;
  }

  friend TrigPolynomial operator+(const TrigPolynomial& a, const TrigPolynomial& b) {
    std::map<long long, T> c = a.coeffs_;
    for (const auto& [n, v] : b.coeffs_) c[n] = c.count(n) ? c[n] + v : v;
    return TrigPolynomial(c);
  }
  friend TrigPolynomial operator-(const TrigPolynomial& a, const TrigPolynomial& b) {
    std::map<long long, T> c = a.coeffs_;
    for (const auto& [n, v] : b.coeffs_) c[n] = c.count(n) ? c[n] - v : T(0) - v;
    return TrigPolynomial(c);
  }
  friend TrigPolynomial operator*(const TrigPolynomial& a, const TrigPolynomial& b) {
    std::map<long long, T> c;
    for (const auto& [n, u] : a.coeffs_)
      for (const auto& [m, v] : b.coeffs_) {
        auto it = c.find(n + m);
        if (it == c.end())
          c.emplace(n + m, u * v);
        else
          it->second = it->second + u * v;
      }
    return TrigPolynomial(c);
  }
  friend TrigPolynomial operator*(const T& s, const TrigPolynomial& a) {
    std::map<long long, T> c;
    for (const auto& [n, v] : a.coeffs_) c[n] = s * v;
    return TrigPolynomial(c);
  }
  friend bool operator==(const TrigPolynomial& a, const TrigPolynomial& b) { return a.coeffs_ == b.coeffs_; }

  /// Complex conjugate function: c_n -> conj(c_{-n}).
  TrigPolynomial conj() const {
    std::map<long long, T> c;
    for (const auto& [n, v] : coeffs_) c[-n] = conj_of(v);
    return TrigPolynomial(c);
  }
  TrigPolynomial abs2() const { return *this * conj(); }

  /// f(N x)
  TrigPolynomial compose_power(long long N) const {
    std::map<long long, T> c;
    for (const auto& [n, v] : coeffs_) c[n * N] = v;
    return TrigPolynomial(c);
  }

  /// (1/N) sum_{d} f((x + d)/N): keeps frequencies divisible by N.
  TrigPolynomial decimate(long long N) const {
    std::map<long long, T> c;
    for (const auto& [n, v] : coeffs_)
      if (n % N == 0) c[n / N] = v;
    return TrigPolynomial(c);
  }

  std::complex<double> operator()(double angle) const {
    std::complex<double> acc = 0;
    for (const auto& [n, v] : coeffs_) {
      const double t = 2 * std::numbers::pi * std::fmod(static_cast<double>(n) * angle, 1.0);
      acc += as_complex(v) * std::complex<double>(std::cos(t), std::sin(t));
    }
    return acc;
  }

  /// Evaluation at a rational angle in double precision (phase reduced exactly).
  std::complex<double> at(const Rational& angle) const {
    std::complex<double> acc = 0;
    for (const auto& [n, v] : coeffs_) {
      const double t = 2 * std::numbers::pi * to_double(frac(angle * n));
      acc += as_complex(v) * std::complex<double>(std::cos(t), std::sin(t));
    }
    return acc;
  }

  /// Exact value when every phase is a 24th root of unity.
  std::optional<Algebraic> exact_at(const Rational& angle) const
    requires std::is_same_v<T, Algebraic> || std::is_same_v<T, Rational>
  {
    Algebraic acc;
    for (const auto& [n, v] : coeffs_) {
      auto z = exact_root_of_unity(frac(angle * n));
      if (!z) return std::nullopt;
      acc += Algebraic(v) * *z;
    }
    return acc;
  }

  /// sum |n| |c_n| * 2 pi: a global Lipschitz constant.
  double lipschitz() const {
    double l = 0;
    for (const auto& [n, v] : coeffs_) l += std::abs(static_cast<double>(n)) * std::abs(as_complex(v));
    return 2 * std::numbers::pi * l;
  }

  /// sum |c_n|: a bound for the sup norm.
  double l1_norm() const {
    double s = 0;
    for (const auto& [n, v] : coeffs_) s += std::abs(as_complex(v));
    return s;
  }

 private:
  std::map<long long, T> coeffs_;
};

/// Fast double evaluation of a real-valued trig polynomial (c_{-n} = conj c_n).
class RealTrigEvaluator {
 public:
  template <typename T>
  explicit RealTrigEvaluator(const TrigPolynomial<T>& p) {
    for (const auto& [n, c] : p.coefficients()) {
      if (n == 0) constant_ = as_complex(c).real();
      if (n > 0) terms_.push_back({static_cast<double>(n), 2 * as_complex(c).real(), -2 * as_complex(c).imag()});
    }
  }
  double operator()(double angle) const {
    double v = constant_;
    for (const auto& t : terms_) {
      const double a = 2 * std::numbers::pi * t.n * angle;
      v += t.cos_coeff * std::cos(a) + (t.sin_coeff != 0 ? t.sin_coeff * std::sin(a) : 0.0);
    }
    return v;
  }

 private:
  struct Term {
    double n, cos_coeff, sin_coeff;
  };
  double constant_ = 0;
  std::vector<Term> terms_;
};

/// (R_W f)(x) = sum_d W((x+d)/N) f((x+d)/N) = N * decimate(W f).
template <typename T>
TrigPolynomial<T> transfer(long long N, const TrigPolynomial<T>& weight, const TrigPolynomial<T>& f) {
  return T(N) * (weight * f).decimate(N);
}

}  // namespace endomra
