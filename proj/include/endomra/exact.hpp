// Exact scalars: rationals and the multiquadratic field Q(i)(sqrt 2, sqrt 3, ...).
//
// Filters such as m0(11.) = sqrt(2) leave the rationals immediately, but every
// quantity the library manipulates stays inside the field generated by i and
// square roots of rationals: products of filter values, |m0|^2, phases with
// rational coordinates, and the roots of unity of order dividing 24.
#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace endomra {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad encodings, inadmissible words, schema problems.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its documented preconditions.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

inline Rational make_rational(long long num, long long den = 1) {
  if (den == 0) throw ValidationError("rational with zero denominator");
  return Rational(BigInt(num), BigInt(den));
}

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

inline std::string to_string(const Rational& q) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  if (denominator(q) == 1) return numerator(q).str();
  return numerator(q).str() + "/" + denominator(q).str();
}

/// Parses "p", "-p/q" or a finite decimal such as "0.95", exactly.
inline Rational parse_rational(std::string_view text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw ValidationError("empty rational literal");
  auto parse_int = [&](const std::string& t) {
    if (t.empty() || t == "-" || t == "+") throw ValidationError("bad rational literal '" + s + "'");
    std::size_t start = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    for (std::size_t i = start; i < t.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t[i])))
        throw ValidationError("bad rational literal '" + s + "'");
    return BigInt(t[0] == '+' ? t.substr(1) : t);
  };
  if (auto slash = s.find('/'); slash != std::string::npos) {
    BigInt num = parse_int(s.substr(0, slash));
    BigInt den = parse_int(s.substr(slash + 1));
    if (den == 0) throw ValidationError("rational with zero denominator");
    return Rational(num, den);
  }
  if (auto dot = s.find('.'); dot != std::string::npos) {
    std::string whole = s.substr(0, dot);
    std::string frac = s.substr(dot + 1);
    bool negative = !whole.empty() && whole[0] == '-';
    if (whole.empty() || whole == "-" || whole == "+") whole += "0";
    BigInt scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    BigInt w = parse_int(whole);
    BigInt f = frac.empty() ? BigInt(0) : parse_int(frac);
    if (!frac.empty() && (frac[0] == '-' || frac[0] == '+')) throw ValidationError("bad decimal '" + s + "'");
    BigInt magnitude = (w < 0 ? BigInt(-w) : w) * scale + f;
    return Rational(negative ? BigInt(-magnitude) : magnitude, scale);
  }
  return Rational(parse_int(s));
}

/// Complex rational a + b i.
struct GaussianRational {
  Rational re{0};
  Rational im{0};

  bool is_zero() const { return re == 0 && im == 0; }
  GaussianRational conj() const { return {re, -im}; }
  Rational norm() const { return re * re + im * im; }
  GaussianRational inverse() const {
    Rational n = norm();
    if (n == 0) throw std::domain_error("inverse of zero");
    return {re / n, -im / n};
  }
  friend GaussianRational operator+(const GaussianRational& a, const GaussianRational& b) {
    return {a.re + b.re, a.im + b.im};
  }
  friend GaussianRational operator-(const GaussianRational& a, const GaussianRational& b) {
    return {a.re - b.re, a.im - b.im};
  }
  friend GaussianRational operator*(const GaussianRational& a, const GaussianRational& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend bool operator==(const GaussianRational& a, const GaussianRational& b) {
    return a.re == b.re && a.im == b.im;
  }
};

namespace detail {

/// Splits n = s^2 * t with t squarefree; returns {s, t}.
inline std::pair<BigInt, std::uint64_t> square_split(const BigInt& n) {
  if (n <= 0) throw std::domain_error("square_split of non-positive integer");
  if (n > BigInt(std::numeric_limits<std::uint64_t>::max()))
    throw std::domain_error("radicand too large for exact surd arithmetic");
  auto m = n.convert_to<std::uint64_t>();
  std::uint64_t square = 1, free = 1;
  for (std::uint64_t d = 2; d * d <= m; ++d) {
    int e = 0;
    while (m % d == 0) {
      m /= d;
      ++e;
    }
    for (int k = 0; k < e / 2; ++k) square *= d;
    if (e % 2) free *= d;
  }
  free *= m;
  return {BigInt(square), free};
}

inline std::vector<std::uint64_t> prime_factors(std::uint64_t m) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t d = 2; d * d <= m; ++d) {
    if (m % d == 0) {
      out.push_back(d);
      while (m % d == 0) m /= d;
    }
  }
  if (m > 1) out.push_back(m);
  return out;
}

}  // namespace detail

/// Element of Q(i)(sqrt 2, sqrt 3, sqrt 5, ...) written as sum_m c_m sqrt(m)
/// over squarefree radicands m with Gaussian-rational coefficients.  The
/// representation is canonical (sorted radicands, no zero coefficients), so
/// equality is structural and exact.
class Algebraic {
 public:
  using Term = std::pair<std::uint64_t, GaussianRational>;

  Algebraic() = default;
  Algebraic(long long v) : Algebraic(Rational(v)) {}  // NOLINT(implicit)
  Algebraic(const Rational& v) {                      // NOLINT(implicit)
    if (v != 0) terms_.push_back({1, {v, 0}});
  }
  Algebraic(const GaussianRational& v) {  // NOLINT(implicit)
    if (!v.is_zero()) terms_.push_back({1, v});
  }

  static Algebraic i() { return Algebraic(GaussianRational{0, 1}); }

  /// Exact square root of a non-negative rational.
  static Algebraic sqrt(const Rational& q) {
    if (q < 0) throw std::domain_error("sqrt of negative rational");
    if (q == 0) return {};
    using boost::multiprecision::denominator;
    using boost::multiprecision::numerator;
    // sqrt(a/b) = sqrt(a b) / b
    auto [s, t] = detail::square_split(numerator(q) * denominator(q));
    Algebraic out;
    out.terms_.push_back({t, {Rational(s, denominator(q)), 0}});
    return out;
  }

  const std::vector<Term>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  bool is_gaussian_rational() const { return terms_.empty() || (terms_.size() == 1 && terms_[0].first == 1); }
  bool is_rational() const { return is_gaussian_rational() && (terms_.empty() || terms_[0].second.im == 0); }
  bool is_real() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.second.im == 0; });
  }

  Rational rational_value() const {
    if (!is_rational()) throw std::domain_error("value is not rational");
    return terms_.empty() ? Rational(0) : terms_[0].second.re;
  }
  GaussianRational gaussian_value() const {
    if (!is_gaussian_rational()) throw std::domain_error("value is not a Gaussian rational");
    return terms_.empty() ? GaussianRational{} : terms_[0].second;
  }

  std::complex<double> to_complex() const {
    long double re = 0, im = 0;
    for (const auto& [m, c] : terms_) {
      long double r = std::sqrt(static_cast<long double>(m));
      re += c.re.convert_to<long double>() * r;
      im += c.im.convert_to<long double>() * r;
    }
    return {static_cast<double>(re), static_cast<double>(im)};
  }
  double abs() const { return std::abs(to_complex()); }

  /// Real part as a field element.
  Algebraic real() const {
    Algebraic out;
    for (const auto& [m, c] : terms_)
      if (c.re != 0) out.terms_.push_back({m, {c.re, 0}});
    return out;
  }

  Algebraic conj() const {
    Algebraic out = *this;
    for (auto& t : out.terms_) t.second.im = -t.second.im;
    return out;
  }

  /// |x|^2 as a real field element.
  Algebraic norm() const { return *this * conj(); }

  /// Sign of a real element; exact for zero, via long double otherwise.
  int sign() const {
    if (is_zero()) return 0;
    if (!is_real()) throw std::domain_error("sign of a non-real value");
    if (is_rational()) return terms_[0].second.re > 0 ? 1 : -1;
    double v = to_complex().real();
    if (v == 0.0) throw std::domain_error("sign of a surd sum not resolvable in floating point");
    return v > 0 ? 1 : -1;
  }

  Algebraic inverse() const {
    if (is_zero()) throw std::domain_error("inverse of zero");
    // Multiply by the conjugates under sqrt(q) -> -sqrt(q) until only a
    // Gaussian rational remains.
    std::vector<std::uint64_t> primes;
    for (const auto& [m, c] : terms_)
      for (auto q : detail::prime_factors(m))
        if (std::find(primes.begin(), primes.end(), q) == primes.end()) primes.push_back(q);
    Algebraic num(1), den = *this;
    for (auto q : primes) {
      Algebraic flipped = den.flip(q);
      num = num * flipped;
      den = den * flipped;
    }
    return num * Algebraic(den.gaussian_value().inverse());
  }

  friend Algebraic operator+(const Algebraic& a, const Algebraic& b) {
    Algebraic out;
    std::size_t i = 0, j = 0;
    while (i < a.terms_.size() || j < b.terms_.size()) {
      if (j == b.terms_.size() || (i < a.terms_.size() && a.terms_[i].first < b.terms_[j].first)) {
        out.terms_.push_back(a.terms_[i++]);
      } else if (i == a.terms_.size() || b.terms_[j].first < a.terms_[i].first) {
        out.terms_.push_back(b.terms_[j++]);
      } else {
        GaussianRational s = a.terms_[i].second + b.terms_[j].second;
        if (!s.is_zero()) out.terms_.push_back({a.terms_[i].first, s});
        ++i;
        ++j;
      }
    }
    return out;
  }
  friend Algebraic operator-(const Algebraic& a) {
    Algebraic out = a;
    for (auto& t : out.terms_) t.second = GaussianRational{-t.second.re, -t.second.im};
    return out;
  }
  friend Algebraic operator-(const Algebraic& a, const Algebraic& b) { return a + (-b); }
  friend Algebraic operator*(const Algebraic& a, const Algebraic& b) {
    Algebraic out;
    for (const auto& [m1, c1] : a.terms_) {
      for (const auto& [m2, c2] : b.terms_) {
        std::uint64_t g = std::gcd(m1, m2);
        GaussianRational c = c1 * c2 * GaussianRational{Rational(static_cast<long long>(g)), 0};
        out.add_term((m1 / g) * (m2 / g), c);
      }
    }
    return out;
  }
  friend Algebraic operator/(const Algebraic& a, const Algebraic& b) { return a * b.inverse(); }
  Algebraic& operator+=(const Algebraic& o) { return *this = *this + o; }
  Algebraic& operator-=(const Algebraic& o) { return *this = *this - o; }
  Algebraic& operator*=(const Algebraic& o) { return *this = *this * o; }
  friend bool operator==(const Algebraic& a, const Algebraic& b) { return a.terms_ == b.terms_; }
  friend bool operator!=(const Algebraic& a, const Algebraic& b) { return !(a == b); }

  /// Canonical text form, e.g. "1/2*sqrt(2)+3/4*i".  parse_algebraic reads it back.
  std::string str() const {
    if (terms_.empty()) return "0";
    std::string out;
    auto append = [&](const Rational& coeff, std::uint64_t m, bool imag) {
      if (coeff == 0) return;
      Rational mag = coeff < 0 ? Rational(-coeff) : coeff;
      out += coeff < 0 ? "-" : (out.empty() ? "" : "+");
      std::string body;
      bool unit = (mag == 1);
      if (!unit || (m == 1 && !imag)) body = to_string(mag);
      auto join = [&](const std::string& f) { body += body.empty() ? f : "*" + f; };
      if (m != 1) join("sqrt(" + std::to_string(m) + ")");
      if (imag) join("i");
      out += body;
    };
    for (const auto& [m, c] : terms_) append(c.re, m, false);
    for (const auto& [m, c] : terms_) append(c.im, m, true);
    return out;
  }

  friend std::ostream& operator<<(std::ostream& os, const Algebraic& a) { return os << a.str(); }

 private:
  std::vector<Term> terms_;

  void add_term(std::uint64_t m, const GaussianRational& c) {
    if (c.is_zero()) return;
    auto it = std::lower_bound(terms_.begin(), terms_.end(), m,
                               [](const Term& t, std::uint64_t key) { return t.first < key; });
    if (it != terms_.end() && it->first == m) {
      it->second = it->second + c;
      if (it->second.is_zero()) terms_.erase(it);
    } else {
      terms_.insert(it, {m, c});
    }
  }

  Algebraic flip(std::uint64_t prime) const {
    Algebraic out = *this;
    for (auto& [m, c] : out.terms_)
      if (m % prime == 0) c = GaussianRational{-c.re, -c.im};
    return out;
  }
};

/// Parses sums of terms built from rationals, "sqrt(q)" and "i", joined by '*':
/// "sqrt(2)", "1/2*sqrt(3)", "-3/5+4/5*i", "0.25".
inline Algebraic parse_algebraic(std::string_view text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw ValidationError("empty numeric literal");
  Algebraic total;
  std::size_t pos = 0;
  auto fail = [&]() -> Algebraic { throw ValidationError("bad numeric literal '" + std::string(text) + "'"); };
  while (pos < s.size()) {
    bool negative = false;
    if (s[pos] == '+' || s[pos] == '-') {
      negative = s[pos] == '-';
      ++pos;
    }
    Algebraic term(1);
    bool have_factor = false;
    while (true) {
      if (s.compare(pos, 5, "sqrt(") == 0) {
        auto close = s.find(')', pos);
        if (close == std::string::npos) fail();
        term = term * Algebraic::sqrt(parse_rational(s.substr(pos + 5, close - pos - 5)));
        pos = close + 1;
      } else if (pos < s.size() && s[pos] == 'i') {
        term = term * Algebraic::i();
        ++pos;
      } else {
        std::size_t end = pos;
        while (end < s.size() && (std::isdigit(static_cast<unsigned char>(s[end])) || s[end] == '.' ||
                                  (s[end] == '/' && end + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[end + 1])))))
          ++end;
        if (end == pos) fail();
        term = term * Algebraic(parse_rational(s.substr(pos, end - pos)));
        pos = end;
      }
      have_factor = true;
      if (pos < s.size() && s[pos] == '*') {
        ++pos;
        continue;
      }
      break;
    }
    if (!have_factor) fail();
    total += negative ? -term : term;
    if (pos < s.size() && s[pos] != '+' && s[pos] != '-') fail();
  }
  return total;
}

/// exp(2 pi i * turns) exactly, when the reduced denominator divides 24.
inline std::optional<Algebraic> exact_root_of_unity(const Rational& turns) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  BigInt num = numerator(turns), den = denominator(turns);
  if (den > 24 || 24 % den.convert_to<long long>() != 0) return std::nullopt;
  long long k = BigInt((num * (24 / den)) % 24).convert_to<long long>();
  if (k < 0) k += 24;
  // cos(15 k degrees) for k = 0..6
  auto cos_first_quadrant = [](long long j) -> Algebraic {
    const Algebraic s2 = Algebraic::sqrt(2), s3 = Algebraic::sqrt(3), s6 = Algebraic::sqrt(6);
    switch (j) {
      case 0: return Algebraic(1);
      case 1: return (s6 + s2) * Algebraic(make_rational(1, 4));
      case 2: return s3 * Algebraic(make_rational(1, 2));
      case 3: return s2 * Algebraic(make_rational(1, 2));
      case 4: return Algebraic(make_rational(1, 2));
      case 5: return (s6 - s2) * Algebraic(make_rational(1, 4));
      default: return Algebraic(0);
    }
  };
  auto cos24 = [&](long long j) -> Algebraic {
    j = ((j % 24) + 24) % 24;
    if (j <= 6) return cos_first_quadrant(j);
    if (j <= 12) return -cos_first_quadrant(12 - j);
    if (j <= 18) return -cos_first_quadrant(j - 12);
    return cos_first_quadrant(24 - j);
  };
  return cos24(k) + Algebraic::i() * cos24(k - 6);
}

}  // namespace endomra
