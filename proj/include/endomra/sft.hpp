// One-sided subshifts of finite type: the shift map r(x0 x1 x2 ...) = x1 x2 ...
// on X(A), with points restricted to eventually periodic words.
#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "endomra/exact.hpp"

namespace endomra {

/// Letters are indices into an Alphabet.
using Word = std::vector<int>;

class Alphabet {
 public:
  explicit Alphabet(std::vector<char> symbols) : symbols_(std::move(symbols)) {
    if (symbols_.empty()) throw ValidationError("alphabet must be nonempty");
    std::set<char> seen(symbols_.begin(), symbols_.end());
    if (seen.size() != symbols_.size()) throw ValidationError("alphabet letters must be distinct");
    for (char c : symbols_)
      if (c == '(' || c == ')' || c == ' ') throw ValidationError("alphabet letter cannot be '(', ')' or space");
  }

  /// Digits "0".."n-1" (n <= 36 uses 0-9 then a-z).
  static Alphabet digits(int n) {
    if (n < 1 || n > 36) throw ValidationError("digit alphabet size must be in 1..36");
    std::vector<char> s;
    for (int i = 0; i < n; ++i) s.push_back(i < 10 ? static_cast<char>('0' + i) : static_cast<char>('a' + i - 10));
    return Alphabet(std::move(s));
  }

  std::size_t size() const { return symbols_.size(); }
  char symbol(int i) const { return symbols_.at(static_cast<std::size_t>(i)); }
  const std::vector<char>& symbols() const { return symbols_; }

  int index(char c) const {
    auto it = std::find(symbols_.begin(), symbols_.end(), c);
    if (it == symbols_.end()) throw ValidationError(std::string("unknown letter '") + c + "'");
    return static_cast<int>(it - symbols_.begin());
  }

  std::string format(const Word& w) const {
    std::string out;
    for (int l : w) out.push_back(symbol(l));
    return out;
  }

  Word parse(std::string_view text) const {
    Word w;
    for (char c : text) w.push_back(index(c));
    return w;
  }

  friend bool operator==(const Alphabet&, const Alphabet&) = default;

 private:
  std::vector<char> symbols_;
};

/// Eventually periodic point prefix . period^infinity, kept in canonical form:
/// primitive period and shortest prefix.
struct SftPoint {
  Word prefix;
  Word period;

  friend bool operator==(const SftPoint&, const SftPoint&) = default;
  friend auto operator<=>(const SftPoint& a, const SftPoint& b) {
    // Compare as infinite words: lexicographic order on the letter sequence.
    const std::size_t n = std::max(a.prefix.size(), b.prefix.size()) +
                          std::lcm(a.period.size(), b.period.size());
    for (std::size_t i = 0; i < n; ++i) {
      int la = i < a.prefix.size() ? a.prefix[i] : a.period[(i - a.prefix.size()) % a.period.size()];
      int lb = i < b.prefix.size() ? b.prefix[i] : b.period[(i - b.prefix.size()) % b.period.size()];
      if (la != lb) return la <=> lb;
    }
    return std::strong_ordering::equal;
  }

  int letter(std::size_t i) const {
    return i < prefix.size() ? prefix[i] : period[(i - prefix.size()) % period.size()];
  }

  /// First n letters.
  Word leading(std::size_t n) const {
    Word w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = letter(i);
    return w;
  }

  bool purely_periodic() const { return prefix.empty(); }
};

namespace detail {

inline Word primitive_root(const Word& w) {
  const std::size_t n = w.size();
  for (std::size_t d = 1; d <= n; ++d) {
    if (n % d) continue;
    bool ok = true;
    for (std::size_t i = d; i < n && ok; ++i) ok = w[i] == w[i - d];
    if (ok) return Word(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
  }
  return w;
}

inline Word rotate_left(const Word& w, std::size_t k) {
  Word out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = w[(i + k) % w.size()];
  return out;
}

}  // namespace detail

inline SftPoint canonical(SftPoint x) {
  if (x.period.empty()) throw ValidationError("point needs a nonempty period");
  x.period = detail::primitive_root(x.period);
  while (!x.prefix.empty() && x.prefix.back() == x.period.back()) {
    x.prefix.pop_back();
    x.period = detail::rotate_left(x.period, x.period.size() - 1);
  }
  return x;
}

class SftSystem {
 public:
  SftSystem(Alphabet alphabet, std::vector<std::vector<int>> adjacency, Rational contraction = make_rational(1, 2))
      : alphabet_(std::move(alphabet)), adjacency_(std::move(adjacency)), contraction_(std::move(contraction)) {
    const std::size_t n = alphabet_.size();
    if (adjacency_.size() != n) throw ValidationError("adjacency matrix must be square over the alphabet");
    for (const auto& row : adjacency_) {
      if (row.size() != n) throw ValidationError("adjacency matrix must be square over the alphabet");
      for (int v : row)
        if (v != 0 && v != 1) throw ValidationError("adjacency entries must be 0 or 1");
      if (std::none_of(row.begin(), row.end(), [](int v) { return v == 1; }))
        throw ValidationError("every row of the adjacency matrix needs an entry 1 (letter without successor)");
    }
    for (std::size_t j = 0; j < n; ++j) {
      int count = 0;
      for (std::size_t i = 0; i < n; ++i) count += adjacency_[i][j];
      if (count == 0) throw ValidationError("every column of the adjacency matrix needs an entry 1");
      in_degree_.push_back(count);
    }
    if (!(contraction_ > 0 && contraction_ < 1)) throw ValidationError("metric contraction must lie in (0, 1)");
  }

  /// A = [[1,1],[1,0]] on letters {1,2}.
  static SftSystem golden_mean(Rational contraction = make_rational(1, 2)) {
    return SftSystem(Alphabet({'1', '2'}), {{1, 1}, {1, 0}}, std::move(contraction));
  }

  /// Full shift on digits 0..n-1.
  static SftSystem full_shift(int n, Rational contraction = make_rational(1, 2)) {
    return SftSystem(Alphabet::digits(n),
                     std::vector<std::vector<int>>(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n), 1)),
                     std::move(contraction));
  }

  const Alphabet& alphabet() const { return alphabet_; }
  int size() const { return static_cast<int>(alphabet_.size()); }
  const std::vector<std::vector<int>>& adjacency() const { return adjacency_; }
  const Rational& contraction() const { return contraction_; }

  bool allowed(int a, int b) const {
    return adjacency_[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] == 1;
  }
  /// N(b) = #{i : A(i, b) = 1} = #r^{-1}(x) for any x starting with b.
  int in_degree(int b) const { return in_degree_[static_cast<std::size_t>(b)]; }

  bool admissible(const Word& w) const {
    for (std::size_t i = 0; i + 1 < w.size(); ++i)
      if (!allowed(w[i], w[i + 1])) return false;
    return true;
  }

  /// Admissible words of the given length in lexicographic order.
  std::vector<Word> words(std::size_t length) const {
    std::vector<Word> out;
    if (length == 0) {
      out.emplace_back();
      return out;
    }
    Word w;
    extend_words(w, length, out);
    return out;
  }

  /// Letters a with A(w.back(), a) = 1, or all letters for an empty word.
  std::vector<int> successors(const Word& w) const {
    std::vector<int> out;
    for (int a = 0; a < size(); ++a)
      if (w.empty() || allowed(w.back(), a)) out.push_back(a);
    return out;
  }

  void validate(const SftPoint& x) const {
    if (x.period.empty()) throw ValidationError("point needs a nonempty period");
    for (int l : x.prefix)
      if (l < 0 || l >= size()) throw ValidationError("letter out of range");
    for (int l : x.period)
      if (l < 0 || l >= size()) throw ValidationError("letter out of range");
    Word seam = x.prefix;
    seam.insert(seam.end(), x.period.begin(), x.period.end());
    seam.push_back(x.period.front());
    if (!admissible(seam)) throw ValidationError("point is not admissible: " + format(x));
  }

  SftPoint point(Word prefix, Word period) const {
    SftPoint x{std::move(prefix), std::move(period)};
    validate(x);
    return canonical(std::move(x));
  }

  /// Reads "12(1)" as prefix 12 followed by 1 repeated; "(12)" is purely periodic.
  SftPoint parse_point(std::string_view text) const {
    auto open = text.find('(');
    auto close = text.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close != text.size() - 1 || close <= open + 1)
      throw ValidationError("point must look like 'prefix(period)': '" + std::string(text) + "'");
    return point(alphabet_.parse(text.substr(0, open)), alphabet_.parse(text.substr(open + 1, close - open - 1)));
  }

  std::string format(const SftPoint& x) const {
    return alphabet_.format(x.prefix) + "(" + alphabet_.format(x.period) + ")";
  }

  /// An admissible eventually periodic point starting with w (w nonempty).
  /// The continuation is the smallest-letter walk, which is deterministic.
  SftPoint representative(const Word& w) const {
    if (w.empty()) throw PreconditionError("representative of an empty word");
    if (!admissible(w)) throw ValidationError("inadmissible word " + alphabet_.format(w));
    Word path = w;
    std::map<int, std::size_t> first_seen;
    // walk from the last letter until a letter repeats
    std::size_t start = w.size() - 1;
    first_seen[w.back()] = start;
    while (true) {
      int next = successors(path).front();
      if (auto it = first_seen.find(next); it != first_seen.end()) {
        Word prefix(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(it->second));
        Word period(path.begin() + static_cast<std::ptrdiff_t>(it->second), path.end());
        return canonical(SftPoint{prefix, period});
      }
      first_seen[next] = path.size();
      path.push_back(next);
    }
  }

  friend bool operator==(const SftSystem& a, const SftSystem& b) {
    return a.alphabet_ == b.alphabet_ && a.adjacency_ == b.adjacency_ && a.contraction_ == b.contraction_;
  }

 private:
  Alphabet alphabet_;
  std::vector<std::vector<int>> adjacency_;
  Rational contraction_;
  std::vector<int> in_degree_;

  void extend_words(Word& w, std::size_t length, std::vector<Word>& out) const {
    if (w.size() == length) {
      out.push_back(w);
      return;
    }
    for (int a : successors(w)) {
      w.push_back(a);
      extend_words(w, length, out);
      w.pop_back();
    }
  }
};

/// A cycle {x_0, ..., x_{p-1}} with r(x_{i+1}) = x_i and r(x_0) = x_{p-1}.
template <typename Point>
struct Cycle {
  std::vector<Point> points;

  std::size_t length() const { return points.size(); }
  /// x_{i mod p}
  const Point& at(long long i) const {
    const auto p = static_cast<long long>(points.size());
    return points[static_cast<std::size_t>(((i % p) + p) % p)];
  }
  friend bool operator==(const Cycle&, const Cycle&) = default;
};

/// Certificate for the repelling property of r^p at the cycle points:
/// d(r^p(x), x_i) >= c^{-1} d(x, x_i) whenever d(x, x_i) < delta.
struct RepellingCertificate {
  bool repelling = false;
  Rational c;
  Rational delta;
};

// --- operations on SFT points ------------------------------------------------

inline SftPoint apply(const SftSystem& sys, const SftPoint& x) {
  sys.validate(x);
  if (!x.prefix.empty()) return canonical(SftPoint{Word(x.prefix.begin() + 1, x.prefix.end()), x.period});
  return canonical(SftPoint{{}, detail::rotate_left(x.period, 1)});
}

/// r^{-1}(x) = { i x : A(i, x_0) = 1 } in alphabet order.
inline std::vector<SftPoint> preimages(const SftSystem& sys, const SftPoint& x) {
  sys.validate(x);
  std::vector<SftPoint> out;
  for (int i = 0; i < sys.size(); ++i) {
    if (!sys.allowed(i, x.letter(0))) continue;
    Word prefix{i};
    prefix.insert(prefix.end(), x.prefix.begin(), x.prefix.end());
    out.push_back(canonical(SftPoint{prefix, x.period}));
  }
  return out;
}

/// Prepends a letter without re-validating (caller guarantees admissibility).
inline SftPoint prepend(int letter, const SftPoint& x) {
  Word prefix{letter};
  prefix.insert(prefix.end(), x.prefix.begin(), x.prefix.end());
  return canonical(SftPoint{prefix, x.period});
}

inline SftPoint prepend(const Word& letters_left_to_right, const SftPoint& x) {
  Word prefix = letters_left_to_right;
  prefix.insert(prefix.end(), x.prefix.begin(), x.prefix.end());
  return canonical(SftPoint{prefix, x.period});
}

/// c(x) = #r^{-1}(r(x)) = N(x_1).
inline int fiber_count_after(const SftSystem& sys, const SftPoint& x) {
  sys.validate(x);
  return sys.in_degree(x.letter(1));
}

/// All primitive cycles of length <= p_max.  Each cycle starts at its
/// lexicographically least point x_0, and x_{i} = r^{p-i}(x_0).
inline std::vector<Cycle<SftPoint>> enumerate_cycles(const SftSystem& sys, std::size_t p_max) {
  if (p_max < 1) throw PreconditionError("p_max must be >= 1");
  std::vector<Cycle<SftPoint>> out;
  for (std::size_t p = 1; p <= p_max; ++p) {
    for (const Word& w : sys.words(p)) {
      if (!sys.allowed(w.back(), w.front())) continue;
      if (detail::primitive_root(w).size() != p) continue;
      bool least = true;
      for (std::size_t k = 1; k < p && least; ++k) least = !(detail::rotate_left(w, k) < w);
      if (!least) continue;
      Cycle<SftPoint> c;
      SftPoint x0{{}, w};
      c.points.push_back(x0);
      for (std::size_t i = 1; i < p; ++i) c.points.push_back(SftPoint{{}, detail::rotate_left(w, p - i)});
      out.push_back(std::move(c));
    }
  }
  return out;
}

/// Validates a user-supplied cycle: distinct purely periodic points with
/// r(x_{i+1}) = x_i and r(x_0) = x_{p-1}.
inline void validate_cycle(const SftSystem& sys, const Cycle<SftPoint>& c) {
  const std::size_t p = c.length();
  if (p == 0) throw ValidationError("cycle must be nonempty");
  for (const auto& x : c.points) {
    sys.validate(x);
    if (!x.purely_periodic() || p % x.period.size() != 0) throw ValidationError("cycle points must be periodic with period dividing p");
  }
  std::set<SftPoint> distinct(c.points.begin(), c.points.end());
  if (distinct.size() != p) throw ValidationError("cycle points must be distinct");
  for (std::size_t i = 0; i < p; ++i)
    if (!(apply(sys, c.at(static_cast<long long>(i) + 1)) == c.at(static_cast<long long>(i))))
      throw ValidationError("cycle points must satisfy r(x_{i+1}) = x_i");
}

/// Builds the cycle through a periodic point, with x_0 the given point.
inline Cycle<SftPoint> cycle_through(const SftSystem& sys, const SftPoint& x0) {
  sys.validate(x0);
  if (!x0.purely_periodic()) throw ValidationError("cycle base point must be purely periodic");
  const std::size_t p = x0.period.size();
  Cycle<SftPoint> c;
  c.points.push_back(x0);
  for (std::size_t i = 1; i < p; ++i) c.points.push_back(SftPoint{{}, detail::rotate_left(x0.period, p - i)});
  return c;
}

/// For the shift, d_c(r^p x, x_i) = c^{-p} d_c(x, x_i) as soon as x and x_i share
/// more than p letters, so the certificate is (c^p, c^p) with equality in the
/// expansion bound.
inline RepellingCertificate is_repelling(const SftSystem& sys, const Cycle<SftPoint>& cycle) {
  validate_cycle(sys, cycle);
  Rational cp = 1;
  for (std::size_t i = 0; i < cycle.length(); ++i) cp *= sys.contraction();
  return {true, cp, cp};
}

/// Length of the longest common initial block; npos when x == y.
inline std::size_t common_prefix_length(const SftPoint& x, const SftPoint& y) {
  const std::size_t bound = std::max(x.prefix.size(), y.prefix.size()) + std::lcm(x.period.size(), y.period.size());
  for (std::size_t i = 0; i < bound; ++i)
    if (x.letter(i) != y.letter(i)) return i;
  return std::string::npos;
}

/// d_c(x, y) = c^{|x ^ y|}, 0 when x == y.
inline Rational metric_dist(const SftSystem& sys, const SftPoint& x, const SftPoint& y) {
  sys.validate(x);
  sys.validate(y);
  std::size_t n = common_prefix_length(x, y);
  if (n == std::string::npos) return 0;
  Rational d = 1;
  for (std::size_t i = 0; i < n; ++i) d *= sys.contraction();
  return d;
}

}  // namespace endomra
