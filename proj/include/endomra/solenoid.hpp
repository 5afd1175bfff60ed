// Backward paths converging to a cycle, the measure lambda_C on them, the
// covariant pair (U, pi) on finitely supported path functionals, and the
// cross-section canonicalization behind the isometry Phi.
//
// Everything is symbolic: a path from x is x preceded by finitely many chosen
// letters j_1 ... j_m (z_n = j_n ... j_1 x) and then by the cycle's backward
// word.  On the circle the letters are base-N digits.
#pragma once

#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "endomra/exact.hpp"
#include "endomra/measure.hpp"
#include "endomra/observable.hpp"
#include "endomra/residual.hpp"
#include "endomra/ruelle.hpp"
#include "endomra/sft.hpp"
#include "endomra/torus.hpp"

namespace endomra {

/// The data every path operation needs: the symbolic shift, the cycle's tail
/// letters, base cylinder masses and the neighbourhood B of x_0 used by the
/// cross section (points sharing the first 2p letters with x_0).
class PathSpace {
 public:
  static PathSpace for_sft(const SftSystem& sys, const Cycle<SftPoint>& cycle, const MarkovMeasure& rho) {
    validate_cycle(sys, cycle);
    if (!(rho.system() == sys)) throw PreconditionError("measure lives on a different system");
    PathSpace s(sys, cycle.length());
    Word tail;
    for (const auto& x : cycle.points) tail.push_back(x.letter(0));
    s.tails_.push_back(tail);
    s.cycle_symbols_ = cycle.points;
    s.ball_depth_ = 2 * cycle.length();
    s.ball_words_.insert(cycle.points[0].leading(s.ball_depth_));
    s.mass_ = [rho](const Word& w) { return rho.mass(w); };
    return s;
  }

  static PathSpace for_torus(const TorusSystem& sys, const Cycle<TorusPoint>& cycle) {
    validate_cycle(sys, cycle);
    PathSpace s(sys.digit_shift(), cycle.length());
    s.circle_ = sys;
    Word tail;
    for (const auto& x : cycle.points) {
      s.cycle_symbols_.push_back(to_digits(sys, x));
      tail.push_back(s.cycle_symbols_.back().letter(0));
    }
    s.tails_.push_back(tail);
    // 0 = 0.000... = 0.(N-1)(N-1)...: paths may approach it from either side
    if (cycle.length() == 1 && cycle.points[0].angle == 0) s.tails_.push_back(Word{sys.degree() - 1});
    // B is a cylinder neighbourhood of x_0 as in the symbolic case
    s.ball_depth_ = 2 * cycle.length();
    s.ball_words_.insert(s.cycle_symbols_[0].leading(s.ball_depth_));
    if (s.tails_.size() > 1) s.ball_words_.insert(Word(s.ball_depth_, sys.degree() - 1));
    s.mass_ = [sys](const Word& w) { return HaarMeasure(sys).mass(w); };
    return s;
  }

  const SftSystem& shift() const { return shift_; }
  std::size_t period() const { return period_; }
  std::size_t tail_count() const { return tails_.size(); }
  bool is_circle() const { return circle_.has_value(); }
  const std::optional<TorusSystem>& circle() const { return circle_; }
  const std::vector<SftPoint>& cycle_symbols() const { return cycle_symbols_; }

  /// Letter of the tail at path position n >= 1 for alignment i.
  int tail_letter(int tail, int alignment, long long n) const {
    const Word& t = tails_.at(static_cast<std::size_t>(tail));
    const auto p = static_cast<long long>(t.size());
    return t[static_cast<std::size_t>((((alignment + n) % p) + p) % p)];
  }

  int mod_p(long long i) const {
    const auto p = static_cast<long long>(period_);
    return static_cast<int>(((i % p) + p) % p);
  }

  Rational mass(const Word& w) const { return mass_(w); }

  /// c(x) = #r^{-1}(r(x)) for x starting with w (|w| >= 2).
  int fiber_after(const Word& w) const { return shift_.in_degree(w.at(1)); }
  /// #r^{-1}(x) for x starting with w (|w| >= 1).
  int fiber_at(const Word& w) const { return shift_.in_degree(w.at(0)); }

  // --- the neighbourhood B of x_0 -------------------------------------------

  /// Exact membership of a point.
  bool in_ball(const SftPoint& z) const { return ball_words_.count(z.leading(ball_depth_)) > 0; }

  /// Membership of every point starting with the letters u: true, false, or
  /// undecided from these letters alone.
  std::optional<bool> in_ball(const Word& u) const {
    if (u.size() >= ball_depth_) return ball_words_.count(Word(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(ball_depth_))) > 0;
    for (const auto& b : ball_words_)
      if (std::equal(u.begin(), u.end(), b.begin())) return std::nullopt;
    return false;
  }

  std::size_t ball_depth() const { return ball_depth_; }
  const std::set<Word>& ball_words() const { return ball_words_; }

 private:
  SftSystem shift_;
  std::size_t period_;
  std::vector<Word> tails_;
  std::vector<SftPoint> cycle_symbols_;
  std::optional<TorusSystem> circle_;
  std::size_t ball_depth_ = 0;
  std::set<Word> ball_words_;
  std::function<Rational(const Word&)> mass_;

  PathSpace(SftSystem shift, std::size_t p) : shift_(std::move(shift)), period_(p) {}
};

/// An element of N_C(x): base x, chosen letters j_1..j_m (j_1 next to x), the
/// tail that follows, and the alignment i(omega) with z_{kp} -> x_i.
struct SolenoidPath {
  SftPoint base;
  Word prefix;
  int tail = 0;
  int alignment = 0;

  friend bool operator==(const SolenoidPath&, const SolenoidPath&) = default;
};

// --- paths ---------------------------------------------------------------------

inline int path_letter(const PathSpace& s, const SolenoidPath& w, long long n) {
  if (n <= static_cast<long long>(w.prefix.size())) return w.prefix[static_cast<std::size_t>(n - 1)];
  return s.tail_letter(w.tail, w.alignment, n);
}

/// Drops trailing prefix letters that agree with the tail.
inline void canonicalize_prefix(const PathSpace& s, Word& prefix, int tail, int alignment) {
  while (!prefix.empty() && prefix.back() == s.tail_letter(tail, alignment, static_cast<long long>(prefix.size()))) prefix.pop_back();
}

/// Admissibility of the letters against a first base letter.
inline bool path_admissible(const PathSpace& s, const Word& prefix, int tail, int alignment, int base_first) {
  const SftSystem& sys = s.shift();
  int next = base_first;
  for (int j : prefix) {
    if (!sys.allowed(j, next)) return false;
    next = j;
  }
  const int before = s.tail_letter(tail, alignment, static_cast<long long>(prefix.size()) + 1);
  return sys.allowed(before, next);
}

inline SolenoidPath make_path(const PathSpace& s, SftPoint base, Word prefix, int tail = 0, int alignment = 0) {
  s.shift().validate(base);
  base = canonical(base);
  if (tail < 0 || static_cast<std::size_t>(tail) >= s.tail_count()) throw ValidationError("unknown tail index");
  alignment = s.mod_p(alignment);
  canonicalize_prefix(s, prefix, tail, alignment);
  if (!path_admissible(s, prefix, tail, alignment, base.letter(0))) throw ValidationError("path is not admissible");
  return {std::move(base), std::move(prefix), tail, alignment};
}

/// z_n for n >= 0 (z_0 = x); n < 0 gives r^{-n}(x).
inline SftPoint path_point(const PathSpace& s, const SolenoidPath& w, long long n) {
  if (n < 0) {
    SftPoint y = w.base;
    for (long long k = 0; k < -n; ++k) y = apply(s.shift(), y);
    return y;
  }
  Word letters;
  for (long long k = n; k >= 1; --k) letters.push_back(path_letter(s, w, k));
  return prepend(letters, w.base);
}

/// r-hat(x, omega) = (r(x), (x, z_1, ...)).
inline SolenoidPath r_hat(const PathSpace& s, const SolenoidPath& w) {
  Word prefix{w.base.letter(0)};
  prefix.insert(prefix.end(), w.prefix.begin(), w.prefix.end());
  const int a = s.mod_p(w.alignment - 1);
  canonicalize_prefix(s, prefix, w.tail, a);
  return {apply(s.shift(), w.base), prefix, w.tail, a};
}

/// r-hat^{-1}(x, omega) = (z_1, (z_2, ...)).
inline SolenoidPath r_hat_inverse(const PathSpace& s, const SolenoidPath& w) {
  const int first = path_letter(s, w, 1);
  Word prefix = w.prefix.empty() ? Word{} : Word(w.prefix.begin() + 1, w.prefix.end());
  return {prepend(first, w.base), prefix, w.tail, s.mod_p(w.alignment + 1)};
}

inline SolenoidPath r_hat_power(const PathSpace& s, SolenoidPath w, long long k) {
  for (; k > 0; --k) w = r_hat(s, w);
  for (; k < 0; ++k) w = r_hat_inverse(s, w);
  return w;
}

/// Elements of N_C(x) whose canonical prefix has length <= m_max, ordered by
/// prefix length, then prefix letters, then tail and alignment.
inline std::vector<SolenoidPath> enumerate_paths(const PathSpace& s, const SftPoint& x, std::size_t m_max) {
  s.shift().validate(x);
  const SftSystem& sys = s.shift();
  std::vector<SolenoidPath> out;
  std::vector<std::tuple<std::size_t, Word, int, int>> keys;
  for (int t = 0; t < static_cast<int>(s.tail_count()); ++t)
    for (int i = 0; i < static_cast<int>(s.period()); ++i) {
      std::function<void(Word&)> grow = [&](Word& prefix) {
        const int next = prefix.empty() ? x.letter(0) : prefix.back();
        const bool canonical_end =
            prefix.empty() || prefix.back() != s.tail_letter(t, i, static_cast<long long>(prefix.size()));
        if (canonical_end && sys.allowed(s.tail_letter(t, i, static_cast<long long>(prefix.size()) + 1), next))
          keys.emplace_back(prefix.size(), prefix, t, i);
        if (prefix.size() == m_max) return;
        for (int j = 0; j < sys.size(); ++j) {
          if (!sys.allowed(j, next)) continue;
          prefix.push_back(j);
          grow(prefix);
          prefix.pop_back();
        }
      };
      Word prefix;
      grow(prefix);
    }
  std::sort(keys.begin(), keys.end());
  for (auto& [len, prefix, t, i] : keys) out.push_back({canonical(x), prefix, t, i});
  return out;
}

/// P_x of the paths starting with the backward word a_1..a_n: prod W(z_k).
template <typename WeightEval>
auto path_cylinder_measure(const PathSpace& s, const SftPoint& x, const Word& word, WeightEval&& weight_at) {
  s.shift().validate(x);
  using V = decltype(weight_at(x));
  V product(1);
  SftPoint z = x;
  for (int a : word) {
    if (!s.shift().allowed(a, z.letter(0))) throw ValidationError("backward word is not admissible from x");
    z = prepend(a, z);
    product = product * weight_at(z);
  }
  return product;
}

// --- path functionals ------------------------------------------------------------

/// Indicator-type cell: paths with this prefix/tail/alignment over bases in [base].
struct PathCell {
  Word prefix;
  int tail = 0;
  int alignment = 0;
  Word base;

  friend auto operator<=>(const PathCell&, const PathCell&) = default;
  friend bool operator==(const PathCell&, const PathCell&) = default;
};

/// Finitely supported function on the path space: sum of coefficient * cell indicator.
class PathFunctional {
 public:
  PathFunctional() = default;

  void add(const PathSpace& s, PathCell cell, const Algebraic& coef) {
    if (cell.base.empty() || !s.shift().admissible(cell.base)) throw ValidationError("cell base must be a nonempty admissible word");
    cell.alignment = s.mod_p(cell.alignment);
    if (cell.tail < 0 || static_cast<std::size_t>(cell.tail) >= s.tail_count()) throw ValidationError("unknown tail index");
    canonicalize_prefix(s, cell.prefix, cell.tail, cell.alignment);
    if (!path_admissible(s, cell.prefix, cell.tail, cell.alignment, cell.base[0])) throw ValidationError("cell path is not admissible");
    if (coef.is_zero()) return;
    auto [it, fresh] = terms_.emplace(std::move(cell), coef);
    if (!fresh) {
      it->second += coef;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  const std::map<PathCell, Algebraic>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  std::size_t max_depth() const {
    std::size_t d = 1;
    for (const auto& [c, v] : terms_) d = std::max(d, c.base.size());
    return d;
  }

 private:
  std::map<PathCell, Algebraic> terms_;
};

/// Same functional with every base word extended to length >= depth.
inline PathFunctional refine(const PathSpace& s, const PathFunctional& f, std::size_t depth) {
  PathFunctional out;
  for (const auto& [cell, v] : f.terms()) {
    if (cell.base.size() >= depth) {
      out.add(s, cell, v);
      continue;
    }
    std::vector<Word> stack{cell.base};
    while (!stack.empty()) {
      Word w = stack.back();
      stack.pop_back();
      if (w.size() >= depth) {
        out.add(s, {cell.prefix, cell.tail, cell.alignment, w}, v);
        continue;
      }
      for (int a : s.shift().successors(w)) {
        Word e = w;
        e.push_back(a);
        stack.push_back(e);
      }
    }
  }
  return out;
}

/// int F dlambda_C = sum coef * rho([base]).
inline Algebraic integrate_lambda_c(const PathSpace& s, const PathFunctional& f) {
  Algebraic acc;
  for (const auto& [cell, v] : f.terms()) acc += v * Algebraic(s.mass(cell.base));
  return acc;
}

/// <F, G> in L^2(lambda_C).
inline Algebraic inner(const PathSpace& s, const PathFunctional& f, const PathFunctional& g) {
  const std::size_t d = std::max(f.max_depth(), g.max_depth());
  const auto rf = refine(s, f, d), rg = refine(s, g, d);
  Algebraic acc;
  for (const auto& [cell, v] : rf.terms()) {
    auto it = rg.terms().find(cell);
    if (it != rg.terms().end()) acc += v * it->second.conj() * Algebraic(s.mass(cell.base));
  }
  return acc;
}

inline bool same_function(const PathSpace& s, const PathFunctional& f, const PathFunctional& g) {
  const std::size_t d = std::max(f.max_depth(), g.max_depth());
  return refine(s, f, d).terms() == refine(s, g, d).terms();
}

/// Support moved by r-hat^{-1}; `factor(cell, new_cell)` scales each coefficient.
template <typename Factor>
PathFunctional pull_back(const PathSpace& s, const PathFunctional& f, Factor&& factor) {
  PathFunctional out;
  for (const auto& [cell, v] : f.terms()) {
    PathCell next;
    const int first = cell.prefix.empty() ? s.tail_letter(cell.tail, cell.alignment, 1) : cell.prefix[0];
    next.base = Word{first};
    next.base.insert(next.base.end(), cell.base.begin(), cell.base.end());
    next.prefix = cell.prefix.empty() ? Word{} : Word(cell.prefix.begin() + 1, cell.prefix.end());
    next.tail = cell.tail;
    next.alignment = s.mod_p(cell.alignment + 1);
    out.add(s, next, v * factor(cell, next));
  }
  return out;
}

/// Support moved by r-hat (base words are first refined to length >= 2).
template <typename Factor>
PathFunctional push_forward(const PathSpace& s, const PathFunctional& f, Factor&& factor) {
  PathFunctional out;
  const auto fine = refine(s, f, 2);
  for (const auto& [cell, v] : fine.terms()) {
    PathCell next;
    next.base = Word(cell.base.begin() + 1, cell.base.end());
    next.prefix = Word{cell.base[0]};
    next.prefix.insert(next.prefix.end(), cell.prefix.begin(), cell.prefix.end());
    next.tail = cell.tail;
    next.alignment = s.mod_p(cell.alignment - 1);
    out.add(s, next, v * factor(cell, next));
  }
  return out;
}

/// (U F)(x, w) = alpha_{i(w)} sqrt(c(x)) F(r-hat(x, w)).
inline PathFunctional apply_U(const PathSpace& s, const Phases& phases, const PathFunctional& f) {
  phases.validate(s.period());
  return pull_back(s, f, [&](const PathCell&, const PathCell& next) {
    return phases.at(next.alignment) * Algebraic::sqrt(s.fiber_after(next.base));
  });
}

/// (U^{-1} F)(x, w) = conj(alpha_{i(r-hat^{-1} w)}) F(r-hat^{-1}(x, w)) / sqrt(#r^{-1}(x)).
inline PathFunctional apply_U_inverse(const PathSpace& s, const Phases& phases, const PathFunctional& f) {
  phases.validate(s.period());
  return push_forward(s, f, [&](const PathCell& cell, const PathCell& next) {
    return phases.at(cell.alignment).conj() / Algebraic::sqrt(s.fiber_at(next.base));
  });
}

/// pi(f) F = f(base) F for a cylinder function f on the symbolic shift.
inline PathFunctional apply_pi(const PathSpace& s, const CylinderFunction<Algebraic>& f, const PathFunctional& g) {
  PathFunctional out;
  const auto fine = refine(s, g, f.depth());
  for (const auto& [cell, v] : fine.terms()) out.add(s, cell, v * f(cell.base));
  return out;
}

/// c^{(n)} F o r-hat^n.
inline PathFunctional cocycle_shift(const PathSpace& s, const PathFunctional& f, long long n) {
  PathFunctional g = f;
  for (; n > 0; --n)
    g = pull_back(s, g, [&](const PathCell&, const PathCell& next) { return Algebraic(s.fiber_after(next.base)); });
  for (; n < 0; ++n)
    g = push_forward(s, g, [&](const PathCell&, const PathCell& next) {
      return Algebraic(make_rational(1, s.fiber_at(next.base)));
    });
  return g;
}

inline Residual lambda_invariance_residual(const PathSpace& s, const PathFunctional& f, long long n) {
  return exact_residual(integrate_lambda_c(s, cocycle_shift(s, f, n)) - integrate_lambda_c(s, f));
}

/// Residual of U pi(f) U^{-1} = pi(f o r) on a functional.
inline Residual covariance_residual(const PathSpace& s, const Phases& phases, const CylinderFunction<Algebraic>& f,
                                    const PathFunctional& g) {
  auto lhs = apply_U(s, phases, apply_pi(s, f, apply_U_inverse(s, phases, g)));
  auto rhs = apply_pi(s, f.compose_shift(1), g);
  PathFunctional diff = rhs;
  for (const auto& [cell, v] : lhs.terms()) diff.add(s, cell, -v);
  return exact_residual(inner(s, diff, diff));
}

// --- cross section ------------------------------------------------------------------

struct CrossSectionResult {
  long long k = 0;
  SolenoidPath eta;
};

namespace detail {

/// Smallest t >= m + 2p + 2 in the residue class of -alignment mod p; beyond
/// it every z_t in that class lies in B.
inline long long class_top(const PathSpace& s, std::size_t m, int alignment) {
  const long long p = static_cast<long long>(s.period());
  long long t = static_cast<long long>(m) + 2 * p + 2;
  while (s.mod_p(t + alignment) != 0) ++t;
  return t;
}

}  // namespace detail

/// Whether z_0 is in r^p(B) \ B and z_{jp} is in B for all j >= 1.
inline bool in_cross_section(const PathSpace& s, const SolenoidPath& w) {
  if (s.in_ball(w.base)) return false;
  if (w.alignment != 0) return false;
  const long long p = static_cast<long long>(s.period());
  const long long top = detail::class_top(s, w.prefix.size(), 0) + p;
  for (long long t = p; t <= top; t += p)
    if (!s.in_ball(path_point(s, w, t))) return false;
  return true;
}

/// The unique (k, eta) with omega = r-hat^k(eta) and eta in the cross section.
inline CrossSectionResult canonicalize_path(const PathSpace& s, const SolenoidPath& w) {
  const long long p = static_cast<long long>(s.period());
  const long long top = detail::class_top(s, w.prefix.size(), w.alignment);
  const long long bottom = -static_cast<long long>(w.base.prefix.size() + p * w.base.period.size() + 2 * p);
  for (long long t = top; t >= bottom; t -= p) {
    if (s.in_ball(path_point(s, w, t))) continue;
    CrossSectionResult r{t, r_hat_power(s, w, -t)};
    return r;
  }
  throw PreconditionError("no cross-section representative: path is in the orbit of the pure cycle path");
}

/// k for all paths in a cell, when the cell's letters decide it.
inline std::optional<long long> resolve_cell(const PathSpace& s, const PathCell& cell) {
  const long long top = detail::class_top(s, cell.prefix.size(), cell.alignment);
  const long long p = static_cast<long long>(s.period());
  for (long long t = top;; t -= p) {
    Word known;
    if (t >= 0) {
      for (long long n = t; n >= 1; --n) {
        SolenoidPath probe{SftPoint{{}, {0}}, cell.prefix, cell.tail, cell.alignment};
        known.push_back(path_letter(s, probe, n));
      }
      known.insert(known.end(), cell.base.begin(), cell.base.end());
    } else if (static_cast<std::size_t>(-t) < cell.base.size()) {
      known.assign(cell.base.begin() - t, cell.base.end());
    }
    auto member = s.in_ball(known);
    if (!member) return std::nullopt;
    if (!*member) return t;
  }
}

struct IsometryCheck {
  Residual residual;
  Algebraic norm_squared;      // ||F||^2
  Algebraic decomposed;        // sum over cross section and k of |Phi F|^2
  double unresolved_mass = 0;  // part of ||F||^2 whose k was not decided
};

/// | ||F||^2 - int_A sum_k |(Phi F)(eta, k)|^2 dlambda_C(eta) |, with
/// (Phi F)(eta, k) = sqrt(c^{(k)}(eta_0)) F(r-hat^k eta).  Cells are refined
/// up to `extra_depth` letters to decide k; the rest is reported as a bound.
inline IsometryCheck phi_isometry_residual(const PathSpace& s, const PathFunctional& f, std::size_t extra_depth = 8) {
  IsometryCheck out;
  const auto disjoint = refine(s, f, f.max_depth());
  const std::size_t limit = disjoint.max_depth() + extra_depth;
  for (const auto& [cell, v] : disjoint.terms()) {
    const Algebraic w2 = v * v.conj();
    out.norm_squared += w2 * Algebraic(s.mass(cell.base));
    std::vector<PathCell> stack{cell};
    while (!stack.empty()) {
      PathCell c = stack.back();
      stack.pop_back();
      auto k = resolve_cell(s, c);
      if (!k) {
        if (c.base.size() >= limit) {
          out.unresolved_mass += (w2 * Algebraic(s.mass(c.base))).to_complex().real();
          continue;
        }
        for (int a : s.shift().successors(c.base)) {
          PathCell e = c;
          e.base.push_back(a);
          stack.push_back(e);
        }
        continue;
      }
      PathFunctional piece;
      piece.add(s, c, w2);
      // T^k with T G = c * G o r-hat moves the cell to r-hat^{-k}(cell) carrying c^{(k)}
      auto moved = cocycle_shift(s, piece, *k);
      for (const auto& [mc, mv] : moved.terms())
        if (mc.alignment != 0 || s.in_ball(mc.base).value_or(true)) throw std::logic_error("cell image is not inside the cross section");
      out.decomposed += integrate_lambda_c(s, moved);
    }
  }
  out.residual = exact_residual(out.norm_squared - out.decomposed);
  if (out.unresolved_mass > 0) {
    // the unresolved part is missing from the decomposed side
    Residual r;
    r.exact = false;
    r.value = std::abs((out.norm_squared - out.decomposed).to_complex());
    r.bound = out.unresolved_mass;
    out.residual = r;
  }
  return out;
}

/// Random finitely supported functional whose cells have nonempty canonical
/// prefixes (so the cross-section index is decided at moderate depth).
inline PathFunctional random_functional(const PathSpace& s, std::mt19937_64& rng, std::size_t terms, std::size_t max_prefix = 3,
                                        std::size_t max_base = 3) {
  PathFunctional f;
  const SftSystem& sys = s.shift();
  std::size_t guard = 0;
  while (f.terms().size() < terms && guard++ < 100 * terms) {
    const std::size_t depth = 1 + rng() % max_base;
    auto bases = sys.words(depth);
    Word base = bases[rng() % bases.size()];
    const int tail = static_cast<int>(rng() % s.tail_count());
    const int alignment = static_cast<int>(rng() % s.period());
    const std::size_t m = 1 + rng() % max_prefix;
    Word prefix;
    int next = base[0];
    bool ok = true;
    for (std::size_t k = 0; k < m && ok; ++k) {
      std::vector<int> options;
      for (int j = 0; j < sys.size(); ++j)
        if (sys.allowed(j, next)) options.push_back(j);
      const int j = options[rng() % options.size()];
      prefix.push_back(j);
      next = j;
    }
    if (prefix.back() == s.tail_letter(tail, alignment, static_cast<long long>(prefix.size()))) continue;
    if (!path_admissible(s, prefix, tail, alignment, base[0])) continue;
    const long long num = static_cast<long long>(rng() % 7) - 3;
    const long long im = static_cast<long long>(rng() % 5) - 2;
    Algebraic coef = Algebraic(GaussianRational{make_rational(num, 1 + static_cast<long long>(rng() % 4)), Rational(im)});
    if (coef.is_zero()) coef = Algebraic(1);
    f.add(s, {prefix, tail, alignment, base}, coef);
  }
  return f;
}

}  // namespace endomra
