// Perron-Frobenius measures: the SFT case as an exact Markov measure, the
// circle case as Haar measure.
#pragma once

#include <cstddef>
#include <map>
#include <random>
#include <vector>

#include "endomra/exact.hpp"
#include "endomra/linalg.hpp"
#include "endomra/observable.hpp"
#include "endomra/residual.hpp"
#include "endomra/sft.hpp"
#include "endomra/torus.hpp"

namespace endomra {

/// Measure nu with int R_V f dnu = int f dnu for a normalized cylinder weight V.
/// Cylinder masses follow nu([a u]) = A(a, u_0) V(a u) nu([u]); the masses of
/// words of length d = max(k - 1, 1) come from an exact eigenvector.
class MarkovMeasure {
 public:
  /// V = 1/c, which makes the measure strongly invariant.
  static MarkovMeasure uniform(const SftSystem& sys) { return MarkovMeasure(uniform_weight(sys), true); }

  static MarkovMeasure from_weight(const CylinderFunction<Rational>& weight) { return MarkovMeasure(weight, false); }

  const SftSystem& system() const { return weight_.system(); }
  const CylinderFunction<Rational>& weight() const { return weight_; }
  bool is_uniform() const { return uniform_; }
  std::size_t base_depth() const { return depth_; }

  /// Masses of the single letters.
  std::vector<Rational> stationary() const {
    std::vector<Rational> out;
    for (int a = 0; a < system().size(); ++a) out.push_back(mass(Word{a}));
    return out;
  }

  /// nu([w]); 0 for inadmissible words, 1 for the empty word.
  Rational mass(const Word& w) const {
    if (!system().admissible(w)) return 0;
    if (w.size() == depth_) return base_.at(w);
    if (w.size() < depth_) {
      Rational s = 0;
      for (int a : system().successors(w)) {
        Word ext = w;
        ext.push_back(a);
        s += mass(ext);
      }
      return s;
    }
    Rational m = base_.at(Word(w.end() - static_cast<std::ptrdiff_t>(depth_), w.end()));
    for (std::size_t j = w.size() - depth_; j-- > 0;) m *= weight_(Word(w.begin() + static_cast<std::ptrdiff_t>(j), w.end()));
    return m;
  }

  template <typename T>
  T integrate(const CylinderFunction<T>& f) const {
    T acc(0);
    for (const auto& [w, v] : f.values())
      if (!is_zero_of(v)) acc = acc + T(mass(w)) * v;
    return acc;
  }

  /// Letter-by-letter sampler: first d letters from the base masses, then the
  /// forward kernel P(a | last d letters) = nu([u a]) / nu([u]) suitably shifted.
  std::vector<Word> sample_words(std::size_t n, std::size_t length, std::uint64_t seed) const {
    if (n == 0) throw PreconditionError("sample size must be >= 1");
    if (length < depth_) throw PreconditionError("sample length must be at least the base depth");
    std::mt19937_64 rng(seed);
    std::vector<std::pair<Word, double>> start;
    for (const auto& [w, m] : base_) start.emplace_back(w, to_double(m));
    std::map<Word, std::vector<std::pair<int, double>>> kernel;
    for (const auto& [u, m] : base_) {
      if (m == 0) continue;
      for (int a : system().successors(u)) {
        Word ua = u;
        ua.push_back(a);
        kernel[u].emplace_back(a, to_double(mass(ua) / m));
      }
    }
    std::vector<Word> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
      Word w = pick(start, rng);
      while (w.size() < length) {
        const auto& options = kernel.at(Word(w.end() - static_cast<std::ptrdiff_t>(depth_), w.end()));
        w.push_back(pick(options, rng));
      }
      out.push_back(std::move(w));
    }
    return out;
  }

 private:
  CylinderFunction<Rational> weight_;
  bool uniform_;
  std::size_t depth_;
  std::map<Word, Rational> base_;

  MarkovMeasure(CylinderFunction<Rational> weight, bool uniform)
      : weight_(std::move(weight)), uniform_(uniform), depth_(std::max<std::size_t>(weight_.depth() - 1, 1)) {
    const SftSystem& sys = weight_.system();
    for (const auto& [w, v] : weight_.values())
      if (v < 0) throw ValidationError("weight must be nonnegative");
    auto sums = transfer(weight_, CylinderFunction<Rational>::constant(sys, 1));
    for (const auto& [w, v] : sums.values())
      if (v != 1) throw ValidationError("weight does not sum to 1 over the fiber of " + sys.alphabet().format(w));

    const auto words = sys.words(depth_);
    std::map<Word, std::size_t> index;
    for (std::size_t i = 0; i < words.size(); ++i) index[words[i]] = i;
    const std::size_t k = weight_.depth();
    Matrix<Rational> m(words.size(), words.size());
    for (std::size_t r = 0; r < words.size(); ++r) {
      const Word& u = words[r];
      for (int a : sys.successors(u)) {
        Word ua = u;
        ua.push_back(a);
        Word shifted(ua.begin() + 1, ua.end());
        m(r, index.at(shifted)) += weight_(Word(ua.begin(), ua.begin() + static_cast<std::ptrdiff_t>(k)));
      }
      m(r, r) -= 1;
    }
    auto kernel = nullspace(m);
    if (kernel.size() != 1)
      throw PreconditionError("Perron-Frobenius measure is not unique (eigenspace dimension " + std::to_string(kernel.size()) + ")");
    Rational total = 0;
    for (const auto& v : kernel[0]) total += v;
    if (total == 0) throw PreconditionError("Perron-Frobenius eigenvector has zero total mass");
    for (std::size_t i = 0; i < words.size(); ++i) {
      Rational v = kernel[0][i] / total;
      if (v < 0) throw PreconditionError("Perron-Frobenius eigenvector is not nonnegative");
      base_[words[i]] = v;
    }
  }

  template <typename L>
  static L pick(const std::vector<std::pair<L, double>>& options, std::mt19937_64& rng) {
    double u = uniform01(rng);
    for (const auto& [v, p] : options) {
      if (u < p) return v;
      u -= p;
    }
    for (auto it = options.rbegin(); it != options.rend(); ++it)
      if (it->second > 0) return it->first;
    return options.back().first;
  }
};

/// Lebesgue measure on [0, 1), strongly invariant for x -> N x.
class HaarMeasure {
 public:
  explicit HaarMeasure(const TorusSystem& sys) : sys_(sys) {}
  const TorusSystem& system() const { return sys_; }

  /// Mass of a base-N digit cylinder.
  Rational mass(const Word& digits) const {
    Rational m = 1;
    for (std::size_t i = 0; i < digits.size(); ++i) m /= sys_.degree();
    return m;
  }

  template <typename T>
  T integrate(const TrigPolynomial<T>& f) const {
    return f.coefficient(0);
  }

  std::vector<double> sample_angles(std::size_t n, std::uint64_t seed) const {
    if (n == 0) throw PreconditionError("sample size must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<double> out(n);
    for (auto& x : out) x = uniform01(rng);
    return out;
  }

 private:
  TorusSystem sys_;
};

inline MarkovMeasure invariant_measure(const SftSystem& sys) { return MarkovMeasure::uniform(sys); }
inline MarkovMeasure invariant_measure(const CylinderFunction<Rational>& weight) { return MarkovMeasure::from_weight(weight); }
inline HaarMeasure invariant_measure(const TorusSystem& sys) { return HaarMeasure(sys); }

/// |int f drho - int (1/#r^{-1}(x)) sum_{r(y)=x} f(y) drho(x)|, exactly.
template <typename T>
Residual strong_invariance_residual(const MarkovMeasure& rho, const CylinderFunction<T>& f) {
  auto avg = transfer(uniform_weight(f.system()), f);
  return exact_residual(T(rho.integrate(f) - rho.integrate(avg)));
}

template <typename T>
Residual strong_invariance_residual(const HaarMeasure& rho, const TrigPolynomial<T>& f) {
  auto avg = f.decimate(rho.system().degree());
  return exact_residual(T(rho.integrate(f) - rho.integrate(avg)));
}

}  // namespace endomra
