// Config-driven experiment runner: JSON config in, JSON report out.
// Rationals are written as "p/q" strings, complex numbers as [re, im].
#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "endomra/exact.hpp"
#include "endomra/measure.hpp"
#include "endomra/mra.hpp"
#include "endomra/observable.hpp"
#include "endomra/residual.hpp"
#include "endomra/ruelle.hpp"
#include "endomra/sft.hpp"
#include "endomra/solenoid.hpp"
#include "endomra/torus.hpp"

namespace endomra {

using Json = nlohmann::ordered_json;

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config: " + what) {}
};

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  bool parallel = false;
  bool timing = false;                // wall-clock per analysis (breaks byte-identical reports)
};

// --- json encoding -------------------------------------------------------------------

inline Json to_json(const Rational& q) { return to_string(q); }
inline Json to_json(const std::complex<double>& z) { return Json::array({z.real(), z.imag()}); }
inline Json to_json(const Algebraic& a) { return Json{{"exact", a.str()}, {"value", to_json(a.to_complex())}}; }

inline Json to_json(const Residual& r) {
  Json j{{"value", r.value}, {"exact", r.exact}, {"bound", r.bound}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

namespace detail {

// --- config access with schema checks ---------------------------------------------------

inline void allow_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : obj.items())
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
      throw ConfigError("unknown key '" + k + "' in " + where);
}

inline const Json& need(const Json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing '" + key + "' in " + where);
  return obj.at(key);
}

inline long long get_int(const Json& obj, const std::string& key, long long fallback, const std::string& where, long long lo = 0) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError("'" + key + "' in " + where + " must be an integer");
  const long long x = v.get<long long>();
  if (x < lo) throw ConfigError("'" + key + "' in " + where + " must be >= " + std::to_string(lo));
  return x;
}

inline double get_double(const Json& obj, const std::string& key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const Json& v = obj.at(key);
  if (v.is_string()) {
    try {
      return to_double(parse_rational(v.get<std::string>()));
    } catch (const std::exception&) {
      throw ConfigError("'" + key + "' in " + where + " is not a number");
    }
  }
  if (!v.is_number()) throw ConfigError("'" + key + "' in " + where + " must be a number");
  return v.get<double>();
}

inline std::string get_string(const Json& obj, const std::string& key, const std::string& fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) throw ConfigError("'" + key + "' in " + where + " must be a string");
  return obj.at(key).get<std::string>();
}

inline Algebraic parse_value(const Json& v, const std::string& where) {
  try {
    if (v.is_string()) return parse_algebraic(v.get<std::string>());
    if (v.is_number_integer()) return Algebraic(Rational(v.get<long long>()));
    if (v.is_array() && v.size() == 2 && v[0].is_string() && v[1].is_string())
      return parse_algebraic(v[0].get<std::string>()) + Algebraic::i() * parse_algebraic(v[1].get<std::string>());
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ": exact literals are strings such as \"1/2\", \"sqrt(2)\" or [\"re\", \"im\"]");
}

inline Rational parse_rational_value(const Json& v, const std::string& where) {
  const Algebraic a = parse_value(v, where);
  if (!a.is_rational()) throw ConfigError(where + " must be rational");
  return a.rational_value();
}

}  // namespace detail

// --- experiment context -------------------------------------------------------------------

/// System, filter, measure and cycle built from a config.
namespace detail {

inline void require_known_analysis(const std::string& n) {
  static const std::set<std::string> known{"qmf", "low_pass", "weight", "invariant_measure", "w_cycles", "harmonic_space", "h_c",
                                           "scaling_function", "scaling", "correlation", "averaging_decay", "lyapunov", "birkhoff",
                                           "purity", "s0_isometry", "lambda_invariance", "covariant_pair", "phi_isometry",
                                           "canonicalize", "multiplicity"};
  if (!known.count(n)) throw ConfigError("unknown analysis '" + n + "'");
}

}  // namespace detail

struct Experiment {
  std::string name;
  std::uint64_t seed = 1;
  std::optional<SftSystem> sft;
  std::optional<TorusSystem> torus;
  std::optional<SftFilter> sft_filter;
  std::optional<TorusFilter> torus_filter;
  std::optional<MarkovMeasure> rho;
  std::optional<Cycle<SftPoint>> sft_cycle;
  std::optional<Cycle<TorusPoint>> torus_cycle;
  Json analyses = Json::array();

  bool is_sft() const { return sft.has_value(); }

  PathSpace sft_space() const { return PathSpace::for_sft(*sft, *sft_cycle, *rho); }
  PathSpace torus_space() const { return PathSpace::for_torus(*torus, *torus_cycle); }

  std::string format(const SftPoint& x) const { return sft->format(x); }

  Json cycle_json() const {
    Json pts = Json::array();
    if (is_sft())
      for (const auto& x : sft_cycle->points) pts.push_back(format(x));
    else
      for (const auto& x : torus_cycle->points) pts.push_back(to_json(x.angle));
    return pts;
  }

  SftPoint parse_sft_point(const Json& v, const std::string& where) const {
    if (!v.is_string()) throw ConfigError(where + " must be a point string such as \"12(1)\"");
    try {
      return sft->parse_point(v.get<std::string>());
    } catch (const Error& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }

  TorusPoint parse_torus_point(const Json& v, const std::string& where) const {
    try {
      return torus->point(detail::parse_rational_value(v, where));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }

  /// Cylinder function from {"depth": k, "table": {word: value}} or {"indicator": word}.
  CylinderFunction<Algebraic> parse_cylinder(const Json& spec, const std::string& where) const {
    if (spec.is_string()) return parse_cylinder(Json{{"indicator", spec}}, where);
    detail::allow_keys(spec, where, {"depth", "table", "indicator", "patterns"});
    try {
      if (spec.contains("indicator")) {
        if (!spec.at("indicator").is_string()) throw ConfigError(where + ".indicator must be a word");
        return CylinderFunction<Algebraic>::indicator(*sft, sft->alphabet().parse(spec.at("indicator").get<std::string>()));
      }
      const std::size_t depth = static_cast<std::size_t>(detail::get_int(spec, "depth", 0, where, 1));
      const bool patterns = spec.contains("patterns");
      const Json& table = patterns ? spec.at("patterns") : detail::need(spec, "table", where);
      if (!table.is_object()) throw ConfigError(where + ".table must map words to values");
      std::map<Word, Algebraic> values;
      for (const auto& [w, v] : table.items()) values[sft->alphabet().parse(w)] = detail::parse_value(v, where + "[" + w + "]");
      std::size_t d = depth;
      if (d == 0)
        for (const auto& [w, v] : values) d = std::max(d, w.size());
      return patterns ? CylinderFunction<Algebraic>::from_patterns(*sft, d, values) : CylinderFunction<Algebraic>::from_table(*sft, d, values);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }

  /// Trig polynomial from {"frequency": value}.
  static TrigPolynomial<Algebraic> parse_trig(const Json& spec, const std::string& where) {
    if (!spec.is_object()) throw ConfigError(where + " must map frequencies to values");
    std::map<long long, Algebraic> c;
    for (const auto& [n, v] : spec.items()) {
      long long freq = 0;
      try {
        std::size_t used = 0;
        freq = std::stoll(n, &used);
        if (used != n.size()) throw std::invalid_argument(n);
      } catch (const std::exception&) {
        throw ConfigError(where + ": frequency '" + n + "' is not an integer");
      }
      c[freq] = detail::parse_value(v, where + "[" + n + "]");
    }
    return TrigPolynomial<Algebraic>(c);
  }

  Phases parse_phases(const Json& filter, std::size_t p) const {
    Phases ph;
    if (!filter.contains("phases")) return ph;
    const Json& a = filter.at("phases");
    if (!a.is_array()) throw ConfigError("filter.phases must be an array");
    for (const auto& v : a) ph.values.push_back(detail::parse_value(v, "filter.phases"));
    try {
      ph.validate(p);
    } catch (const Error& e) {
      throw ConfigError(std::string("filter.phases: ") + e.what());
    }
    return ph;
  }

  static Experiment from_json(const Json& cfg) {
    Experiment ex;
    detail::allow_keys(cfg, "config", {"name", "seed", "system", "filter", "cycle", "measure", "analyses", "description"});
    ex.name = detail::get_string(cfg, "name", "experiment", "config");
    ex.seed = static_cast<std::uint64_t>(detail::get_int(cfg, "seed", 1, "config"));

    const Json& sys = detail::need(cfg, "system", "config");
    if (!detail::need(sys, "kind", "system").is_string()) throw ConfigError("system.kind must be a string");
    const std::string k = sys.at("kind").get<std::string>();
    try {
      if (k == "sft") {
        detail::allow_keys(sys, "system", {"kind", "alphabet", "adjacency", "contraction"});
        const Json& a = detail::need(sys, "adjacency", "system");
        if (!a.is_array() || a.empty()) throw ConfigError("system.adjacency must be a nonempty matrix");
        std::vector<std::vector<int>> adj;
        for (const auto& row : a) {
          if (!row.is_array()) throw ConfigError("system.adjacency rows must be arrays");
          std::vector<int> r;
          for (const auto& v : row) {
            if (!v.is_number_integer()) throw ConfigError("system.adjacency entries must be 0 or 1");
            r.push_back(v.get<int>());
          }
          adj.push_back(r);
        }
        std::string letters = detail::get_string(sys, "alphabet", "", "system");
        if (letters.empty())
          for (std::size_t i = 0; i < adj.size(); ++i) letters.push_back(static_cast<char>('1' + i));
        const Rational c = sys.contains("contraction") ? detail::parse_rational_value(sys.at("contraction"), "system.contraction")
                                                       : make_rational(1, 2);
        ex.sft = SftSystem(Alphabet(std::vector<char>(letters.begin(), letters.end())), adj, c);
      } else if (k == "torus") {
        detail::allow_keys(sys, "system", {"kind", "degree"});
        detail::need(sys, "degree", "system");
        ex.torus = TorusSystem(static_cast<int>(detail::get_int(sys, "degree", 0, "system", 2)));
      } else {
        throw ConfigError("system.kind must be \"sft\" or \"torus\"");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("system: ") + e.what());
    }

    // measure
    if (cfg.contains("measure")) {
      const Json& m = cfg.at("measure");
      if (m.is_string() && m.get<std::string>() == "uniform") {
      } else if (m.is_object() && ex.is_sft()) {
        detail::allow_keys(m, "measure", {"weight"});
        auto w = ex.parse_cylinder(detail::need(m, "weight", "measure"), "measure.weight");
        CylinderFunction<Rational> v(*ex.sft, w.depth());
        for (const auto& [word, val] : w.values()) {
          if (!val.is_rational()) throw ConfigError("measure.weight values must be rational");
          v.set(word, val.rational_value());
        }
        try {
          ex.rho = MarkovMeasure::from_weight(v);
        } catch (const Error& e) {
          throw ConfigError(std::string("measure: ") + e.what());
        }
      } else {
        throw ConfigError("measure must be \"uniform\" or (sft) {\"weight\": ...}");
      }
    }
    if (ex.is_sft() && !ex.rho) {
      try {
        ex.rho = MarkovMeasure::uniform(*ex.sft);
      } catch (const Error& e) {
        throw ConfigError(std::string("measure: ") + e.what());
      }
    }

    // cycle
    const Json& cyc = detail::need(cfg, "cycle", "config");
    detail::allow_keys(cyc, "cycle", {"points", "enumerate", "index"});
    try {
      if (cyc.contains("points")) {
        const Json& pts = cyc.at("points");
        if (!pts.is_array() || pts.empty()) throw ConfigError("cycle.points must be a nonempty array");
        if (ex.is_sft()) {
          const SftPoint x = ex.parse_sft_point(pts[0], "cycle.points[0]");
          if (!x.purely_periodic()) throw ConfigError("cycle points must be purely periodic");
          for (auto& c : enumerate_cycles(*ex.sft, x.period.size()))
            if (std::find(c.points.begin(), c.points.end(), x) != c.points.end()) ex.sft_cycle = c;
          for (const auto& v : pts) {
            const SftPoint y = ex.parse_sft_point(v, "cycle.points");
            if (std::find(ex.sft_cycle->points.begin(), ex.sft_cycle->points.end(), y) == ex.sft_cycle->points.end())
              throw ConfigError("cycle.points do not form one cycle");
          }
        } else {
          ex.torus_cycle = cycle_through(*ex.torus, ex.parse_torus_point(pts[0], "cycle.points[0]"));
          for (const auto& v : pts) {
            const TorusPoint y = ex.parse_torus_point(v, "cycle.points");
            if (std::find(ex.torus_cycle->points.begin(), ex.torus_cycle->points.end(), y) == ex.torus_cycle->points.end())
              throw ConfigError("cycle.points do not form one cycle");
          }
        }
      } else {
        const std::size_t p = static_cast<std::size_t>(detail::get_int(cyc, "enumerate", 1, "cycle", 1));
        const std::size_t idx = static_cast<std::size_t>(detail::get_int(cyc, "index", 0, "cycle"));
        if (ex.is_sft()) {
          auto all = enumerate_cycles(*ex.sft, p);
          if (idx >= all.size()) throw ConfigError("cycle.index out of range");
          ex.sft_cycle = all[idx];
        } else {
          auto all = enumerate_cycles(*ex.torus, p);
          if (idx >= all.size()) throw ConfigError("cycle.index out of range");
          ex.torus_cycle = all[idx];
        }
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("cycle: ") + e.what());
    }
    const std::size_t p = ex.is_sft() ? ex.sft_cycle->length() : ex.torus_cycle->length();

    // filter
    const Json& f = detail::need(cfg, "filter", "config");
    try {
      if (ex.is_sft()) {
        detail::allow_keys(f, "filter", {"depth", "table", "patterns", "phases"});
        Json spec = f;
        spec.erase("phases");
        ex.sft_filter = SftFilter{ex.parse_cylinder(spec, "filter"), ex.parse_phases(f, p)};
      } else {
        detail::allow_keys(f, "filter", {"coefficients", "phases"});
        ex.torus_filter = TorusFilter{parse_trig(detail::need(f, "coefficients", "filter"), "filter.coefficients"), ex.parse_phases(f, p)};
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("filter: ") + e.what());
    }

    const Json& an = detail::need(cfg, "analyses", "config");
    if (!an.is_array()) throw ConfigError("analyses must be an array");
    for (const auto& a : an) {
      if (!a.is_object() || !a.contains("name") || !a.at("name").is_string()) throw ConfigError("every analysis needs a string 'name'");
      detail::require_known_analysis(a.at("name").get<std::string>());
    }
    ex.analyses = an;
    return ex;
  }
};

// --- analyses ---------------------------------------------------------------------------

struct AnalysisOutcome {
  bool pass = false;
  Json results = Json::object();
  std::optional<Residual> residual;
  std::optional<Json> table;  // {"columns": [...], "rows": [[...], ...]}
};

namespace detail {

inline Json table(std::vector<std::string> columns) { return Json{{"columns", columns}, {"rows", Json::array()}}; }

inline bool meets(const Residual& r, double tol) { return r.value + r.bound <= tol; }

inline std::vector<SftPoint> sft_bases(const Experiment& ex, const Json& a, const std::string& where) {
  std::vector<SftPoint> out;
  if (a.contains("bases")) {
    if (!a.at("bases").is_array()) throw ConfigError(where + ".bases must be an array");
    for (const auto& v : a.at("bases")) out.push_back(ex.parse_sft_point(v, where + ".bases"));
  } else {
    // one representative per admissible word of length 2
    for (const auto& w : ex.sft->words(2)) out.push_back(ex.sft->representative(w));
  }
  return out;
}

inline std::vector<SftPoint> torus_bases(const Experiment& ex, const Json& a, const std::string& where) {
  std::vector<SftPoint> out;
  if (a.contains("bases")) {
    if (!a.at("bases").is_array()) throw ConfigError(where + ".bases must be an array");
    for (const auto& v : a.at("bases")) out.push_back(to_digits(*ex.torus, ex.parse_torus_point(v, where + ".bases")));
  } else {
    for (long long q : {0, 1, 2, 3}) out.push_back(to_digits(*ex.torus, ex.torus->point(make_rational(q, 5))));
  }
  return out;
}

inline Algebraic random_value(std::mt19937_64& rng) {
  const long long re = static_cast<long long>(rng() % 9) - 4, im = static_cast<long long>(rng() % 5) - 2;
  return Algebraic(GaussianRational{make_rational(re, 1 + static_cast<long long>(rng() % 3)), Rational(im)});
}

inline CylinderFunction<Algebraic> random_cylinder(const SftSystem& sys, std::mt19937_64& rng, std::size_t max_depth) {
  CylinderFunction<Algebraic> f(sys, 1 + rng() % max_depth);
  const auto words = f.system().words(f.depth());
  for (const auto& w : words) f.set(w, random_value(rng));
  return f;
}

inline TrigPolynomial<Algebraic> random_trig(std::mt19937_64& rng, long long max_degree) {
  std::map<long long, Algebraic> c;
  for (long long n = -max_degree; n <= max_degree; ++n)
    if (rng() % 2) c[n] = random_value(rng);
  return TrigPolynomial<Algebraic>(c);
}

/// Random path with a nonempty canonical prefix or a base off the cycle.
inline SolenoidPath random_path(const PathSpace& s, std::mt19937_64& rng, std::size_t max_base, std::size_t max_prefix) {
  const SftSystem& sys = s.shift();
  while (true) {
    auto words = sys.words(1 + rng() % max_base);
    const SftPoint base = sys.representative(words[rng() % words.size()]);
    const int tail = static_cast<int>(rng() % s.tail_count());
    const int alignment = static_cast<int>(rng() % s.period());
    Word prefix;
    int next = base.letter(0);
    const std::size_t m = rng() % (max_prefix + 1);
    for (std::size_t k = 0; k < m; ++k) {
      std::vector<int> options;
      for (int j = 0; j < sys.size(); ++j)
        if (sys.allowed(j, next)) options.push_back(j);
      prefix.push_back(options[rng() % options.size()]);
      next = prefix.back();
    }
    canonicalize_prefix(s, prefix, tail, alignment);
    if (!path_admissible(s, prefix, tail, alignment, base.letter(0))) continue;
    return {base, prefix, tail, alignment};
  }
}

}  // namespace detail

/// Runs one analysis; parameter problems raise ConfigError, analysis problems other errors.
inline AnalysisOutcome run_analysis(const Experiment& ex, const Json& a, std::uint64_t seed) {
  using namespace detail;
  const std::string name = a.at("name").get<std::string>();
  const std::string where = "analysis '" + name + "'";
  AnalysisOutcome out;
  std::mt19937_64 rng(seed);

  if (name == "qmf") {
    allow_keys(a, where, {"name", "tolerance"});
    const double tol = get_double(a, "tolerance", ex.is_sft() ? 0.0 : 1e-12, where);
    const Residual r = ex.is_sft() ? qmf_residual(*ex.sft, *ex.sft_filter) : qmf_residual(*ex.torus, *ex.torus_filter);
    out.residual = r;
    out.pass = meets(r, tol);
    return out;
  }
  if (name == "low_pass") {
    allow_keys(a, where, {"name", "tolerance"});
    const double tol = get_double(a, "tolerance", ex.is_sft() ? 0.0 : 1e-12, where);
    const Residual r = ex.is_sft() ? low_pass_residual(*ex.sft, *ex.sft_filter, *ex.sft_cycle)
                                   : low_pass_residual(*ex.torus, *ex.torus_filter, *ex.torus_cycle);
    out.results["cycle"] = ex.cycle_json();
    out.residual = r;
    out.pass = meets(r, tol);
    return out;
  }
  if (name == "weight") {
    allow_keys(a, where, {"name"});
    if (ex.is_sft()) {
      auto w = weight_from_filter(*ex.sft, *ex.sft_filter);
      out.table = table({"word", "W"});
      for (const auto& [word, v] : w.values()) out.table->at("rows").push_back(Json::array({ex.sft->alphabet().format(word), v.str()}));
    } else {
      auto w = weight_from_filter(*ex.torus, *ex.torus_filter);
      out.table = table({"frequency", "coefficient"});
      for (const auto& [n, v] : w.coefficients()) out.table->at("rows").push_back(Json::array({n, v.str()}));
    }
    out.pass = true;
    return out;
  }
  if (name == "invariant_measure") {
    allow_keys(a, where, {"name", "depth"});
    const std::size_t depth = static_cast<std::size_t>(get_int(a, "depth", 6, where, 1));
    Residual worst;
    std::size_t checked = 0;
    if (ex.is_sft()) {
      Json st = Json::object();
      for (int l = 0; l < ex.sft->size(); ++l) st[std::string(1, ex.sft->alphabet().symbol(l))] = to_json(ex.rho->mass(Word{l}));
      out.results["stationary"] = st;
      out.results["uniform"] = ex.rho->is_uniform();
      bool refinement = true;
      for (std::size_t d = 1; d <= depth; ++d)
        for (const auto& w : ex.sft->words(d)) {
          Rational s = 0;
          for (int b : ex.sft->successors(w)) {
            Word e = w;
            e.push_back(b);
            s += ex.rho->mass(e);
          }
          refinement = refinement && s == ex.rho->mass(w);
          auto f = CylinderFunction<Rational>::indicator(*ex.sft, w);
          if (ex.rho->is_uniform()) worst = max_residual(worst, strong_invariance_residual(*ex.rho, f));
          worst = max_residual(worst, exact_residual(ex.rho->integrate(f.compose_shift(1)) - ex.rho->integrate(f)));
          ++checked;
        }
      out.results["refinement_consistent"] = refinement;
      out.pass = refinement && worst.is_exact_zero();
    } else {
      const HaarMeasure haar(*ex.torus);
      for (long long m = -static_cast<long long>(depth); m <= static_cast<long long>(depth); ++m) {
        worst = max_residual(worst, strong_invariance_residual(haar, TrigPolynomial<Algebraic>::monomial(m, Algebraic(1))));
        ++checked;
      }
      out.results["measure"] = "haar";
      out.pass = worst.is_exact_zero();
    }
    out.results["observables_checked"] = checked;
    out.residual = worst;
    return out;
  }
  if (name == "w_cycles") {
    allow_keys(a, where, {"name", "p_max", "tolerance"});
    const std::size_t p_max = static_cast<std::size_t>(get_int(a, "p_max", 8, where, 1));
    Json cycles = Json::array();
    bool found = false;
    if (ex.is_sft()) {
      const double tol = get_double(a, "tolerance", 0.0, where);
      for (const auto& c : find_w_cycles(*ex.sft, weight_from_filter(*ex.sft, *ex.sft_filter), p_max, tol)) {
        Json pts = Json::array();
        for (const auto& x : c.points) pts.push_back(ex.format(x));
        cycles.push_back(pts);
        found = found || c.points == ex.sft_cycle->points;
      }
    } else {
      const double tol = get_double(a, "tolerance", kDefaultCycleTol, where);
      for (const auto& c : find_w_cycles(*ex.torus, weight_from_filter(*ex.torus, *ex.torus_filter), p_max, tol)) {
        Json pts = Json::array();
        for (const auto& x : c.points) pts.push_back(to_json(x.angle));
        cycles.push_back(pts);
        found = found || c.points == ex.torus_cycle->points;
      }
    }
    out.results["w_cycles"] = cycles;
    out.results["configured_cycle_is_w_cycle"] = found;
    out.pass = found;
    return out;
  }
  if (name == "harmonic_space") {
    allow_keys(a, where, {"name", "depth", "max_frequency"});
    if (ex.is_sft()) {
      const auto w = weight_from_filter(*ex.sft, *ex.sft_filter);
      const auto basis = harmonic_space(w, static_cast<std::size_t>(get_int(a, "depth", static_cast<long long>(w.depth()), where, 1)));
      out.results["dimension"] = basis.size();
    } else {
      const auto basis = harmonic_space(*ex.torus, weight_from_filter(*ex.torus, *ex.torus_filter), get_int(a, "max_frequency", 8, where));
      out.results["dimension"] = basis.size();
    }
    out.pass = true;
    return out;
  }
  if (name == "h_c") {
    allow_keys(a, where, {"name", "m_max", "depth", "max_frequency", "p_max", "prune", "points"});
    MraOptions opt;
    opt.m_max = static_cast<std::size_t>(get_int(a, "m_max", 20, where));
    opt.prune = get_double(a, "prune", opt.prune, where);
    const std::size_t p_max = static_cast<std::size_t>(get_int(a, "p_max", 8, where, 1));
    if (ex.is_sft()) {
      auto r = compute_h_c(ex.sft_space(), *ex.sft_filter, opt, static_cast<std::size_t>(get_int(a, "depth", 0, where)), p_max);
      out.table = table({"word", "fixed_point", "path_sum"});
      bool one = true;
      const std::size_t d = std::max(r.fixed_point.depth(), r.path_sum.value.depth());
      for (const auto& w : ex.sft->words(d)) {
        out.table->at("rows").push_back(Json::array({ex.sft->alphabet().format(w), r.fixed_point(w).str(), r.path_sum.value(w).str()}));
        one = one && r.fixed_point(w) == Algebraic(1);
      }
      out.results["identically_one"] = one;
      out.results["path_sum_exact"] = r.path_sum.exact;
      out.results["path_sum_max_gap"] = r.path_sum.max_gap;
      out.results["consistent"] = r.consistent;
      Residual res;
      res.value = r.discrepancy;
      res.exact = r.path_sum.exact;
      res.bound = r.path_sum.max_gap;
      out.residual = res;
      out.pass = r.consistent;
    } else {
      std::vector<Rational> extra;
      if (a.contains("points")) {
        if (!a.at("points").is_array()) throw ConfigError(where + ".points must be an array");
        for (const auto& v : a.at("points")) extra.push_back(parse_rational_value(v, where + ".points"));
      }
      auto r = compute_h_c(ex.torus_space(), *ex.torus_filter, opt, get_int(a, "max_frequency", 8, where), p_max, extra);
      Json coeffs = Json::object();
      for (const auto& [n, v] : r.fixed_point.coefficients()) coeffs[std::to_string(n)] = to_json(v);
      out.results["fixed_point_coefficients"] = coeffs;
      out.results["identically_one"] = r.fixed_point == TrigPolynomial<Algebraic>::constant(Algebraic(1));
      out.table = table({"point", "fixed_point", "path_sum", "bound"});
      for (const auto& [x, est] : r.cycle_checks)
        out.table->at("rows").push_back(Json::array({to_string(x), r.fixed_point.at(x).real(), est.value, est.bound}));
      out.results["consistent"] = r.consistent;
      Residual res;
      res.exact = false;
      res.value = r.discrepancy;
      out.residual = res;
      out.pass = r.consistent;
    }
    return out;
  }
  if (name == "scaling_function") {
    allow_keys(a, where, {"name", "m_max", "bases", "expect_values"});
    const std::size_t m_max = static_cast<std::size_t>(get_int(a, "m_max", 8, where));
    std::map<std::string, std::size_t> histogram;
    std::size_t count = 0;
    if (ex.is_sft()) {
      const PathSpace s = ex.sft_space();
      for (const auto& b : sft_bases(ex, a, where))
        for (const auto& w : enumerate_paths(s, b, m_max)) {
          ++histogram[eval_scaling(s, *ex.sft_filter, w).exact_value->str()];
          ++count;
        }
    } else {
      const PathSpace s = ex.torus_space();
      for (const auto& b : torus_bases(ex, a, where))
        for (const auto& w : enumerate_paths(s, b, m_max)) {
          const auto e = eval_scaling(s, *ex.torus_filter, w);
          ++histogram[std::to_string(std::round(std::abs(e.value) * 1e6) / 1e6)];
          ++count;
        }
    }
    out.results["paths"] = count;
    Json h = Json::object();
    for (const auto& [v, n] : histogram) h[v] = n;
    out.results["value_counts"] = h;
    out.pass = count > 0;
    if (a.contains("expect_values")) {
      std::set<std::string> allowed;
      for (const auto& v : a.at("expect_values")) allowed.insert(parse_value(v, where + ".expect_values").str());
      for (const auto& [v, n] : histogram) out.pass = out.pass && allowed.count(v) > 0;
    }
    return out;
  }
  if (name == "scaling") {
    allow_keys(a, where, {"name", "m_max", "bases", "tolerance", "min_paths"});
    const std::size_t m_max = static_cast<std::size_t>(get_int(a, "m_max", 4, where));
    const std::size_t min_paths = static_cast<std::size_t>(get_int(a, "min_paths", 50, where));
    std::vector<SolenoidPath> paths;
    Residual r;
    if (ex.is_sft()) {
      const PathSpace s = ex.sft_space();
      for (const auto& b : sft_bases(ex, a, where)) {
        auto ps = enumerate_paths(s, b, m_max);
        paths.insert(paths.end(), ps.begin(), ps.end());
      }
      r = scaling_relation_residual(s, *ex.sft_filter, paths);
    } else {
      const PathSpace s = ex.torus_space();
      for (const auto& b : torus_bases(ex, a, where)) {
        auto ps = enumerate_paths(s, b, m_max);
        paths.insert(paths.end(), ps.begin(), ps.end());
      }
      r = scaling_relation_residual(s, *ex.torus_filter, paths);
    }
    const double tol = get_double(a, "tolerance", ex.is_sft() ? 0.0 : 1e-10, where);
    out.results["paths"] = paths.size();
    out.residual = r;
    out.pass = paths.size() >= min_paths && meets(r, tol);
    return out;
  }
  if (name == "correlation") {
    allow_keys(a, where, {"name", "depth", "f", "m_max", "prune", "grid", "tolerance", "p_max"});
    MraOptions opt;
    opt.m_max = static_cast<std::size_t>(get_int(a, "m_max", 20, where));
    opt.prune = get_double(a, "prune", opt.prune, where);
    const std::size_t p_max = static_cast<std::size_t>(get_int(a, "p_max", 8, where, 1));
    if (ex.is_sft()) {
      const PathSpace s = ex.sft_space();
      Residual worst;
      std::size_t checked = 0;
      if (a.contains("f")) {
        worst = correlation_residual(s, *ex.rho, *ex.sft_filter, ex.parse_cylinder(a.at("f"), where + ".f"), opt, p_max);
        checked = 1;
      } else {
        const std::size_t depth = static_cast<std::size_t>(get_int(a, "depth", 4, where, 1));
        for (std::size_t d = 1; d <= depth; ++d)
          for (const auto& w : ex.sft->words(d)) {
            worst = max_residual(worst, correlation_residual(s, *ex.rho, *ex.sft_filter, CylinderFunction<Algebraic>::indicator(*ex.sft, w),
                                                             opt, p_max));
            ++checked;
          }
      }
      out.results["observables_checked"] = checked;
      out.residual = worst;
      out.pass = meets(worst, get_double(a, "tolerance", 0.0, where));
    } else {
      const auto f = a.contains("f") ? Experiment::parse_trig(a.at("f"), where + ".f") : TrigPolynomial<Algebraic>::monomial(1, Algebraic(1));
      const Residual r = correlation_residual(ex.torus_space(), *ex.torus_filter, f, opt,
                                              static_cast<std::size_t>(get_int(a, "grid", 0, where)), 8, p_max);
      out.residual = r;
      out.pass = r.value <= r.bound && r.bound <= get_double(a, "tolerance", 1e-4, where);
    }
    return out;
  }
  if (name == "averaging_decay") {
    allow_keys(a, where, {"name", "f", "n_max", "expect_ratio", "tolerance"});
    const std::size_t n_max = static_cast<std::size_t>(get_int(a, "n_max", 20, where, 1));
    std::vector<double> d;
    if (ex.is_sft()) {
      const auto f = a.contains("f") ? ex.parse_cylinder(a.at("f"), where + ".f") : CylinderFunction<Algebraic>::indicator(*ex.sft, Word{0});
      CylinderFunction<Rational> fr(*ex.sft, f.depth());
      for (const auto& [w, v] : f.values()) {
        if (!v.is_rational()) throw ConfigError(where + ".f must be rational-valued");
        fr.set(w, v.rational_value());
      }
      out.table = table({"n", "d_n", "d_n_exact", "ratio"});
      auto exact = averaging_decay(*ex.rho, fr, n_max);
      for (std::size_t n = 0; n < exact.size(); ++n) {
        d.push_back(to_double(exact[n]));
        Json ratio = n > 0 && exact[n - 1] != 0 ? Json(to_double(exact[n] / exact[n - 1])) : Json(nullptr);
        out.table->at("rows").push_back(Json::array({n, d.back(), to_string(exact[n]), ratio}));
      }
    } else {
      const auto f = a.contains("f") ? Experiment::parse_trig(a.at("f"), where + ".f") : TrigPolynomial<Algebraic>::monomial(1, Algebraic(1));
      d = averaging_decay(*ex.torus, uniform_weight(*ex.torus), f, n_max);
      out.table = table({"n", "d_n", "ratio"});
      for (std::size_t n = 0; n < d.size(); ++n)
        out.table->at("rows").push_back(Json::array({n, d[n], n > 0 && d[n - 1] != 0 ? Json(d[n] / d[n - 1]) : Json(nullptr)}));
    }
    out.pass = d.back() <= d.front();
    if (d.size() >= 2 && d[d.size() - 2] != 0) out.results["final_ratio"] = d.back() / d[d.size() - 2];
    if (a.contains("expect_ratio")) {
      const double want = get_double(a, "expect_ratio", 0, where), tol = get_double(a, "tolerance", 0.01, where);
      out.pass = out.pass && out.results.contains("final_ratio") && std::abs(out.results["final_ratio"].get<double>() - want) <= tol;
    }
    return out;
  }
  if (name == "lyapunov") {
    allow_keys(a, where, {"name", "samples", "orbit_length", "expect", "sigmas", "tolerance"});
    LyapunovEstimate e;
    if (ex.is_sft()) {
      e = lyapunov_A(*ex.rho, *ex.sft_filter);
    } else {
      e = lyapunov_A(*ex.torus, *ex.torus_filter, static_cast<std::size_t>(get_int(a, "samples", 10000, where, 2)),
                     static_cast<std::size_t>(get_int(a, "orbit_length", 1000, where, 1)), seed);
    }
    out.results["A"] = e.minus_infinity ? Json("-inf") : Json(e.value);
    out.results["std_error"] = e.std_error;
    out.results["exact"] = e.exact;
    out.results["zero_set_mass"] = e.zero_set_mass;
    out.results["hypothesis_violated"] = e.hypothesis_violated;
    out.results["exp_2A"] = e.minus_infinity ? 0.0 : std::exp(2 * e.value);
    out.pass = true;
    if (a.contains("expect")) {
      const double want = get_double(a, "expect", 0, where);
      const double sig = get_double(a, "sigmas", 3, where), tol = get_double(a, "tolerance", 0, where);
      out.pass = !e.minus_infinity && std::abs(e.value - want) <= std::max(sig * e.std_error, tol);
    }
    return out;
  }
  if (name == "birkhoff") {
    allow_keys(a, where, {"name", "n", "point"});
    const std::size_t n = static_cast<std::size_t>(get_int(a, "n", 10000, where, 1));
    BirkhoffMean b;
    if (ex.is_sft()) {
      const SftPoint x = a.contains("point") ? ex.parse_sft_point(a.at("point"), where + ".point") : ex.sft_cycle->points[0];
      b = birkhoff_log_mean(*ex.sft, *ex.sft_filter, x, n);
    } else {
      b = birkhoff_log_mean(*ex.torus, *ex.torus_filter, n, seed);
    }
    out.results["log_mean"] = b.minus_infinity ? Json("-inf") : Json(b.value);
    out.results["geometric_mean"] = b.minus_infinity ? 0.0 : std::exp(b.value);
    if (b.minus_infinity) out.results["first_zero"] = b.first_zero;
    out.pass = true;
    return out;
  }
  if (name == "purity") {
    allow_keys(a, where, {"name", "xi", "k_max", "samples"});
    const std::size_t k_max = static_cast<std::size_t>(get_int(a, "k_max", 20, where, 1));
    PurityReport r;
    if (ex.is_sft()) {
      const auto xi = a.contains("xi") ? ex.parse_cylinder(a.at("xi"), where + ".xi") : CylinderFunction<Algebraic>::constant(*ex.sft, Algebraic(1));
      r = purity_decay(*ex.rho, *ex.sft_filter, xi, k_max);
    } else {
      const auto xi = a.contains("xi") ? Experiment::parse_trig(a.at("xi"), where + ".xi") : TrigPolynomial<Algebraic>::constant(Algebraic(1));
      r = purity_decay(*ex.torus, *ex.torus_filter, xi, k_max, static_cast<std::size_t>(get_int(a, "samples", 10000, where, 1)), seed);
    }
    out.table = table({"k", "s_k", "zero_mass"});
    for (std::size_t k = 0; k < r.s.size(); ++k) out.table->at("rows").push_back(Json::array({k + 1, r.s[k], r.zero_mass[k]}));
    out.results["exact"] = r.exact;
    out.results["fitted_rate"] = std::isnan(r.fitted_rate) ? Json(nullptr) : Json(r.fitted_rate);
    out.results["hypothesis_violated"] = r.hypothesis_violated;
    out.results["decaying"] = r.decaying;
    out.pass = r.decaying;
    return out;
  }
  if (name == "s0_isometry") {
    allow_keys(a, where, {"name", "pairs", "max_depth", "max_degree"});
    const std::size_t pairs = static_cast<std::size_t>(get_int(a, "pairs", 20, where, 1));
    Residual worst;
    if (ex.is_sft()) {
      const auto h = h_fixed_point(*ex.sft, *ex.sft_filter, *ex.sft_cycle);
      const std::size_t md = static_cast<std::size_t>(get_int(a, "max_depth", 3, where, 1));
      for (std::size_t t = 0; t < pairs; ++t) {
        auto f = random_cylinder(*ex.sft, rng, md), g = random_cylinder(*ex.sft, rng, md);
        worst = max_residual(worst, s0_isometry_residual(*ex.rho, *ex.sft_filter, h, f, g));
      }
    } else {
      const auto h = h_fixed_point(*ex.torus, *ex.torus_filter, *ex.torus_cycle);
      const long long md = get_int(a, "max_degree", 3, where);
      for (std::size_t t = 0; t < pairs; ++t)
        worst = max_residual(worst, s0_isometry_residual(*ex.torus, *ex.torus_filter, h, random_trig(rng, md), random_trig(rng, md)));
    }
    out.results["pairs"] = pairs;
    out.residual = worst;
    out.pass = worst.is_exact_zero();
    return out;
  }
  if (name == "lambda_invariance" || name == "covariant_pair" || name == "phi_isometry") {
    allow_keys(a, where, {"name", "functionals", "terms"});
    const std::size_t count = static_cast<std::size_t>(get_int(a, "functionals", 100, where, 1));
    const std::size_t terms = static_cast<std::size_t>(get_int(a, "terms", 5, where, 1));
    const PathSpace s = ex.is_sft() ? ex.sft_space() : ex.torus_space();
    const Phases phases = ex.is_sft() ? ex.sft_filter->phases : ex.torus_filter->phases;
    Residual worst;
    double unresolved = 0;
    for (std::size_t t = 0; t < count; ++t) {
      const auto F = random_functional(s, rng, terms);
      if (name == "lambda_invariance") {
        for (long long n = -3; n <= 3; ++n) worst = max_residual(worst, lambda_invariance_residual(s, F, n));
      } else if (name == "covariant_pair") {
        const auto G = random_functional(s, rng, terms);
        const auto back = apply_U(s, phases, apply_U_inverse(s, phases, F));
        PathFunctional diff = back;
        for (const auto& [cell, v] : F.terms()) diff.add(s, cell, -v);
        worst = max_residual(worst, exact_residual(inner(s, diff, diff)));
        worst = max_residual(worst, exact_residual(inner(s, apply_U(s, phases, F), apply_U(s, phases, G)) - inner(s, F, G)));
        worst = max_residual(worst, covariance_residual(s, phases, random_cylinder(s.shift(), rng, 2), F));
      } else {
        const auto check = phi_isometry_residual(s, F);
        worst = max_residual(worst, check.residual);
        unresolved += check.unresolved_mass;
      }
    }
    out.results["functionals"] = count;
    if (name == "phi_isometry") out.results["unresolved_mass"] = unresolved;
    out.residual = worst;
    out.pass = worst.is_exact_zero();
    return out;
  }
  if (name == "canonicalize") {
    allow_keys(a, where, {"name", "paths"});
    const std::size_t count = static_cast<std::size_t>(get_int(a, "paths", 100, where, 1));
    const PathSpace s = ex.is_sft() ? ex.sft_space() : ex.torus_space();
    std::size_t ok = 0, special = 0, tried = 0;
    while (ok + special < count && tried < 100 * count) {
      ++tried;
      const auto w = random_path(s, rng, 4, 6);
      try {
        const auto c = canonicalize_path(s, w);
        bool good = r_hat_power(s, c.eta, c.k) == w && in_cross_section(s, c.eta);
        const long long p = static_cast<long long>(s.period());
        for (long long j = 1; j <= 3; ++j) {
          good = good && !in_cross_section(s, r_hat_power(s, w, -(c.k + j * p)));
          good = good && !in_cross_section(s, r_hat_power(s, w, -(c.k - j * p)));
        }
        if (!good) throw std::logic_error("canonicalize roundtrip failed");
        ++ok;
      } catch (const PreconditionError&) {
        ++special;
      }
    }
    out.results["roundtrips"] = ok;
    out.results["special_paths"] = special;
    out.pass = ok + special == count;
    return out;
  }
  if (name == "multiplicity") {
    allow_keys(a, where, {"name", "point", "n_max", "expect"});
    const std::size_t n_max = static_cast<std::size_t>(get_int(a, "n_max", 4, where, 1));
    std::vector<Multiplicity> counts;
    if (ex.is_sft()) {
      const auto h = h_fixed_point(*ex.sft, *ex.sft_filter, *ex.sft_cycle);
      const SftPoint x = a.contains("point") ? ex.parse_sft_point(a.at("point"), where + ".point") : ex.sft_cycle->points[0];
      for (std::size_t n = 1; n <= n_max; ++n) counts.push_back(multiplicity(*ex.sft, h, x, n));
    } else {
      const auto h = h_fixed_point(*ex.torus, *ex.torus_filter, *ex.torus_cycle);
      const TorusPoint x = a.contains("point") ? ex.parse_torus_point(a.at("point"), where + ".point") : ex.torus_cycle->points[0];
      for (std::size_t n = 1; n <= n_max; ++n) counts.push_back(multiplicity(*ex.torus, h, x, n));
    }
    out.table = table({"n", "lower", "upper"});
    for (std::size_t n = 0; n < counts.size(); ++n) out.table->at("rows").push_back(Json::array({n + 1, counts[n].lower, counts[n].upper}));
    out.pass = true;
    if (a.contains("expect")) {
      const Json& e = a.at("expect");
      if (!e.is_array() || e.size() != counts.size()) throw ConfigError(where + ".expect must list one count per n");
      for (std::size_t n = 0; n < counts.size(); ++n)
        out.pass = out.pass && counts[n].exact() && e[n].is_number_integer() && counts[n].lower == e[n].get<std::size_t>();
    }
    return out;
  }
  throw ConfigError("unknown analysis '" + name + "'");
}

/// Runs every analysis in order.  ConfigError escapes (exit 2); any other
/// exception marks that analysis as an error.
inline Json run_experiment(const Experiment& ex, const RunOptions& opt = {}) {
  const std::uint64_t seed = opt.seed.value_or(ex.seed);
  // parameters are validated before anything runs
  for (const auto& a : ex.analyses) detail::require_known_analysis(a.at("name").get<std::string>());
  auto one = [&](std::size_t i) -> Json {
    const Json& a = ex.analyses[i];
    Json rec;
    rec["name"] = a.at("name");
    rec["inputs"] = a;
    const auto start = std::chrono::steady_clock::now();
    try {
      const AnalysisOutcome o = run_analysis(ex, a, seed + i);
      rec["status"] = o.pass ? "pass" : "fail";
      if (o.residual) rec["residual"] = to_json(*o.residual);
      rec["results"] = o.results;
      if (o.table) rec["table"] = *o.table;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      rec["status"] = "error";
      rec["error"] = e.what();
    }
    if (opt.timing) rec["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
  };
  std::vector<Json> records(ex.analyses.size());
  if (opt.parallel) {
    std::vector<std::future<Json>> jobs;
    for (std::size_t i = 0; i < ex.analyses.size(); ++i) jobs.push_back(std::async(std::launch::async, one, i));
    for (std::size_t i = 0; i < jobs.size(); ++i) records[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < ex.analyses.size(); ++i) records[i] = one(i);
  }
  Json report;
  report["name"] = ex.name;
  report["seed"] = seed;
  report["system"] = ex.is_sft() ? Json{{"kind", "sft"}, {"letters", std::string(ex.sft->alphabet().symbols().begin(), ex.sft->alphabet().symbols().end())}}
                                  : Json{{"kind", "torus"}, {"degree", ex.torus->degree()}};
  report["cycle"] = ex.cycle_json();
  bool all = true;
  for (const auto& r : records) all = all && r.at("status") == "pass";
  report["passed"] = all;
  report["analyses"] = records;
  return report;
}

/// Flat table of one analysis as JSON {"columns", "rows"} or CSV text.
inline Json report_table(const Json& report, const std::string& analysis) {
  if (!report.is_object() || !report.contains("analyses") || report.at("analyses").empty()) throw Error("report has no analyses");
  for (const auto& rec : report.at("analyses")) {
    if (rec.value("name", "") != analysis) continue;
    if (rec.contains("table")) return rec.at("table");
    // scalar results become a one-row table
    Json t{{"columns", Json::array()}, {"rows", Json::array({Json::array()})}};
    if (rec.contains("residual"))
      for (const auto& [k, v] : rec.at("residual").items()) {
        t["columns"].push_back("residual_" + k);
        t["rows"][0].push_back(v);
      }
    if (rec.contains("results"))
      for (const auto& [k, v] : rec.at("results").items()) {
        if (v.is_structured()) continue;
        t["columns"].push_back(k);
        t["rows"][0].push_back(v);
      }
    return t;
  }
  throw Error("no analysis named '" + analysis + "' in the report");
}

inline std::string table_csv(const Json& t) {
  auto cell = [](const Json& v) -> std::string {
    std::string s = v.is_string() ? v.get<std::string>() : v.dump();
    if (s.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      return q + "\"";
    }
    return s;
  };
  std::string out;
  for (std::size_t i = 0; i < t.at("columns").size(); ++i) out += (i ? "," : "") + cell(t["columns"][i]);
  out += "\n";
  for (const auto& row : t.at("rows")) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell(row[i]);
    out += "\n";
  }
  return out;
}

}  // namespace endomra
