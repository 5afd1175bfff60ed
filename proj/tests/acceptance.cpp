// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "endomra/endomra.hpp"

using namespace endomra;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Json load_config(const std::string& name) {
  std::ifstream in(std::string(ENDOMRA_SOURCE_DIR) + "/configs/" + name);
  if (!in) throw std::runtime_error("cannot open config " + name);
  return Json::parse(in);
}

// Runs only the named analyses of a shipped config.
Json run_subset(const std::string& config, const std::vector<std::string>& names) {
  Json cfg = load_config(config);
  Json kept = Json::array();
  for (const auto& a : cfg.at("analyses"))
    if (std::find(names.begin(), names.end(), a.at("name").get<std::string>()) != names.end()) kept.push_back(a);
  cfg["analyses"] = kept;
  return run_experiment(Experiment::from_json(cfg), RunOptions{kSeed});
}

const Json& analysis(const Json& report, const std::string& name) {
  for (const auto& a : report.at("analyses"))
    if (a.at("name") == name) return a;
  throw std::runtime_error("analysis missing from report: " + name);
}

bool exact_zero(const Json& a) {
  const auto& r = a.at("residual");
  return r.at("exact").get<bool>() && r.at("value").get<double>() == 0.0;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SftSystem gm() { return SftSystem::golden_mean(); }
PathSpace gm_space() {
  const auto sys = gm();
  return PathSpace::for_sft(sys, cycle_through(sys, sys.parse_point("(1)")), invariant_measure(sys));
}
PathSpace haar_space() {
  const TorusSystem t(2);
  return PathSpace::for_torus(t, cycle_through(t, t.point(0)));
}

TrigPolynomial<Algebraic> monomial(long long n, long long c = 1) { return TrigPolynomial<Algebraic>::monomial(n, Algebraic(c)); }

// --- criteria ---------------------------------------------------------------------------

Outcome golden_mean_reproduction() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = run_subset("golden_mean.json", {"qmf", "low_pass", "scaling_function", "h_c"});
  const auto& sf = analysis(report, "scaling_function");
  const auto& hc = analysis(report, "h_c");
  const bool values_01 = sf.at("status") == "pass" && sf.at("inputs").at("m_max") == 8;
  const bool hc_one = hc.at("results").at("identically_one").get<bool>() && hc.at("results").at("path_sum_exact").get<bool>() &&
                      hc.at("results").at("consistent").get<bool>() && exact_zero(hc);
  const double secs = seconds_since(t0);
  const bool ok = exact_zero(analysis(report, "qmf")) && exact_zero(analysis(report, "low_pass")) && values_01 && hc_one && secs < 5;
  return {ok, fmt("qmf=0 low_pass=0 exact; phi-hat in {0,1} on %d paths; h_C == 1 by both routes; %.2fs",
                  sf.at("results").at("paths").get<int>(), secs)};
}

Outcome invariant_measure_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = run_subset("golden_mean.json", {"invariant_measure"});
  const auto& im = analysis(report, "invariant_measure");
  // eigenvector oracle: a = rho[1], b = rho[2] with rho = rho o R, R the fibre average;
  // R 1_[1] = 1/2 on [1], 1 on [2]; R 1_[2] = 1/2 on [1], 0 on [2]  =>  a = a/2 + b, b = a/2
  const Rational b = make_rational(1, 3), a = 1 - b;
  const bool oracle_ok = a == a / 2 + b && b == a / 2;
  const auto rho = invariant_measure(gm());
  const bool masses = rho.mass({0}) == a && rho.mass({1}) == b && im.at("results").at("stationary").at("1") == "2/3" &&
                      im.at("results").at("stationary").at("2") == "1/3";
  bool all_zero = true;
  std::size_t checked = 0;
  for (std::size_t d = 1; d <= 6; ++d)
    for (const auto& w : gm().words(d)) {
      all_zero = all_zero && strong_invariance_residual(rho, CylinderFunction<Rational>::indicator(gm(), w)).is_exact_zero();
      ++checked;
    }
  const double secs = seconds_since(t0);
  return {oracle_ok && masses && all_zero && exact_zero(im) && secs < 1,
          fmt("rho[1]=2/3 rho[2]=1/3; strong invariance exact on %zu cylinders; %.3fs", checked, secs)};
}

Outcome lambda_invariance() {
  const auto s = gm_space();
  std::mt19937_64 rng(kSeed);
  std::size_t checks = 0;
  bool ok = true;
  for (int t = 0; t < 100; ++t) {
    const auto f = random_functional(s, rng, 5);
    for (long long n = -3; n <= 3; ++n, ++checks) ok = ok && lambda_invariance_residual(s, f, n).is_exact_zero();
  }
  return {ok, fmt("%zu exact zero residuals (100 functionals, n = -3..3)", checks)};
}

Outcome correlation_identity() {
  const auto s = gm_space();
  const auto sys = gm();
  const auto rho = invariant_measure(sys);
  const auto filter = golden_mean_filter(sys);
  bool golden = true;
  std::size_t n = 0;
  for (std::size_t d = 1; d <= 4; ++d)
    for (const auto& w : sys.words(d)) {
      ++n;
      golden = golden && correlation_residual(s, rho, filter, CylinderFunction<Algebraic>::indicator(sys, w)).is_exact_zero();
    }
  MraOptions opt;
  opt.m_max = 20;
  const auto r = correlation_residual(haar_space(), haar_type_filter(), monomial(1), opt);
  return {golden && r.value <= r.bound && r.bound <= 1e-4,
          fmt("golden exact on %zu cylinders; Haar residual %.2e <= bound %.2e", n, r.value, r.bound)};
}

Outcome scaling_identity() {
  const auto gs = gm_space();
  const auto sys = gm();
  std::vector<SolenoidPath> gp;
  for (const auto* x : {"(1)", "2(1)", "(12)", "112(1)"})
    for (auto& w : enumerate_paths(gs, sys.parse_point(x), 6)) gp.push_back(std::move(w));
  const bool golden = scaling_relation_residual(gs, golden_mean_filter(sys), gp).is_exact_zero();
  const auto hs = haar_space();
  const TorusSystem t(2);
  std::vector<SolenoidPath> hp;
  for (const auto& a : {Rational(0), make_rational(1, 2), make_rational(1, 3), make_rational(2, 5), make_rational(3, 7)})
    for (auto& w : enumerate_paths(hs, to_digits(t, t.point(a)), 4)) hp.push_back(std::move(w));
  const auto r = scaling_relation_residual(hs, haar_type_filter(), hp);
  return {golden && gp.size() >= 50 && hp.size() >= 50 && r.value <= 1e-10,
          fmt("golden exact on %zu paths; Haar %.2e on %zu paths", gp.size(), r.value, hp.size())};
}

Outcome w_cycle_search() {
  const TorusSystem t(2);
  const auto c1 = find_w_cycles(t, weight_from_filter(t, haar_type_filter(1)), 8, 1e-9);
  const auto c3 = find_w_cycles(t, weight_from_filter(t, haar_type_filter(3)), 8, 1e-9);
  const bool ok1 = c1.size() == 1 && c1[0].points.size() == 1 && c1[0].points[0].angle == 0;
  const bool ok3 = c3.size() == 2 && c3[0].points.size() == 1 && c3[0].points[0].angle == 0 && c3[1].points.size() == 2 &&
                   c3[1].points[0].angle == make_rational(1, 3) && c3[1].points[1].angle == make_rational(2, 3);
  return {ok1 && ok3, fmt("cos^2(pi x): %zu cycle(s); cos^2(3 pi x): %zu cycle(s)", c1.size(), c3.size())};
}

Outcome ergodic_constants() {
  const TorusSystem t(2);
  const auto filter = haar_type_filter();
  const double expected = -std::log(2.0) / 2;
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto lg = [](double x) { return std::log(std::sqrt(2.0) * std::abs(std::cos(std::numbers::pi * x))); };
  const double quad = integrator.integrate(lg, 0.0, 0.5) + integrator.integrate(lg, 0.5, 1.0);
  const auto e = lyapunov_A(t, filter, 100000, 1000, kSeed);
  const auto b = birkhoff_log_mean(t, filter, 10000, kSeed);
  const double gap = std::abs(std::exp(b.value) - std::exp(expected));
  const bool ok = !e.minus_infinity && std::abs(e.value - expected) <= 3 * e.std_error && std::abs(e.value - quad) <= 1e-3 &&
                  !b.minus_infinity && gap < 1e-2;
  return {ok, fmt("A = %.6f +- %.1e (expected %.6f, quadrature %.6f); |exp(birkhoff) - e^A| = %.2e", e.value, e.std_error, expected,
                  quad, gap)};
}

Outcome averaging_decay_check() {
  const auto sys = gm();
  const auto d = averaging_decay(invariant_measure(sys), CylinderFunction<Rational>::indicator(sys, {0}), 21);
  const Rational ratio = d[21] / d[20];
  const double r = to_double(ratio);
  return {std::abs(r - 0.5) <= 0.01, fmt("d_21/d_20 = %s (%.6f)", ratio.str().c_str(), r)};
}

Outcome purity_diagnostics() {
  const auto h = purity_decay(TorusSystem(2), haar_type_filter(), monomial(1), 20, 4000, kSeed);
  const auto sys = gm();
  const auto g = purity_decay(invariant_measure(sys), golden_mean_filter(sys), CylinderFunction<Algebraic>::indicator(sys, {1, 0}), 20);
  bool zero = g.s.size() == 20;
  for (double v : g.s) zero = zero && v == 0.0;
  return {std::abs(h.fitted_rate - 0.5) <= 0.15 * 0.5 && h.decaying && zero,
          fmt("Haar fitted rate %.4f; golden [21] s_k = 0 for k = 1..20: %s", h.fitted_rate, zero ? "yes" : "no")};
}

Outcome isometry_suite() {
  const auto sys = gm();
  const auto rho = invariant_measure(sys);
  const auto filter = golden_mean_filter(sys);
  const auto one = CylinderFunction<Algebraic>::constant(sys, Algebraic(1));
  std::mt19937_64 rng(kSeed);
  auto small = [&] { return static_cast<long long>(rng() % 9) - 4; };
  auto cyl = [&] {
    CylinderFunction<Algebraic> f(sys, 1 + rng() % 4);
    for (const auto& w : sys.words(f.depth())) f.set(w, Algebraic(small()) + Algebraic(small()) * Algebraic::i());
    return f;
  };
  bool s0_golden = true;
  for (int k = 0; k < 20; ++k) s0_golden = s0_golden && s0_isometry_residual(rho, filter, one, cyl(), cyl()).is_exact_zero();

  const TorusSystem t(2);
  const auto h1 = TrigPolynomial<Algebraic>::constant(Algebraic(1));
  auto trig = [&] {
    std::map<long long, Algebraic> c;
    for (int j = 0; j < 4; ++j) c[small()] = Algebraic(small()) + Algebraic(make_rational(small(), 3)) * Algebraic::i();
    return TrigPolynomial<Algebraic>(c);
  };
  double s0_haar = 0;
  for (int k = 0; k < 20; ++k) s0_haar = std::max(s0_haar, s0_isometry_residual(t, haar_type_filter(), h1, trig(), trig()).value);

  const auto s = gm_space();
  bool phi = true;
  for (int k = 0; k < 100; ++k) phi = phi && phi_isometry_residual(s, random_functional(s, rng, 4)).residual.is_exact_zero();

  bool roundtrip = true;
  std::size_t paths = 0;
  for (const auto* x : {"2(1)", "(12)", "12(1)", "112(1)", "(1)"})
    for (const auto& w : enumerate_paths(s, sys.parse_point(x), 7)) {
      if (w.prefix.empty() && canonical(w.base) == canonical(sys.parse_point("(1)"))) continue;  // the cycle orbit itself
      if (paths == 100) break;
      const auto c = canonicalize_path(s, w);
      roundtrip = roundtrip && in_cross_section(s, c.eta) && r_hat_power(s, c.eta, c.k) == w;
      ++paths;
    }
  return {s0_golden && s0_haar <= 1e-12 && phi && roundtrip && paths == 100,
          fmt("S_0 golden exact x20; S_0 Haar max %.1e; Phi exact x100; roundtrip %zu paths", s0_haar, paths)};
}

Outcome multiplicity_counts() {
  const auto sys = gm();
  const auto h = CylinderFunction<Algebraic>::constant(sys, Algebraic(1));
  const auto x = sys.parse_point("1(1)");
  bool ok = true;
  std::string got;
  const std::size_t expect[] = {2, 3, 5, 8};
  for (std::size_t n = 1; n <= 4; ++n) {
    // graph oracle: admissible words of length n + 1 ending in x_0
    std::size_t walks = 0;
    for (const auto& w : sys.words(n + 1))
      if (w.back() == x.letter(0)) ++walks;
    const auto m = multiplicity(sys, h, x, n);
    ok = ok && m.exact() && m.lower == expect[n - 1] && walks == m.lower;
    got += (n > 1 ? "," : "") + std::to_string(m.lower);
  }
  return {ok, "counts " + got};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"golden-mean reproduction", golden_mean_reproduction},
      {"invariant measure", invariant_measure_check},
      {"lambda_C invariance", lambda_invariance},
      {"correlation identity", correlation_identity},
      {"scaling identity", scaling_identity},
      {"W-cycle search", w_cycle_search},
      {"ergodic constants", ergodic_constants},
      {"averaging decay", averaging_decay_check},
      {"purity diagnostics", purity_diagnostics},
      {"isometry suite", isometry_suite},
      {"multiplicity", multiplicity_counts},
  };
  int failures = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto c0 = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s  %2zu %-26s %s  [%.2fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), seconds_since(c0));
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed in %.1fs\n", static_cast<int>(criteria.size()) - failures, criteria.size(), seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
