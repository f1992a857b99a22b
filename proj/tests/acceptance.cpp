// Prints one PASS/FAIL line per acceptance criterion; exits 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <thread>

#include "pinchflow/curvature_algebra.hpp"
#include "pinchflow/equivariant_flow.hpp"
#include "pinchflow/estimate_monitor.hpp"
#include "pinchflow/homogeneous_flows.hpp"
#include "pinchflow/poincare_verifier.hpp"
#include "pinchflow/scenario.hpp"
#include "pinchflow/singularity_rescaler.hpp"

using namespace pinchflow;
using std::numbers::pi;

namespace {

const std::string kSource = PINCHFLOW_SOURCE_DIR;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Fixture {
  ScenarioResult result;
  EstimateReport estimates;
  double seconds = 0.0;

  const FlowTrace& trace() const { return *result.trace; }
  const PinchingParams& params() const { return result.config.params; }
  bool in_class() const { return estimates.preservation.initially_in_class; }
};

Fixture fixture(const std::string& name) {
  const auto t0 = std::chrono::steady_clock::now();
  Fixture f;
  f.result = run_scenario(load_scenario(kSource + "/scenarios/" + name + ".json"));
  f.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  f.estimates = check_estimates(f.trace(), f.params(), {0.005, 0.01, 0.02});
  return f;
}

Verdict clifford_identity() {
  std::mt19937_64 rng(20261015);
  std::uniform_real_distribution<double> rd(0.05, 0.95);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 3 + static_cast<int>(rng() % 6);
    const int m = 1 + static_cast<int>(rng() % ((n + 1) / 2));
    const double r = rd(rng), s2 = 1.0 - r * r;
    const auto spec = clifford_spectrum(n, m, r, 1.0);
    const double H = spec.H();
    const double excess = spec.A_norm_sq() - H * H / (n - m) - 2.0 * m;
    const double closed = m * (n - 2.0 * m) / (n - m) * s2 / (r * r);
    // n = 2m: the closed form is zero; measure against |A|^2.
    const double denom = closed != 0.0 ? std::abs(closed) : spec.A_norm_sq();
    worst = std::max(worst, std::abs(excess - closed) / denom);
  }
  return {worst <= 1e-10, fmt("1000 samples, worst relative error %.3g", worst)};
}

Verdict sphere_extinction() {
  double worst_pde = 0.0, worst_ode = 0.0;
  for (int n : {3, 4})
    for (double K : {1.0, 4.0})
      for (double rho0 : {pi / 6, pi / 3}) {
        PinchingParams p{n, n == 3 ? 1 : 2, 0.5, K};
        const double T = hyperparallel_extinction_time(n, K, rho0);
        EquivariantScenario sc;
        sc.sym = SymmetryType{1, n};
        sc.params = p;
        sc.shape.rho0 = rho0;
        sc.N = 1024;
        sc.horizon = 2.0 * T;
        const auto r = run(sc);
        const double pde = r.trace.terminal == TerminalEvent::extinction
                               ? std::abs(r.trace.singular_time - T) / T
                               : INFINITY;
        const auto ode = hyperparallel_flow(rho0, p, 2.0 * T);
        const double o = ode.extinct ? std::abs(ode.extinction_time - T) / T : INFINITY;
        worst_pde = std::max(worst_pde, pde);
        worst_ode = std::max(worst_ode, o);
      }
  return {worst_pde <= 1e-4 && worst_ode <= 1e-8,
          fmt("8 cases at N=1024: worst relative error PDE %.3g, ODE %.3g", worst_pde, worst_ode)};
}

Verdict preservation(const Fixture& db, const Fixture& band) {
  const auto& a = db.estimates.preservation;
  const auto& b = band.estimates.preservation;
  const bool ok = db.in_class() && band.in_class() && a.max_relative <= 1e-3 && b.max_relative <= 1e-3;
  return {ok, fmt("max g/(max|A|^2+K): dumbbell %.3g, band %.3g", a.max_relative, b.max_relative)};
}

Verdict decay(const std::vector<const Fixture*>& fx) {
  bool ok = true;
  std::string d;
  int used = 0;
  for (const auto* f : fx) {
    if (!f->in_class()) continue;
    ++used;
    const auto& dc = f->estimates.decay;
    ok = ok && dc.status == CheckStatus::pass && dc.worst_quotient <= 1.0;
    d += fmt("%s%s %.4g", d.empty() ? "" : ", ", f->result.config.name.c_str(), dc.worst_quotient);
  }
  return {ok && used > 0, "worst sup/(1.02 bound): " + d};
}

Verdict neck(const Fixture& db) {
  const auto& b = *db.result.blowup;
  double worst = 0.0;
  int seen = 0;
  for (const auto& x : b.rescaled) {
    if (x.max_H2_over_K < 1e4) continue;
    ++seen;
    worst = std::max(worst, x.neck_ratio);
  }
  const bool ok = seen > 0 && worst <= 0.02 && b.type == BlowupType::type_I && db.seconds < 60.0;
  return {ok, fmt("%d snapshots beyond H^2/K=1e4, worst neck ratio %.3g, verdict %s, run %.1f s", seen, worst,
                  to_string(b.type), db.seconds)};
}

Verdict gradient(const Fixture& db) {
  const auto& g = db.estimates.gradient;
  const auto& h = db.estimates.hessian;
  const bool ok = g.crude_sup < 0.05 && h.sup < 0.5 && g.A2_growth >= 1e4;
  return {ok, fmt("crude gradient sup %.3g (< 0.05), hessian sup %.3g (< 0.5), max|A|^2 growth %.3g", g.crude_sup,
                  h.sup, g.A2_growth)};
}

Verdict kato(const std::vector<const Fixture*>& fx) {
  bool ok = true;
  int used = 0;
  std::string d;
  for (const auto* f : fx) {
    const auto& k = f->estimates.kato;
    if (k.status == CheckStatus::not_applicable) continue;
    ++used;
    const double bound = 3.0 / (f->params().n + 2) - 1e-6;
    ok = ok && k.min_ratio >= bound;
    d += fmt("%s%s %.9f (>= %.9f)", d.empty() ? "" : ", ", f->result.config.name.c_str(), k.min_ratio, bound);
  }
  return {ok && used > 0, "min |grad A|^2/|grad H|^2: " + d};
}

Verdict frontier(const Fixture& db) {
  const auto pts = convexity_frontier(db.trace(), {0.05, 0.1, 0.2});
  bool ok = pts.size() == 3;
  std::string d;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ok = ok && std::isfinite(pts[i].h_raw) && std::isfinite(pts[i].h);
    if (i > 0) ok = ok && pts[i].h <= pts[i - 1].h;
    d += fmt("%sh(%.2f)=%.4g", d.empty() ? "" : ", ", pts[i].eta, pts[i].h);
  }
  return {ok, d};
}

Verdict poincare() {
  const auto t0 = std::chrono::steady_clock::now();
  const int jobs = std::max(1u, std::thread::hardware_concurrency());
  bool ok = true;
  std::string d;
  const std::tuple<PinchingParams, double> cases[] = {
      {{4, 2, 0.5}, 0.01}, {{5, 2, 0.5}, 0.01}, {{6, 3, 0.6}, 0.005}};
  double worst_ray = 0.0;
  for (const auto& [p, eta] : cases) {
    const auto c = min_ratio(p, eta, 200, 1, jobs);
    ok = ok && c.gamma_hat > 0.0 && c.feasible && in_U(c.minimizer, p, eta);
    d += fmt("gamma(%d,%d)=%.3g ", p.n, p.m, c.gamma_hat);
    for (const auto& s : clifford_ray_witness(p, eta))
      if (s.t == 1e3) worst_ray = std::max(worst_ray, s.ratio);
  }
  ok = ok && worst_ray < 1e-12;
  int checked = 0;
  bool gap = true;
  for (int n = 3; n <= 8; ++n)
    for (int m = 1; m <= (n + 1) / 2; ++m)
      for (double alpha : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const PinchingParams p{n, m, alpha};
        if (!admissible(p)) continue;
        const double top = 1.0 / (n - m + alpha) - 1.0 / (n - m + 1);
        for (double frac : {0.01, 0.5, 0.99}) {
          gap = gap && multiplicity_gap_check(p, frac * top).pass;
          ++checked;
        }
      }
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  ok = ok && gap && checked > 0 && sec < 120.0;
  return {ok, d + fmt("ray ratio at t=1e3 %.3g, gap %s on %d parameter sets, %.1f s", worst_ray,
                      gap ? "holds" : "fails", checked, sec)};
}

// Three unregridded snapshots at a small Courant number.
FlowTrace short_trace(const ShapeDescriptor& sh, const SymmetryType& sym, int N) {
  FlowState st = init_profile(sh, sym, PinchingParams{sym.n(), 2, 0.5, 1.0, 1e3, 1e4}, N);
  FlowTrace tr;
  tr.source = "equivariant";
  tr.sym = st.sym;
  tr.K = st.K;
  tr.has_profile = tr.has_derivatives = tr.has_area = true;
  tr.snapshots.push_back(take_snapshot(st, 0, false));
  StepPolicy pol;
  pol.c_cur = 1e-5;
  pol.regrid_drift = 1e300;
  for (int k = 1; k <= 2; ++k) {
    const auto r = step(st, pol, 1e9);
    tr.snapshots.push_back(take_snapshot(st, k, r.regridded));
  }
  return tr;
}

Verdict residual_order() {
  ShapeDescriptor db;
  db.kind = ShapeKind::dumbbell;
  ShapeDescriptor band;
  band.kind = ShapeKind::clifford_band;
  band.phi0 = 0.3;
  band.amplitude = 0.03;
  const PinchingParams p{4, 2, 0.5, 1.0, 1e3, 1e4};
  bool ok = true;
  std::string d;
  for (auto [name, sh, sym] : {std::tuple{"dumbbell", db, SymmetryType{1, 4}},
                               std::tuple{"band", band, SymmetryType{2, 3}}}) {
    const auto coarse = residual_f_eta(short_trace(sh, sym, 256), p, 1, 0.01);
    const auto fine = residual_f_eta(short_trace(sh, sym, 512), p, 1, 0.01);
    const double q = coarse.applicable && fine.applicable ? coarse.max_abs / fine.max_abs : 0.0;
    ok = ok && q >= 3.5;
    d += fmt("%s%s %.3g (order %.2f)", d.empty() ? "" : ", ", name, q, std::log2(q));
  }
  return {ok, "residual reduction under grid doubling: " + d};
}

Verdict time_bound(const std::vector<const Fixture*>& fx) {
  bool ok = true;
  int used = 0;
  std::string d;
  for (const auto* f : fx) {
    if (!f->in_class()) continue;
    const auto& tb = f->estimates.time_bound;
    if (!tb.singular) continue;
    ++used;
    ok = ok && tb.lhs >= tb.rhs;
    d += fmt("%s%s %.4g >= %.4g", d.empty() ? "" : ", ", f->result.config.name.c_str(), tb.lhs, tb.rhs);
  }
  return {ok && used > 0, "e^{2nKT} vs 1+2n/Lambda0: " + d};
}

Verdict sphere_signature(const Fixture& sphere) {
  const auto& b = *sphere.result.blowup;
  const double v = b.functional.empty() ? NAN : b.functional.back();
  return {std::abs(v - 0.5) <= 0.025, fmt("final (T-t)max|A|^2 = %.5g", v)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* title, const std::function<Verdict()>& f) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      v = f();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s: %s [%.1f s]\n", v.pass ? "PASS" : "FAIL", id, title, v.detail.c_str(), sec);
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  };

  report(1, "clifford identity", clifford_identity);
  report(2, "sphere extinction", sphere_extinction);

  const Fixture db = fixture("dumbbell_neckpinch");
  const Fixture band = fixture("perturbed_band");
  const Fixture sphere = fixture("sphere_extinction");
  const std::vector<const Fixture*> all{&db, &band, &sphere};

  report(3, "pinching preservation", [&] { return preservation(db, band); });
  report(4, "decay", [&] { return decay(all); });
  report(5, "cylindrical sharpness at the neck", [&] { return neck(db); });
  report(6, "gradient and hessian bounds", [&] { return gradient(db); });
  report(7, "kato inequality", [&] { return kato(all); });
  report(8, "convexity frontier", [&] { return frontier(db); });
  report(9, "poincare verifier", poincare);
  report(10, "residual order", residual_order);
  report(11, "existence-time bound", [&] { return time_bound(all); });
  report(12, "type-I sphere signature", [&] { return sphere_signature(sphere); });
  return failures == 0 ? 0 : 1;
}
