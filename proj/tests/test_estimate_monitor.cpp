#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pinchflow/equivariant_flow.hpp"
#include "pinchflow/error.hpp"
#include "pinchflow/estimate_monitor.hpp"
#include "pinchflow/homogeneous_flows.hpp"

using namespace pinchflow;
using std::numbers::pi;

namespace {

const PinchingParams kDumbbellParams{4, 2, 0.5, 1.0, 2.0, 200.0};

const EquivariantRun& dumbbell_run() {
  static const EquivariantRun r = [] {
    EquivariantScenario sc;
    sc.shape.kind = ShapeKind::dumbbell;
    sc.sym = {1, 4};
    sc.params = kDumbbellParams;
    sc.N = 512;
    return run(sc);
  }();
  return r;
}

FlowTrace single_snapshot(const FlowState& st) {
  FlowTrace tr;
  tr.source = "equivariant";
  tr.sym = st.sym;
  tr.K = st.K;
  tr.has_profile = tr.has_derivatives = tr.has_area = true;
  tr.snapshots.push_back(take_snapshot(st, 0, false));
  return tr;
}

// Three snapshots from unregridded steps at a small Courant number, so the
// residual is dominated by the spatial discretization.
FlowTrace short_trace(const ShapeDescriptor& sh, const SymmetryType& sym, int N, double c_cur) {
  FlowState st = init_profile(sh, sym, PinchingParams{sym.n(), 2, 0.5, 1.0, 1e3, 1e4}, N);
  FlowTrace tr = single_snapshot(st);
  StepPolicy pol;
  pol.c_cur = c_cur;
  pol.regrid_drift = 1e300;
  for (int k = 1; k <= 2; ++k) {
    const auto r = step(st, pol, 1e9);
    tr.snapshots.push_back(take_snapshot(st, k, r.regridded));
  }
  return tr;
}

}  // namespace

TEST_CASE("class C bounds") {
  PinchingParams p{4, 2, 0.5, 1.0, 2.0, 200.0};
  const auto b = class_c_bounds(p);
  CHECK(b.Lambda0 == doctest::Approx(2.0 * (200.0 / 2.5 + 3.0)));
  CHECK(b.Lambda0_theta_sq == doctest::Approx(2.0 * (4e4 / 2.5 + 3.0)));
  CHECK(std::exp(2.0 * 4 * b.lambda0) == doctest::Approx(1.0 + 4.0 / (4.0 + b.Lambda0)).epsilon(1e-15));
  CHECK(b.T_lower == doctest::Approx(std::log(1.0 + 8.0 / b.Lambda0) / 8.0).epsilon(1e-14));
  // The guaranteed existence time exceeds the gradient window's start.
  for (double K : {1.0, 4.0}) {
    p.K = K;
    const auto bk = class_c_bounds(p);
    CHECK(bk.T_lower > bk.lambda0 / K);
    CHECK(bk.T_lower_theta_sq > bk.lambda0_theta_sq / K);
  }
}

TEST_CASE("ancient hyperparallel: nothing to decay, derivative checks not applicable") {
  PinchingParams p{4, 2, 0.5, 1.0, 1e3, 1e4};
  const auto tr = ancient_hyperparallel(p, -3.0);
  const auto rep = check_estimates(tr, p, {0.01});
  for (double s : rep.decay.sup_ratio) CHECK(s <= 0.0);
  CHECK(rep.decay.status == CheckStatus::pass);
  CHECK(rep.gradient.status == CheckStatus::not_applicable);
  CHECK(rep.hessian.status == CheckStatus::not_applicable);
  CHECK(rep.kato.status == CheckStatus::not_applicable);
  CHECK(rep.preservation.status == CheckStatus::pass);

  // lp_decay needs area weights; the ODE trace has none.
  CHECK_THROWS_AS(lp_decay(tr, p, 10.0, 0.05, 0.01), Error);
  FlowTrace with_area = tr;
  with_area.has_area = true;
  for (auto& s : with_area.snapshots) s.geometry[0].area_weight = 1.0;
  const auto lp = lp_decay(with_area, p, 10.0, 0.05, 0.01);
  CHECK(lp.vacuous);
  CHECK(lp.satisfied);
}

TEST_CASE("equator: every supremum vanishes") {
  PinchingParams p{4, 2, 0.5, 1.0, 1e3, 1e4};
  ShapeDescriptor sh;
  sh.rho0 = pi / 2;
  EquivariantScenario sc;
  sc.shape = sh;
  sc.sym = {1, 4};
  sc.params = p;
  sc.N = 128;
  sc.horizon = 0.05;
  const auto r = run(sc);
  const auto rep = check_estimates(r.trace, p, {0.01, 0.02});
  for (double s : rep.decay.sup_ratio) CHECK(s < 1e-20);
  CHECK(rep.gradient.crude_sup < 1e-20);
  CHECK(rep.hessian.sup < 1e-20);
  CHECK(rep.time_bound.status == CheckStatus::pass);
  CHECK_FALSE(rep.time_bound.singular);

  const auto res = residual_f_eta(r.trace, p, 1, 0.01);
  REQUIRE(res.applicable);
  CHECK(res.max_abs < 1e-20);
}

TEST_CASE("dumbbell fixture: preservation, decay, Kato, existence time") {
  const auto& r = dumbbell_run();
  REQUIRE(r.initial_class.in_class);
  REQUIRE(r.trace.terminal == TerminalEvent::singularity);
  const auto rep = check_estimates(r.trace, kDumbbellParams, {0.005, 0.01, 0.02});

  CHECK(rep.preservation.status == CheckStatus::pass);
  CHECK(rep.preservation.max_relative <= 1e-3);
  CHECK(rep.decay.status == CheckStatus::pass);
  CHECK(rep.decay.worst_quotient <= 1.0);
  CHECK(rep.kato.status == CheckStatus::pass);
  CHECK(rep.kato.margin >= -1e-6);
  CHECK(rep.time_bound.status == CheckStatus::pass);
  CHECK(rep.time_bound.singular);
  CHECK(rep.time_bound.lhs >= rep.time_bound.rhs);

  // Smallest C_eta is nonincreasing in eta, and G_eta stays positive.
  for (std::size_t j = 1; j < rep.cylindrical.size(); ++j)
    CHECK(rep.cylindrical[j].C_fit <= rep.cylindrical[j - 1].C_fit);
  for (const auto& c : rep.cylindrical) CHECK(c.C_eta >= 2.0);
  CHECK(rep.gradient.min_G0 > 0.0);
}

TEST_CASE("dumbbell fixture: derivative ratios stay bounded through the blow-up") {
  const auto& r = dumbbell_run();
  const auto rep = check_estimates(r.trace, kDumbbellParams, {0.005, 0.01, 0.02});
  REQUIRE(rep.gradient.status == CheckStatus::pass);
  CHECK(rep.gradient.A2_growth >= 1e4);
  CHECK(rep.gradient.t_start > 0.0);
  CHECK(rep.gradient.crude_sup < 0.05);
  CHECK(rep.hessian.sup < 0.5);
  for (const auto& e : rep.gradient.per_eta) CHECK(std::isfinite(e.sup));
  // The extremes are not attained at the final, most singular snapshot.
  CHECK(rep.gradient.crude_where.snapshot + 1 < r.trace.snapshots.size());
}

TEST_CASE("dumbbell fixture: convexity frontier") {
  const auto& r = dumbbell_run();
  const auto fr = convexity_frontier(r.trace, {0.002, 0.005, 0.01, 0.05, 0.1, 0.2});
  for (const auto& f : fr) {
    if (f.eta >= 0.05) CHECK(std::isfinite(f.h));
  }
  CHECK(std::isinf(fr.front().h));  // the neck itself is slightly nonconvex
  for (std::size_t j = 1; j < fr.size(); ++j) CHECK(fr[j].h <= fr[j - 1].h);
}

TEST_CASE("dumbbell fixture: L^p decay with sigma = l p^(-1/2)") {
  const auto& r = dumbbell_run();
  const double ell = 0.158;  // calibrated once: p = 10, sigma = 0.05
  for (double p : {5.0, 10.0, 20.0}) {
    const auto lp = lp_decay(r.trace, kDumbbellParams, p, ell / std::sqrt(p), 0.01);
    CHECK_FALSE(lp.vacuous);
    CHECK(lp.satisfied);
    CHECK(lp.fitted_rate < lp.bound_rate);
  }
}

TEST_CASE("reports are scale invariant") {
  const auto& r = dumbbell_run();
  const std::vector<double> etas{0.005, 0.01, 0.02};
  const auto a = check_estimates(r.trace, kDumbbellParams, etas);
  const double c = 2.0;
  PinchingParams pc = kDumbbellParams;
  pc.K *= c * c;
  const FlowTrace scaled = rescaled_trace(r.trace, c);
  const auto b = check_estimates(scaled, pc, etas);
  auto same = [](double x, double y) { return std::abs(x - y) <= 1e-8 * std::max(std::abs(x), 1e-300); };
  CHECK(same(a.preservation.max_relative, b.preservation.max_relative));
  CHECK(same(a.decay.worst_quotient, b.decay.worst_quotient));
  CHECK(same(a.decay.fitted_exponent, b.decay.fitted_exponent));
  for (std::size_t j = 0; j < etas.size(); ++j) {
    CHECK(same(a.cylindrical[j].C_fit, b.cylindrical[j].C_fit));
    CHECK(same(a.gradient.per_eta[j].sup, b.gradient.per_eta[j].sup));
  }
  CHECK(same(a.gradient.crude_sup, b.gradient.crude_sup));
  CHECK(same(a.hessian.sup, b.hessian.sup));
  CHECK(same(a.kato.min_ratio, b.kato.min_ratio));
  CHECK(same(a.time_bound.lhs, b.time_bound.lhs));

  const auto fa = convexity_frontier(r.trace, {0.01, 0.05});
  const auto fb = convexity_frontier(scaled, {0.01, 0.05});
  for (std::size_t j = 0; j < fa.size(); ++j) CHECK(same(fa[j].h, fb[j].h));

  const auto la = lp_decay(r.trace, kDumbbellParams, 10.0, 0.05, 0.01);
  const auto lb = lp_decay(scaled, pc, 10.0, 0.05, 0.01);
  CHECK(same(la.fitted_rate / la.bound_rate, lb.fitted_rate / lb.bound_rate));
  CHECK(la.satisfied == lb.satisfied);
}

TEST_CASE("subsampled traces never exceed the full-trace extremes") {
  const auto& r = dumbbell_run();
  const auto full = check_estimates(r.trace, kDumbbellParams, {0.01});
  for (std::size_t stride : {2u, 3u, 7u}) {
    FlowTrace sub = r.trace;
    sub.snapshots.clear();
    for (std::size_t k = 0; k < r.trace.snapshots.size(); k += stride) sub.snapshots.push_back(r.trace.snapshots[k]);
    const auto s = check_estimates(sub, kDumbbellParams, {0.01});
    CHECK(s.preservation.max_relative <= full.preservation.max_relative);
    CHECK(s.decay.worst_quotient <= full.decay.worst_quotient);
    CHECK(s.cylindrical[0].C_fit <= full.cylindrical[0].C_fit);
    CHECK(s.gradient.crude_sup <= full.gradient.crude_sup);
    CHECK(s.hessian.sup <= full.hessian.sup);
    CHECK(s.kato.min_ratio >= full.kato.min_ratio);
  }
}

TEST_CASE("convexity frontier on convex and on product data") {
  PinchingParams p{4, 2, 0.5, 1.0, 1e3, 1e4};
  ShapeDescriptor sphere;
  sphere.rho0 = 0.8;
  EquivariantScenario sc;
  sc.shape = sphere;
  sc.sym = {1, 4};
  sc.params = p;
  sc.N = 128;
  const auto r = run(sc);
  for (const auto& f : convexity_frontier(r.trace, {0.01, 0.1, 0.5})) CHECK(f.h == 0.0);

  // Zero-amplitude band: lambda_1/|H| is constant, so h_eta jumps from
  // infinity to zero at eta = -lambda_1/|H|.
  ShapeDescriptor band;
  band.kind = ShapeKind::clifford_band;
  band.phi0 = 0.4;
  const FlowTrace tr = single_snapshot(init_profile(band, SymmetryType{2, 3}, p, 256));
  const auto& g = tr.snapshots[0].geometry[100];
  const auto spec = spectrum_of(g, tr.sym);
  const double lam1 = g.H >= 0.0 ? spec.lambda_min() : -spec.values().back();
  const double eta_star = -lam1 / std::abs(g.H);
  REQUIRE(eta_star > 0.0);
  const auto fr = convexity_frontier(tr, {0.99 * eta_star, 1.01 * eta_star});
  CHECK(std::isinf(fr[0].h_raw));
  CHECK(fr[1].h_raw == 0.0);
}

TEST_CASE("isotonic cleanup") {
  const auto y = isotonic_nonincreasing({5.0, 3.0, 4.0, 1.0, 2.0, 0.0});
  const std::vector<double> want{5.0, 3.5, 3.5, 1.5, 1.5, 0.0};
  REQUIRE(y.size() == want.size());
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(y[i] == doctest::Approx(want[i]));
  const auto z = isotonic_nonincreasing({INFINITY, 2.0, 3.0});
  CHECK(std::isinf(z[0]));
  CHECK(z[1] == doctest::Approx(2.5));
  CHECK(z[2] == doctest::Approx(2.5));
}

TEST_CASE("evolution residual converges at second order") {
  ShapeDescriptor db;
  db.kind = ShapeKind::dumbbell;
  ShapeDescriptor band;
  band.kind = ShapeKind::clifford_band;
  band.phi0 = 0.3;
  band.amplitude = 0.03;
  const PinchingParams p{4, 2, 0.5, 1.0, 1e3, 1e4};
  for (auto [sh, sym] : {std::pair{db, SymmetryType{1, 4}}, std::pair{band, SymmetryType{2, 3}}}) {
    const auto coarse = residual_f_eta(short_trace(sh, sym, 256, 1e-5), p, 1, 0.01);
    const auto fine = residual_f_eta(short_trace(sh, sym, 512, 1e-5), p, 1, 0.01);
    REQUIRE(coarse.applicable);
    REQUIRE(fine.applicable);
    CHECK(coarse.max_abs / fine.max_abs >= 3.5);
  }
}

TEST_CASE("evolution residual on the shrinking sphere") {
  ShapeDescriptor sh;
  sh.rho0 = 1.0;
  const auto res = residual_f_eta(short_trace(sh, SymmetryType{1, 4}, 1024, 1e-4),
                                  PinchingParams{4, 2, 0.5, 1.0, 1e3, 1e4}, 1, 0.01);
  REQUIRE(res.applicable);
  CHECK(res.max_abs < 1e-3 * res.scale);
}

TEST_CASE("residual is not applicable across regrids or on ODE traces") {
  PinchingParams p{4, 2, 0.5, 1.0, 1e3, 1e4};
  auto ode = hyperparallel_flow(1.0, p, 0.1);
  CHECK_FALSE(residual_f_eta(ode.trace, p, 1, 0.01).applicable);
  ShapeDescriptor sh;
  sh.rho0 = 1.0;
  FlowTrace tr = short_trace(sh, SymmetryType{1, 4}, 64, 1e-3);
  tr.snapshots[2].regridded = true;
  CHECK_FALSE(residual_f_eta(tr, p, 1, 0.01).applicable);
  CHECK_FALSE(residual_f_eta(tr, p, 0, 0.01).applicable);
}

TEST_CASE("argument validation") {
  const auto& r = dumbbell_run();
  const double eta0 = eta0_closed_form(4, 2, 0.5);
  CHECK_THROWS_AS(check_estimates(r.trace, kDumbbellParams, {eta0}), RangeError);
  CHECK_THROWS_AS(check_estimates(r.trace, kDumbbellParams, {0.0}), RangeError);
  PinchingParams wrong = kDumbbellParams;
  wrong.n = 5;
  wrong.m = 2;
  CHECK_THROWS_AS(check_estimates(r.trace, wrong, {0.01}), Error);
  CHECK_THROWS_AS(convexity_frontier(r.trace, {0.1, 0.05}), Error);
  CHECK_THROWS_AS(lp_decay(r.trace, kDumbbellParams, 1.0, 0.0, 0.01), Error);
}

TEST_CASE("out-of-class data leaves the class-dependent verdicts not applicable") {
  PinchingParams p{4, 2, 0.5, 1.0, 1e3, 1e4};
  ShapeDescriptor band;
  band.kind = ShapeKind::clifford_band;
  band.phi0 = 1.2;  // fat S^1 factor: g_{m,alpha} > 0
  const FlowTrace tr = single_snapshot(init_profile(band, SymmetryType{2, 3}, p, 128));
  const auto rep = check_estimates(tr, p, {0.01});
  CHECK(rep.preservation.max_g > 0.0);
  CHECK(rep.preservation.status == CheckStatus::not_applicable);
  CHECK(rep.decay.status == CheckStatus::not_applicable);
  CHECK(rep.time_bound.status == CheckStatus::not_applicable);
}
