#include "pinchflow/homogeneous_flows.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include <boost/numeric/odeint.hpp>

#include "pinchflow/error.hpp"

namespace pinchflow {

namespace {

namespace odeint = boost::numeric::odeint;
using State1 = std::array<double, 1>;

constexpr double kPi = std::numbers::pi;

struct ScalarProblem {
  std::function<double(double)> rate;
  /// distance to the collapse boundary in the variable's own units
  std::function<double(double)> distance;
  std::function<PointGeometry(double)> geometry;
  std::function<Vec3(double)> position;
};

enum class ScalarStop { horizon, collapse };

struct ScalarResult {
  ScalarStop stop = ScalarStop::horizon;
  double x = 0.0;
  double t = 0.0;
};

Snapshot make_snapshot(const ScalarProblem& prob, double x, double t, long step) {
  Snapshot s;
  s.t = t;
  s.step = step;
  s.profile = {prob.position(x)};
  s.sigma = {0.0};
  s.geometry = {prob.geometry(x)};
  return s;
}

// Adaptive Dormand-Prince integration of x' = rate(x) from t0 towards t_end
// (either direction). Stops early once distance(x) < switch_distance.
ScalarResult integrate_scalar(const ScalarProblem& prob, double x0, double t0, double t_end,
                              double switch_distance, const OdeOptions& o,
                              std::vector<Snapshot>& out) {
  const double dir = t_end >= t0 ? 1.0 : -1.0;
  const double span = std::abs(t_end - t0);
  const double snap_dt = o.snapshot_dt > 0.0 ? o.snapshot_dt : span / 200.0;

  auto sys = [&](const State1& x, State1& dxdt, double) { dxdt[0] = prob.rate(x[0]); };
  auto stepper = odeint::make_controlled(o.atol, o.rtol, odeint::runge_kutta_dopri5<State1>());

  State1 x{x0};
  double t = t0;
  long step = 0;
  out.push_back(make_snapshot(prob, x[0], t, step));
  double last_A2 = out.back().geometry[0].A_norm_sq;
  double last_t = t;

  double dt = dir * std::min(span, 1e-3 * std::max(span, 1e-12));
  while (dir * (t_end - t) > 0.0) {
    if (prob.distance(x[0]) < switch_distance) {
      return {ScalarStop::collapse, x[0], t};
    }
    const double rate = prob.rate(x[0]);
    double cap = span;
    if (rate != 0.0) cap = 0.05 * prob.distance(x[0]) / std::abs(rate);
    if (std::abs(dt) > cap) dt = dir * cap;
    if (dir * (t + dt - t_end) > 0.0) dt = t_end - t;

    State1 trial = x;
    double t_trial = t;
    double dt_trial = dt;
    const auto res = stepper.try_step(sys, trial, t_trial, dt_trial);
    if (res == odeint::fail) {
      dt = dt_trial;
      if (std::abs(dt) < 1e-300) throw NumericalError("scalar ODE step size underflow");
      continue;
    }
    if (!(prob.distance(trial[0]) > 0.0) || !std::isfinite(trial[0])) {
      dt *= 0.25;
      continue;
    }
    x = trial;
    t = t_trial;
    dt = dt_trial;
    ++step;

    const PointGeometry g = prob.geometry(x[0]);
    const double A2 = g.A_norm_sq;
    const bool grew = A2 > 0.0 && last_A2 > 0.0 &&
                      (A2 >= o.growth_factor * last_A2 || A2 * o.growth_factor <= last_A2);
    const bool first_nonzero = (A2 > 0.0) != (last_A2 > 0.0);
    if (grew || first_nonzero || std::abs(t - last_t) >= snap_dt) {
      out.push_back(make_snapshot(prob, x[0], t, step));
      last_A2 = A2;
      last_t = t;
    }
  }
  if (out.back().t != t) out.push_back(make_snapshot(prob, x[0], t, step));
  return {ScalarStop::horizon, x[0], t};
}

bool on_equator(double K, double rho) {
  return std::abs(std::sqrt(K) * rho - 0.5 * kPi) <= 4.0 * std::numeric_limits<double>::epsilon();
}

ScalarProblem hyperparallel_problem(int n, double K) {
  const double sk = std::sqrt(K);
  const double R = 1.0 / sk;
  ScalarProblem prob;
  prob.rate = [=](double rho) {
    if (on_equator(K, rho)) return 0.0;
    return -n * sk / std::tan(sk * rho);
  };
  prob.distance = [=](double rho) { return std::min(rho, kPi / sk - rho); };
  prob.geometry = [=](double rho) { return hyperparallel_geometry(n, K, rho); };
  prob.position = [=](double rho) {
    return Vec3{R * std::sin(sk * rho), 0.0, R * std::cos(sk * rho)};
  };
  return prob;
}

}  // namespace

PointGeometry hyperparallel_geometry(int n, double K, double rho) {
  const double sk = std::sqrt(K);
  const double c = on_equator(K, rho) ? 0.0 : sk / std::tan(sk * rho);
  PointGeometry g;
  g.kappa = c;
  g.lam_a = c;
  g.lam_b = c;
  g.H = n * c;
  g.A_norm_sq = n * c * c;
  return g;
}

double hyperparallel_rho(int n, double K, double rho0, double t) {
  const double sk = std::sqrt(K);
  if (on_equator(K, rho0)) return rho0;
  const double c = std::cos(sk * rho0) * std::exp(n * K * t);
  if (std::abs(c) >= 1.0) return c > 0.0 ? 0.0 : kPi / sk;
  return std::acos(c) / sk;
}

double hyperparallel_extinction_time(int n, double K, double rho0) {
  if (on_equator(K, rho0)) return std::numeric_limits<double>::infinity();
  return std::log(1.0 / std::abs(std::cos(std::sqrt(K) * rho0))) / (n * K);
}

HyperparallelRun hyperparallel_flow(double rho0, const PinchingParams& params, double horizon,
                                    const OdeOptions& opts) {
  const int n = params.n;
  const double K = params.K;
  const double sk = std::sqrt(K);
  if (n < 2 || !(K > 0.0)) throw Error(ErrorCode::invalid_argument, "need n >= 2 and K > 0");
  if (!(rho0 > 0.0 && rho0 * sk < kPi)) {
    throw Error(ErrorCode::invalid_argument, "rho0 must lie in (0, pi/sqrt(K))");
  }
  if (!(horizon > 0.0)) throw Error(ErrorCode::invalid_argument, "horizon must be positive");

  HyperparallelRun run;
  run.trace.source = "hyperparallel";
  run.trace.sym = SymmetryType{1, n};
  run.trace.K = K;

  const ScalarProblem prob = hyperparallel_problem(n, K);
  const ScalarResult res = integrate_scalar(prob, rho0, 0.0, horizon,
                                            opts.asymptotic_switch / sk, opts,
                                            run.trace.snapshots);
  if (res.stop == ScalarStop::collapse) {
    // Closed-form tail: cos(sqrt K rho) grows like e^{nKt} until |cos| = 1.
    const double remaining =
        std::log(1.0 / std::abs(std::cos(sk * res.x))) / (n * K);
    run.extinct = true;
    run.extinction_time = res.t + remaining;
    run.trace.terminal = TerminalEvent::extinction;
    run.trace.terminal_time = res.t;
    run.trace.singular_time = run.extinction_time;
    if (run.trace.snapshots.back().t != res.t) {
      Snapshot s = make_snapshot(prob, res.x, res.t, run.trace.snapshots.back().step + 1);
      run.trace.snapshots.push_back(std::move(s));
    }
  } else {
    run.trace.terminal = TerminalEvent::horizon;
    run.trace.terminal_time = res.t;
  }
  return run;
}

FlowTrace ancient_hyperparallel(const PinchingParams& params, double t_min, double offset,
                                const OdeOptions& opts) {
  if (!(t_min < 0.0)) throw Error(ErrorCode::invalid_argument, "t_min must be negative");
  if (!(offset > 0.0 && offset < 0.5 * kPi)) {
    throw Error(ErrorCode::invalid_argument, "offset must lie in (0, pi/2)");
  }
  const int n = params.n;
  const double K = params.K;
  const double sk = std::sqrt(K);
  const double rho0 = (0.5 * kPi - offset) / sk;

  FlowTrace trace;
  trace.source = "hyperparallel";
  trace.sym = SymmetryType{1, n};
  trace.K = K;

  ScalarProblem prob = hyperparallel_problem(n, K);
  // Backwards the radius approaches the equator; terminate cleanly there.
  const double eq = 0.5 * kPi / sk;
  const double tol = 1e-12 / sk;
  prob.distance = [=](double rho) { return std::max(eq - rho, 0.0); };
  std::vector<Snapshot> snaps;
  const ScalarResult res = integrate_scalar(prob, rho0, 0.0, t_min, tol, opts, snaps);
  std::reverse(snaps.begin(), snaps.end());
  trace.snapshots = std::move(snaps);
  trace.terminal = res.stop == ScalarStop::collapse ? TerminalEvent::degenerate
                                                    : TerminalEvent::horizon;
  trace.terminal_time = res.t;
  trace.message = res.stop == ScalarStop::collapse ? "reached the equator" : "";
  return trace;
}

double clifford_H(int n, int m, double phi, double K) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  return std::sqrt(K) * ((n - m) * c * c - m * s * s) / (c * s);
}

double clifford_phi_rate(int n, int m, double phi, double K) {
  return -std::sqrt(K) * clifford_H(n, m, phi, K);
}

double clifford_minimal_phi(int n, int m) {
  return std::acos(std::sqrt(static_cast<double>(m) / n));
}

PointGeometry clifford_geometry(int n, int m, double K, double phi) {
  const double sk = std::sqrt(K);
  const double r = std::cos(phi);
  const double s = std::sin(phi);
  PointGeometry g;
  g.kappa = sk * r / s;
  g.lam_b = sk * r / s;
  g.lam_a = -sk * s / r;
  g.H = (n - m) * g.kappa + m * g.lam_a;
  g.A_norm_sq = (n - m) * g.kappa * g.kappa + m * g.lam_a * g.lam_a;
  return g;
}

CliffordRun clifford_flow(const PinchingParams& params, double phi0, double horizon,
                          const OdeOptions& opts) {
  return clifford_flow(params, params.m, phi0, horizon, opts);
}

CliffordRun clifford_flow(const PinchingParams& params, int split, double phi0, double horizon,
                          const OdeOptions& opts) {
  const int n = params.n;
  const int m = split;
  const double K = params.K;
  if (n < 2 || m < 1 || m >= n) throw Error(ErrorCode::invalid_argument, "torus needs 1 <= m < n");
  if (!(phi0 > 0.0 && phi0 < 0.5 * kPi)) {
    throw Error(ErrorCode::invalid_argument, "phi0 must lie in (0, pi/2)");
  }
  if (!(horizon > 0.0)) throw Error(ErrorCode::invalid_argument, "horizon must be positive");
  const double R = 1.0 / std::sqrt(K);

  CliffordRun run;
  run.trace.source = "clifford";
  run.trace.sym = SymmetryType{m + 1, n - m};
  run.trace.K = K;

  ScalarProblem prob;
  const double fixed = clifford_minimal_phi(n, m);
  const bool stationary = std::abs(phi0 - fixed) <= 4.0 * std::numeric_limits<double>::epsilon();
  prob.rate = [=](double phi) { return stationary ? 0.0 : clifford_phi_rate(n, m, phi, K); };
  prob.distance = [](double phi) { return std::min(phi, 0.5 * kPi - phi); };
  prob.geometry = [=](double phi) {
    PointGeometry g = clifford_geometry(n, m, K, phi);
    if (stationary) g.H = 0.0;
    return g;
  };
  prob.position = [=](double phi) { return Vec3{R * std::cos(phi), 0.0, R * std::sin(phi)}; };

  const ScalarResult res =
      integrate_scalar(prob, phi0, 0.0, horizon, opts.asymptotic_switch, opts, run.trace.snapshots);
  run.trace.terminal_time = res.t;
  if (res.stop == ScalarStop::collapse) {
    run.collapsed = true;
    // Leading order near a collapsing factor of dimension k: angle^2 ~ 2kK(T - t).
    const bool s_side = res.x < 0.25 * kPi;
    const double ang = s_side ? res.x : 0.5 * kPi - res.x;
    const int k = s_side ? n - m : m;
    run.collapse_time = res.t + ang * ang / (2.0 * k * K);
    run.trace.terminal = TerminalEvent::degenerate;
    run.trace.singular_time = run.collapse_time;
    run.trace.message = s_side ? "S^{n-m} factor collapsed" : "S^m factor collapsed";
  } else {
    run.trace.terminal = TerminalEvent::horizon;
  }
  return run;
}

}  // namespace pinchflow
