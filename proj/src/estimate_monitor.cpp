#include "pinchflow/estimate_monitor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pinchflow/error.hpp"

namespace pinchflow {

const char* to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::not_applicable: return "not_applicable";
  }
  return "?";
}

ClassCBounds class_c_bounds(const PinchingParams& p) {
  require_admissible(p);
  const int n = p.n;
  auto fill = [&](double theta_term, double& L, double& l, double& T) {
    L = 2.0 * (theta_term / (n - p.m + p.alpha) + 2.0 * (p.m - p.alpha));
    l = std::log1p(n / (n + L)) / (2.0 * n);
    T = std::log1p(2.0 * n / L) / (2.0 * n * p.K);
  };
  ClassCBounds b;
  fill(p.Theta, b.Lambda0, b.lambda0, b.T_lower);
  fill(p.Theta * p.Theta, b.Lambda0_theta_sq, b.lambda0_theta_sq, b.T_lower_theta_sq);
  return b;
}

namespace {

void require_trace(const FlowTrace& tr, const PinchingParams& params) {
  if (tr.snapshots.empty()) throw Error(ErrorCode::invalid_argument, "trace has no snapshots");
  if (params.n != tr.n()) throw Error(ErrorCode::invalid_argument, "params.n does not match the trace");
  if (std::abs(params.K - tr.K) > 1e-12 * tr.K) {
    throw Error(ErrorCode::invalid_argument, "params.K does not match the trace");
  }
  require_admissible(params);
}

void require_eta(const Coefficients& c, double eta) {
  if (!(eta > 0.0 && eta < c.eta0)) {
    std::ostringstream msg;
    msg << "eta = " << eta << " outside (0, eta0) with eta0 = " << c.eta0;
    throw RangeError(msg.str());
  }
}

// Least-squares slope of y against x.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

double trapezoid(const std::vector<double>& s, const std::vector<double>& f) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) sum += 0.5 * (f[i] + f[i + 1]) * (s[i + 1] - s[i]);
  return sum;
}

bool initially_in_class(const FlowTrace& tr, const PinchingParams& p) {
  const Snapshot& s0 = tr.snapshots.front();
  for (const auto& g : s0.geometry) {
    if (g_m_alpha(g.H, g.A_norm_sq, p.n, p.m, p.alpha, p.K) > 0.0) return false;
    if (g.H * g.H > p.Theta * p.K) return false;
  }
  if (tr.has_area && s0.sigma.size() == s0.geometry.size()) {
    std::vector<double> w(s0.geometry.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = s0.geometry[i].area_weight;
    if (trapezoid(s0.sigma, w) * std::pow(p.K, 0.5 * p.n) > p.V) return false;
  }
  return true;
}

PreservationCheck preservation(const FlowTrace& tr, const PinchingParams& p, const MonitorOptions& o) {
  PreservationCheck c;
  c.initially_in_class = initially_in_class(tr, p);
  c.max_g = -std::numeric_limits<double>::infinity();
  c.max_relative = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    const Snapshot& s = tr.snapshots[k];
    const double scale = s.max_A2() + tr.K;
    for (std::size_t i = 0; i < s.geometry.size(); ++i) {
      const auto& g = s.geometry[i];
      const double v = g_m_alpha(g.H, g.A_norm_sq, p.n, p.m, p.alpha, tr.K);
      c.max_g = std::max(c.max_g, v);
      if (v / scale > c.max_relative) {
        c.max_relative = v / scale;
        c.where = {s.t, k, i};
      }
    }
  }
  if (c.initially_in_class) {
    c.status = c.max_relative <= o.preservation_tol ? CheckStatus::pass : CheckStatus::fail;
  }
  return c;
}

DecayCheck decay(const FlowTrace& tr, const PinchingParams& p, const MonitorOptions& o) {
  const Coefficients co = coefficients(p, 0.0);
  const double K = tr.K;
  DecayCheck c;
  c.bound_exponent = -4.0 * co.delta;
  std::vector<double> kt, logs;
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    const Snapshot& s = tr.snapshots[k];
    double sup = 0.0;
    for (const auto& g : s.geometry) {
      const double f0 = std::max(f_eta_value(g.H, g.A_norm_sq, co), 0.0);
      sup = std::max(sup, f0 / W_value(g.H, co, K));
    }
    c.t.push_back(s.t);
    c.sup_ratio.push_back(sup);
    if (sup > 0.0) {
      kt.push_back(K * s.t);
      logs.push_back(std::log(sup));
    }
  }
  const double s0 = c.sup_ratio.front();
  const double t0 = c.t.front();
  for (std::size_t k = 0; k < c.t.size(); ++k) {
    c.bound.push_back(s0 * std::exp(c.bound_exponent * K * (c.t[k] - t0)));
    const double allowed = o.decay_slack * c.bound.back();
    const double q = allowed > 0.0 ? c.sup_ratio[k] / allowed : (c.sup_ratio[k] > 0.0 ? INFINITY : 0.0);
    if (k == 0 || q > c.worst_quotient) {
      c.worst_quotient = q;
      c.where = {c.t[k], k, 0};
    }
  }
  // Grid index of the worst snapshot's supremum.
  const Snapshot& ws = tr.snapshots[c.where.snapshot];
  double best = -1.0;
  for (std::size_t i = 0; i < ws.geometry.size(); ++i) {
    const auto& g = ws.geometry[i];
    const double r = std::max(f_eta_value(g.H, g.A_norm_sq, co), 0.0) / W_value(g.H, co, K);
    if (r > best) {
      best = r;
      c.where.index = i;
    }
  }
  c.fitted_exponent = slope(kt, logs);
  c.status = initially_in_class(tr, p) ? (c.worst_quotient <= 1.0 ? CheckStatus::pass : CheckStatus::fail)
                                       : CheckStatus::not_applicable;
  return c;
}

std::vector<CylindricalEntry> cylindrical(const FlowTrace& tr, const PinchingParams& p,
                                          const std::vector<double>& etas) {
  std::vector<CylindricalEntry> out;
  for (double eta : etas) {
    const Coefficients co = coefficients(p, eta);
    CylindricalEntry e;
    e.eta = eta;
    e.C_fit = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
      const Snapshot& s = tr.snapshots[k];
      const double grow = std::exp(2.0 * co.delta * tr.K * s.t);
      for (std::size_t i = 0; i < s.geometry.size(); ++i) {
        const auto& g = s.geometry[i];
        const double C = f_eta_value(g.H, g.A_norm_sq, co) * grow / tr.K;
        if (C > e.C_fit) {
          e.C_fit = C;
          e.where = {s.t, k, i};
        }
      }
    }
    e.C_eta = std::max(e.C_fit, 2.0);
    out.push_back(e);
  }
  return out;
}

bool in_window(const Snapshot& s, double t_start) { return s.t >= t_start; }

void derivative_checks(const FlowTrace& tr, const PinchingParams& p, const ClassCBounds& b,
                       const std::vector<CylindricalEntry>& cyl, EstimateReport& r) {
  if (!tr.has_derivatives) return;
  const double K = tr.K;
  const int n = p.n;
  const Coefficients co0 = coefficients(p, 0.0);
  const double t_start = b.lambda0 / K;
  GradientCheck& gc = r.gradient;
  HessianCheck& hc = r.hessian;
  gc.t_start = t_start;
  gc.min_G0 = std::numeric_limits<double>::infinity();
  for (const auto& e : cyl) gc.per_eta.push_back(GradientEntry{e.eta, 0.0, {}});

  double A2_lo = std::numeric_limits<double>::quiet_NaN(), A2_hi = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    const Snapshot& s = tr.snapshots[k];
    if (!in_window(s, t_start)) continue;
    any = true;
    if (std::isnan(A2_lo)) A2_lo = s.max_A2();
    A2_hi = std::max(A2_hi, s.max_A2());
    for (std::size_t i = 0; i < s.geometry.size(); ++i) {
      const auto& g = s.geometry[i];
      const double H2 = g.H * g.H;
      const double G0 = 2.0 * co0.C0 * K + 3.0 / (n + 2.0) * H2 - g.A_norm_sq;
      gc.min_G0 = std::min(gc.min_G0, G0 / K);
      for (std::size_t j = 0; j < cyl.size(); ++j) {
        const double Ge = 2.0 * cyl[j].C_eta * K * std::exp(-2.0 * co0.delta * K * s.t) +
                          (cyl[j].eta + 1.0 / (n - p.m + 1)) * H2 - g.A_norm_sq;
        const double v = g.grad_A_sq / (Ge * G0);
        if (v > gc.per_eta[j].sup || (Ge <= 0.0 || G0 <= 0.0)) {
          gc.per_eta[j].sup = (Ge <= 0.0 || G0 <= 0.0) ? INFINITY : v;
          gc.per_eta[j].where = {s.t, k, i};
        }
      }
      const double crude = g.grad_A_sq / (H2 * H2 + K * K);
      if (crude > gc.crude_sup) {
        gc.crude_sup = crude;
        gc.crude_where = {s.t, k, i};
      }
      const double hs = g.hess_A_sq / (H2 * H2 * H2 + K * K * K);
      if (hs > hc.sup) {
        hc.sup = hs;
        hc.where = {s.t, k, i};
      }
    }
  }
  if (!any) return;
  gc.A2_growth = A2_hi / A2_lo;
  bool finite = std::isfinite(gc.crude_sup);
  for (const auto& e : gc.per_eta) finite = finite && std::isfinite(e.sup);
  gc.status = finite ? CheckStatus::pass : CheckStatus::fail;
  hc.status = std::isfinite(hc.sup) ? CheckStatus::pass : CheckStatus::fail;
}

KatoCheck kato(const FlowTrace& tr, const MonitorOptions& o) {
  KatoCheck c;
  if (!tr.has_derivatives) return c;
  const double sharp = 3.0 / (tr.n() + 2.0);
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    const Snapshot& s = tr.snapshots[k];
    const double floor = o.kato_floor * std::pow(s.max_A2() + tr.K, 2);
    for (std::size_t i = 0; i < s.geometry.size(); ++i) {
      const auto& g = s.geometry[i];
      if (!(g.grad_H_sq > floor)) continue;
      const double r = g.grad_A_sq / g.grad_H_sq;
      if (r < c.min_ratio) {
        c.min_ratio = r;
        c.where = {s.t, k, i};
      }
    }
  }
  if (std::isinf(c.min_ratio)) return c;
  c.margin = c.min_ratio - sharp;
  c.status = c.margin >= -o.kato_tol ? CheckStatus::pass : CheckStatus::fail;
  return c;
}

TimeBoundCheck time_bound(const FlowTrace& tr, const PinchingParams& p, const ClassCBounds& b) {
  TimeBoundCheck c;
  c.bounds = b;
  const int n = p.n;
  const double K = tr.K;
  c.rhs = 1.0 + 2.0 * n / b.Lambda0;
  c.singular = std::isfinite(tr.singular_time) &&
               (tr.terminal == TerminalEvent::singularity || tr.terminal == TerminalEvent::extinction);
  if (c.singular) {
    c.T_obs = tr.singular_time;
    c.lhs = std::exp(2.0 * n * K * c.T_obs);
    c.theta_sq_holds = c.lhs >= 1.0 + 2.0 * n / b.Lambda0_theta_sq;
  } else {
    // No singularity inside the trace: the bound cannot be contradicted.
    c.T_obs = tr.snapshots.back().t;
    c.lhs = std::exp(2.0 * n * K * c.T_obs);
  }
  if (!initially_in_class(tr, p)) return c;
  c.status = (!c.singular || c.lhs >= c.rhs) ? CheckStatus::pass : CheckStatus::fail;
  return c;
}

}  // namespace

EstimateReport check_estimates(const FlowTrace& trace, const PinchingParams& params,
                               const std::vector<double>& eta_list, const MonitorOptions& opts) {
  require_trace(trace, params);
  const Coefficients c0 = coefficients(params, 0.0);
  for (double eta : eta_list) require_eta(c0, eta);
  const ClassCBounds b = class_c_bounds(params);

  EstimateReport r;
  r.preservation = preservation(trace, params, opts);
  r.decay = decay(trace, params, opts);
  r.cylindrical = cylindrical(trace, params, eta_list);
  derivative_checks(trace, params, b, r.cylindrical, r);
  r.kato = kato(trace, opts);
  r.time_bound = time_bound(trace, params, b);
  return r;
}

std::vector<double> isotonic_nonincreasing(const std::vector<double>& y) {
  struct Block {
    double sum;
    double count;
    double mean() const { return sum / count; }
  };
  std::vector<Block> blocks;
  for (double v : y) {
    blocks.push_back({v, 1.0});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() < blocks.back().mean()) {
      Block b = blocks.back();
      blocks.pop_back();
      blocks.back().sum += b.sum;
      blocks.back().count += b.count;
    }
  }
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), static_cast<std::size_t>(b.count), b.mean());
  return out;
}

std::vector<FrontierPoint> convexity_frontier(const FlowTrace& trace,
                                              const std::vector<double>& eta_grid) {
  if (trace.snapshots.empty()) throw Error(ErrorCode::invalid_argument, "trace has no snapshots");
  for (std::size_t j = 0; j < eta_grid.size(); ++j) {
    if (!(eta_grid[j] > 0.0) || (j > 0 && !(eta_grid[j] > eta_grid[j - 1]))) {
      throw Error(ErrorCode::invalid_argument, "eta_grid must be positive and strictly increasing");
    }
  }
  const double rootK = std::sqrt(trace.K);
  double H_top = 0.0;
  for (const auto& s : trace.snapshots)
    for (const auto& g : s.geometry) H_top = std::max(H_top, std::abs(g.H));

  std::vector<FrontierPoint> out;
  for (double eta : eta_grid) {
    FrontierPoint f;
    f.eta = eta;
    double worst = -1.0;
    for (std::size_t k = 0; k < trace.snapshots.size(); ++k) {
      const Snapshot& s = trace.snapshots[k];
      for (std::size_t i = 0; i < s.geometry.size(); ++i) {
        const auto& g = s.geometry[i];
        const double sign = g.H < 0.0 ? -1.0 : 1.0;
        const auto spec = spectrum_of(g, trace.sym);
        const double lam1 = sign > 0.0 ? spec.lambda_min() : -spec.values().back();
        const double absH = std::abs(g.H);
        if (lam1 < -eta * absH && absH > worst) {
          worst = absH;
          f.where = {s.t, k, i};
        }
      }
    }
    if (worst < 0.0) {
      f.h_raw = 0.0;
    } else if (worst >= H_top) {
      f.h_raw = std::numeric_limits<double>::infinity();
    } else {
      f.h_raw = worst / rootK;
    }
    out.push_back(f);
  }
  std::vector<double> raw;
  for (const auto& f : out) raw.push_back(f.h_raw);
  const auto iso = isotonic_nonincreasing(raw);
  for (std::size_t j = 0; j < out.size(); ++j) out[j].h = iso[j];
  return out;
}

namespace {

// Nonuniform three-point first and second derivatives of an even function;
// at the ends the mirror image gives f' = 0 and f'' = 2(f1 - f0)/h^2.
void even_derivatives(const std::vector<double>& s, const std::vector<double>& f,
                      std::vector<double>& d1, std::vector<double>& d2) {
  const std::size_t N = f.size();
  d1.assign(N, 0.0);
  d2.assign(N, 0.0);
  for (std::size_t i = 1; i + 1 < N; ++i) {
    const double hm = s[i] - s[i - 1], hp = s[i + 1] - s[i];
    d1[i] = (-hp / (hm * (hm + hp))) * f[i - 1] + ((hp - hm) / (hm * hp)) * f[i] +
            (hm / (hp * (hm + hp))) * f[i + 1];
    d2[i] = 2.0 * (f[i - 1] / (hm * (hm + hp)) - f[i] / (hm * hp) + f[i + 1] / (hp * (hm + hp)));
  }
  const double h0 = s[1] - s[0], h1 = s[N - 1] - s[N - 2];
  d2[0] = 2.0 * (f[1] - f[0]) / (h0 * h0);
  d2[N - 1] = 2.0 * (f[N - 2] - f[N - 1]) / (h1 * h1);
}

std::vector<double> first_derivative(const std::vector<double>& s, const std::vector<double>& f) {
  std::vector<double> d1, d2;
  even_derivatives(s, f, d1, d2);
  return d1;
}

}  // namespace

ResidualField residual_f_eta(const FlowTrace& trace, const PinchingParams& params,
                             std::size_t t_index, double eta) {
  require_trace(trace, params);
  const Coefficients co = coefficients(params, 0.0);
  require_eta(co, eta);
  ResidualField out;
  const auto& S = trace.snapshots;
  if (!trace.has_profile || !trace.has_derivatives || trace.source != "equivariant") return out;
  if (t_index == 0 || t_index + 1 >= S.size()) return out;
  const Snapshot &s0 = S[t_index - 1], &s1 = S[t_index], &s2 = S[t_index + 1];
  if (s1.regridded || s2.regridded) return out;
  const std::size_t N = s1.geometry.size();
  if (N < 5 || s0.geometry.size() != N || s2.geometry.size() != N) return out;

  const int n = params.n, P = trace.sym.mult_a(), Q = trace.sym.mult_b();
  const double K = trace.K;
  const double c = 1.0 / (n - params.m + 1) + eta;
  auto f_of = [&](const Snapshot& s) {
    std::vector<double> f(N);
    for (std::size_t i = 0; i < N; ++i) f[i] = s.geometry[i].A_norm_sq - c * s.geometry[i].H * s.geometry[i].H;
    return f;
  };
  const auto F0 = f_of(s0), F1 = f_of(s1), F2 = f_of(s2);
  const double h1 = s1.t - s0.t, h2 = s2.t - s1.t;
  if (!(h1 > 0.0 && h2 > 0.0)) return out;

  std::vector<double> d1, d2;
  even_derivatives(s1.sigma, F1, d1, d2);
  std::vector<double> a(N), b(N);
  for (std::size_t i = 0; i < N; ++i) {
    a[i] = s1.profile[i][0];
    b[i] = s1.profile[i][1];
  }
  const auto da = first_derivative(s1.sigma, a);
  const auto db = first_derivative(s1.sigma, b);
  const double tol = 1e-9 / std::sqrt(K);

  out.residual.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const bool end = i == 0 || i + 1 == N;
    double lap = d2[i];
    if (end) {
      // f' = 0; the collapsing block contributes (multiplicity) f''.
      if (P > 0 && std::abs(a[i]) <= tol) lap += P * d2[i];
      if (Q > 0 && std::abs(b[i]) <= tol) lap += Q * d2[i];
    } else {
      if (P > 0) lap += P * da[i] / a[i] * d1[i];
      if (Q > 0) lap += Q * db[i] / b[i] * d1[i];
    }
    const double ft = (-h2 / (h1 * (h1 + h2))) * F0[i] + ((h2 - h1) / (h1 * h2)) * F1[i] +
                      (h1 / (h2 * (h1 + h2))) * F2[i];
    const auto& g = s1.geometry[i];
    const double rhs = 2.0 * (g.A_norm_sq + n * K) * F1[i] -
                       4.0 * n * K * (g.A_norm_sq - g.H * g.H / n) -
                       2.0 * (g.grad_A_sq - c * g.grad_H_sq);
    out.residual[i] = ft - lap - rhs;
    if (std::abs(out.residual[i]) > out.max_abs) {
      out.max_abs = std::abs(out.residual[i]);
      out.argmax = i;
    }
  }
  out.applicable = true;
  out.t = s1.t;
  out.scale = std::pow(s1.max_A2() + K, 2);
  return out;
}

LpRecord lp_decay(const FlowTrace& trace, const PinchingParams& params, double p, double sigma,
                  double eta) {
  require_trace(trace, params);
  if (!(p > 1.0)) throw Error(ErrorCode::invalid_argument, "p must exceed 1");
  if (!(sigma >= 0.0 && sigma < 1.0)) throw Error(ErrorCode::invalid_argument, "sigma must lie in [0, 1)");
  if (!trace.has_area) throw Error(ErrorCode::not_applicable, "trace carries no area weights");
  const Coefficients co = coefficients(params, eta);
  const double K = trace.K;

  LpRecord r;
  r.p = p;
  r.sigma = sigma;
  r.eta = eta;
  r.bound_rate = -co.delta * p * K;
  std::vector<double> ts, logs;
  for (const auto& s : trace.snapshots) {
    const std::size_t N = s.geometry.size();
    std::vector<double> w(N);
    const double grow = std::exp(2.0 * co.delta * K * s.t);
    for (std::size_t i = 0; i < N; ++i) {
      const auto& g = s.geometry[i];
      const double fp = std::max(grow * f_sigma_eta(g.H, g.A_norm_sq, co, K, sigma), 0.0);
      w[i] = std::pow(fp, p) * g.area_weight;
    }
    const double I = N > 1 ? trapezoid(s.sigma, w) : w[0];
    r.t.push_back(s.t);
    r.norm.push_back(I);
    r.C_min = std::max(r.C_min, I * std::exp(co.delta * p * K * s.t));
    if (I > 0.0) {
      ts.push_back(s.t);
      logs.push_back(std::log(I));
    }
  }
  r.fitted_rate = slope(ts, logs);
  r.vacuous = ts.empty();
  // The constant is pinned by t = 0; the series must stay under it.
  r.satisfied = r.vacuous || r.C_min <= 1.02 * r.norm.front();
  return r;
}

FlowTrace rescaled_trace(const FlowTrace& trace, double c) {
  if (!(c > 0.0)) throw Error(ErrorCode::invalid_argument, "scale factor must be positive");
  FlowTrace out = trace;
  const int n = trace.n();
  out.K = trace.K * c * c;
  out.singular_time = trace.singular_time / (c * c);
  out.terminal_time = trace.terminal_time / (c * c);
  for (auto& s : out.snapshots) {
    s.t /= c * c;
    for (auto& x : s.profile)
      for (auto& v : x) v /= c;
    for (auto& v : s.sigma) v /= c;
    for (auto& g : s.geometry) {
      g.kappa *= c;
      g.lam_a *= c;
      g.lam_b *= c;
      g.H *= c;
      g.A_norm_sq *= c * c;
      g.grad_A_sq *= std::pow(c, 4);
      g.grad_H_sq *= std::pow(c, 4);
      g.hess_A_sq *= std::pow(c, 6);
      g.area_weight *= std::pow(c, -(n - 1));
    }
  }
  return out;
}

}  // namespace pinchflow
