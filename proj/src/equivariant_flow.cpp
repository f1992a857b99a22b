#include "pinchflow/equivariant_flow.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "pinchflow/error.hpp"

namespace pinchflow {

namespace {

constexpr double kPi = std::numbers::pi;

Vec3 operator+(const Vec3& x, const Vec3& y) { return {x[0] + y[0], x[1] + y[1], x[2] + y[2]}; }
Vec3 operator-(const Vec3& x, const Vec3& y) { return {x[0] - y[0], x[1] - y[1], x[2] - y[2]}; }
Vec3 operator*(double c, const Vec3& x) { return {c * x[0], c * x[1], c * x[2]}; }
double dot(const Vec3& x, const Vec3& y) { return x[0] * y[0] + x[1] * y[1] + x[2] * y[2]; }
double norm(const Vec3& x) { return std::sqrt(dot(x, x)); }
Vec3 cross(const Vec3& x, const Vec3& y) {
  return {x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2], x[0] * y[1] - x[1] * y[0]};
}

enum class Axis { none, a, b };

// Area of the unit sphere S^k.
double sphere_area(int k) {
  return 2.0 * std::pow(kPi, 0.5 * (k + 1)) / std::tgamma(0.5 * (k + 1));
}

Axis axis_of(const Vec3& x, const SymmetryType& sym, double R) {
  const double tol = 1e-12 * R;
  const bool on_b = sym.q >= 2 && std::abs(x[1]) <= tol;
  const bool on_a = sym.p >= 2 && std::abs(x[0]) <= tol;
  if (on_a && on_b) throw NumericalError("profile endpoint reached the corner a = b = 0");
  if (on_b) return Axis::b;
  if (on_a) return Axis::a;
  return Axis::none;
}

Vec3 reflect(const Vec3& x, Axis axis) {
  if (axis == Axis::b) return {x[0], -x[1], x[2]};
  return {-x[0], x[1], x[2]};
}

// Per-point quantities that need only the three-point stencil.
struct Local {
  Vec3 T{};
  Vec3 nu{};
  double k3 = 0.0;  // curvature of the fitted circle in R^3
  double kappa = 0.0;
  double lam_a = 0.0;
  double lam_b = 0.0;
  double H = 0.0;
  double A2 = 0.0;
};

struct Endpoints {
  Axis first = Axis::none;
  Axis last = Axis::none;
};

Endpoints endpoints_of(const FlowState& s) {
  const double R = s.R();
  Endpoints e{axis_of(s.points.front(), s.sym, R), axis_of(s.points.back(), s.sym, R)};
  if (e.first == Axis::none || e.last == Axis::none) {
    throw NumericalError("profile endpoints must lie on an axis");
  }
  return e;
}

// Circle through p0, p1, p2: tangent and curvature vector at p1. Exact for
// circles, hence for every circle of the orbit-space sphere.
void circle_fit(const Vec3& p0, const Vec3& p1, const Vec3& p2, Vec3& T, Vec3& k) {
  const Vec3 u = p1 - p0;
  const Vec3 w = p2 - p1;
  const double uu = dot(u, u), ww = dot(w, w);
  T = ww * u + uu * w;
  T = (1.0 / norm(T)) * T;
  const double denom = std::sqrt(uu * ww) * norm(p2 - p0);
  k = (2.0 / denom) * cross(cross(u, w), T);
}

void local_geometry(const FlowState& s, const Endpoints& ends, std::vector<Local>& out) {
  const std::size_t N = s.points.size();
  const int P = s.sym.mult_a(), Q = s.sym.mult_b();
  out.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    const Vec3& x = s.points[i];
    Axis at = Axis::none;
    Vec3 p0, p2;
    if (i == 0) {
      at = ends.first;
      p0 = reflect(s.points[1], at);
      p2 = s.points[1];
    } else if (i + 1 == N) {
      at = ends.last;
      p0 = s.points[N - 2];
      p2 = reflect(s.points[N - 2], at);
    } else {
      p0 = s.points[i - 1];
      p2 = s.points[i + 1];
    }
    Local& L = out[i];
    Vec3 k;
    circle_fit(p0, x, p2, L.T, k);
    const Vec3 xh = (1.0 / norm(x)) * x;
    L.T = L.T - dot(L.T, xh) * xh;
    L.T = (1.0 / norm(L.T)) * L.T;
    L.nu = cross(L.T, xh);
    L.k3 = norm(k);
    L.kappa = -dot(L.nu, k);
    if (P > 0) L.lam_a = at == Axis::a ? L.kappa : L.nu[0] / x[0];
    if (Q > 0) L.lam_b = at == Axis::b ? L.kappa : L.nu[1] / x[1];
    L.H = L.kappa + P * L.lam_a + Q * L.lam_b;
    L.A2 = L.kappa * L.kappa + P * L.lam_a * L.lam_a + Q * L.lam_b * L.lam_b;
  }
}

// Arc of the circle through the segment, with curvature averaged from both
// ends.
std::vector<double> segment_lengths(const FlowState& s, const std::vector<Local>& loc) {
  const std::size_t N = s.points.size();
  std::vector<double> h(N - 1);
  for (std::size_t i = 0; i + 1 < N; ++i) {
    const double d = norm(s.points[i + 1] - s.points[i]);
    const double k = 0.5 * (loc[i].k3 + loc[i + 1].k3);
    const double x = 0.5 * k * d;
    h[i] = x < 1e-4 ? d * (1.0 + x * x / 6.0) : 2.0 * std::asin(std::min(x, 1.0)) / k;
  }
  return h;
}

enum class Parity { even, odd };

// First derivative on the nonuniform grid. Endpoint values follow from the
// reflection symmetry about the axis: zero for even functions, and the
// central difference against the mirrored value for odd ones.
std::vector<double> derivative(const std::vector<double>& f, const std::vector<double>& h,
                               Parity parity) {
  const std::size_t N = f.size();
  std::vector<double> d(N);
  for (std::size_t i = 1; i + 1 < N; ++i) {
    const double hm = h[i - 1], hp = h[i];
    d[i] = (-hp / (hm * (hm + hp))) * f[i - 1] + ((hp - hm) / (hm * hp)) * f[i] +
           (hm / (hp * (hm + hp))) * f[i + 1];
  }
  if (parity == Parity::even) {
    d[0] = 0.0;
    d[N - 1] = 0.0;
  } else {
    d[0] = (f[1] - f[0]) / h[0];
    d[N - 1] = (f[N - 1] - f[N - 2]) / h[N - 2];
  }
  return d;
}

}  // namespace

double FlowState::R() const { return 1.0 / std::sqrt(K); }

FlowState make_state(const SymmetryType& sym, double K, std::vector<Vec3> points) {
  if (sym.p < 1 || sym.q < 1 || sym.n() < 2) {
    throw Error(ErrorCode::invalid_argument, "symmetry blocks need p, q >= 1 and p + q >= 3");
  }
  if (!(K > 0.0)) throw Error(ErrorCode::invalid_argument, "K must be positive");
  if (points.size() < 5) throw Error(ErrorCode::invalid_argument, "profile needs at least 5 points");
  FlowState s;
  s.sym = sym;
  s.K = K;
  s.points = std::move(points);
  const double R = s.R();
  for (auto& x : s.points) {
    const double r = norm(x);
    if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorCode::invalid_argument, "invalid profile point");
    x = (R / r) * x;
    if ((sym.p >= 2 && x[0] < -1e-12 * R) || (sym.q >= 2 && x[1] < -1e-12 * R)) {
      throw Error(ErrorCode::invalid_argument, "profile leaves the orbit space");
    }
  }
  for (Vec3* e : {&s.points.front(), &s.points.back()}) {
    Vec3& x = *e;
    if (sym.q >= 2 && std::abs(x[1]) <= 1e-9 * R) {
      x[1] = 0.0;
    } else if (sym.p >= 2 && std::abs(x[0]) <= 1e-9 * R) {
      x[0] = 0.0;
    } else {
      throw Error(ErrorCode::invalid_argument, "profile endpoints must lie on an axis");
    }
    x = (R / norm(x)) * x;
  }
  endpoints_of(s);
  return s;
}

std::vector<double> arclength(const FlowState& state) {
  std::vector<Local> loc;
  local_geometry(state, endpoints_of(state), loc);
  const auto h = segment_lengths(state, loc);
  std::vector<double> s(state.points.size(), 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) s[i + 1] = s[i] + h[i];
  return s;
}

std::vector<PointGeometry> geometry(const FlowState& state, const GeometryOptions& opts) {
  const Endpoints ends = endpoints_of(state);
  std::vector<Local> loc;
  local_geometry(state, ends, loc);
  const std::size_t N = state.points.size();
  const int P = state.sym.mult_a(), Q = state.sym.mult_b();

  std::vector<PointGeometry> g(N);
  for (std::size_t i = 0; i < N; ++i) {
    g[i].kappa = loc[i].kappa;
    g[i].lam_a = loc[i].lam_a;
    g[i].lam_b = loc[i].lam_b;
    g[i].H = loc[i].H;
    g[i].A_norm_sq = loc[i].A2;
  }
  if (!opts.derivatives && !opts.area) return g;

  const auto h = segment_lengths(state, loc);

  if (opts.area) {
    const double wa = P > 0 ? sphere_area(P) : 1.0;
    const double wb = Q > 0 ? sphere_area(Q) : 1.0;
    for (std::size_t i = 0; i < N; ++i) {
      const Vec3& x = state.points[i];
      g[i].area_weight = wa * std::pow(std::abs(x[0]), P) * wb * std::pow(std::abs(x[1]), Q);
    }
  }
  if (!opts.derivatives) return g;

  std::vector<double> kap(N), la(N), lb(N);
  for (std::size_t i = 0; i < N; ++i) {
    kap[i] = loc[i].kappa;
    la[i] = loc[i].lam_a;
    lb[i] = loc[i].lam_b;
  }
  const auto t1 = derivative(kap, h, Parity::even);
  const auto ta = derivative(la, h, Parity::even);
  const auto tb = derivative(lb, h, Parity::even);
  const auto t1d = derivative(t1, h, Parity::odd);
  const auto tad = derivative(ta, h, Parity::odd);
  const auto tbd = derivative(tb, h, Parity::odd);

  for (std::size_t i = 0; i < N; ++i) {
    PointGeometry& G = g[i];
    G.grad_A_sq = t1[i] * t1[i] + 3.0 * P * ta[i] * ta[i] + 3.0 * Q * tb[i] * tb[i];
    const double dH = t1[i] + P * ta[i] + Q * tb[i];
    G.grad_H_sq = dH * dH;

    double hess = t1d[i] * t1d[i] + 3.0 * P * tad[i] * tad[i] + 3.0 * Q * tbd[i] * tbd[i];
    const Vec3& x = state.points[i];
    const Vec3& T = loc[i].T;
    const bool end = i == 0 || i + 1 == N;
    const Axis at = i == 0 ? ends.first : (i + 1 == N ? ends.last : Axis::none);
    // Rotational terms carry (a'/a)^2 and (b'/b)^2; on the matching axis the
    // products with the vanishing tau's are replaced by their limits.
    if (P > 0) {
      if (end && at == Axis::a) {
        const double u1 = t1d[i], ua = tad[i], ub = tbd[i];
        hess += P * (3.0 * (u1 - 2.0 * ua) * (u1 - 2.0 * ua) + (3.0 * P + 6.0) * ua * ua +
                     3.0 * Q * ub * ub);
      } else {
        const double A = T[0] / x[0];
        hess += P * A * A *
                (3.0 * (t1[i] - 2.0 * ta[i]) * (t1[i] - 2.0 * ta[i]) +
                 (3.0 * P + 6.0) * ta[i] * ta[i] + 3.0 * Q * tb[i] * tb[i]);
      }
    }
    if (Q > 0) {
      if (end && at == Axis::b) {
        const double u1 = t1d[i], ua = tad[i], ub = tbd[i];
        hess += Q * (3.0 * (u1 - 2.0 * ub) * (u1 - 2.0 * ub) + (3.0 * Q + 6.0) * ub * ub +
                     3.0 * P * ua * ua);
      } else {
        const double B = T[1] / x[1];
        hess += Q * B * B *
                (3.0 * (t1[i] - 2.0 * tb[i]) * (t1[i] - 2.0 * tb[i]) +
                 (3.0 * Q + 6.0) * tb[i] * tb[i] + 3.0 * P * ta[i] * ta[i]);
      }
    }
    G.hess_A_sq = hess;
  }
  return g;
}

double area(const FlowState& state) {
  const Endpoints ends = endpoints_of(state);
  std::vector<Local> loc;
  local_geometry(state, ends, loc);
  const auto h = segment_lengths(state, loc);
  const auto g = geometry(state, GeometryOptions{false, true});
  const std::size_t N = g.size();
  // Trapezoid rule minus its leading error term h^3 f''/12 per cell.
  std::vector<double> f(N), f2(N);
  for (std::size_t i = 0; i < N; ++i) f[i] = g[i].area_weight;
  for (std::size_t i = 1; i + 1 < N; ++i) {
    const double hm = h[i - 1], hp = h[i];
    f2[i] = 2.0 * (f[i - 1] / (hm * (hm + hp)) - f[i] / (hm * hp) + f[i + 1] / (hp * (hm + hp)));
  }
  f2[0] = f2[1];
  f2[N - 1] = f2[N - 2];
  double mu = 0.0;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    mu += 0.5 * (f[i] + f[i + 1]) * h[i] - h[i] * h[i] * h[i] * (f2[i] + f2[i + 1]) / 24.0;
  }
  return mu;
}

ClassCVerdict classify_class_C(const FlowState& state, const PinchingParams& params) {
  if (params.n != state.sym.n()) {
    throw Error(ErrorCode::invalid_argument, "params.n does not match the symmetry type");
  }
  const auto g = geometry(state, GeometryOptions{false, false});
  ClassCVerdict v;
  v.V_measured = area(state) * std::pow(state.K, 0.5 * params.n);
  v.max_g = -std::numeric_limits<double>::infinity();
  for (const auto& x : g) {
    v.Theta_measured = std::max(v.Theta_measured, x.H * x.H / state.K);
    v.max_g = std::max(v.max_g, g_m_alpha(x.H, x.A_norm_sq, params.n, params.m, params.alpha, state.K));
  }
  v.in_class = v.max_g <= 0.0 && v.V_measured <= params.V && v.Theta_measured <= params.Theta;
  return v;
}

namespace {

// Monitor w = sqrt(|A|^2 + K + mean |A|^2), smoothed; returns cell masses.
std::vector<double> cell_masses(const FlowState& s, const std::vector<Local>& loc,
                                const std::vector<double>& h) {
  const std::size_t N = loc.size();
  double len = 0.0, mean = 0.0;
  for (std::size_t i = 0; i + 1 < N; ++i) {
    len += h[i];
    mean += 0.5 * (loc[i].A2 + loc[i + 1].A2) * h[i];
  }
  mean /= len;
  std::vector<double> w(N), tmp(N);
  for (std::size_t i = 0; i < N; ++i) w[i] = std::sqrt(loc[i].A2 + s.K + mean);
  for (int pass = 0; pass < 4; ++pass) {
    tmp[0] = 0.5 * (w[0] + w[1]);
    tmp[N - 1] = 0.5 * (w[N - 1] + w[N - 2]);
    for (std::size_t i = 1; i + 1 < N; ++i) tmp[i] = 0.25 * (w[i - 1] + 2.0 * w[i] + w[i + 1]);
    w.swap(tmp);
  }
  std::vector<double> m(N - 1);
  for (std::size_t i = 0; i + 1 < N; ++i) m[i] = 0.5 * (w[i] + w[i + 1]) * h[i];
  return m;
}

double drift_of(const std::vector<double>& m) {
  double total = 0.0;
  for (double x : m) total += x;
  const double target = total / static_cast<double>(m.size());
  double worst = 0.0;
  for (double x : m) worst = std::max(worst, std::abs(x / target - 1.0));
  return worst;
}

// Fractional positions (cell index + local coordinate) equidistributing m.
std::vector<std::pair<std::size_t, double>> equidistribute(const std::vector<double>& m,
                                                           std::size_t N) {
  std::vector<double> cum(m.size() + 1, 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) cum[i + 1] = cum[i] + m[i];
  std::vector<std::pair<std::size_t, double>> out(N);
  std::size_t j = 0;
  for (std::size_t k = 0; k < N; ++k) {
    const double target = cum.back() * static_cast<double>(k) / static_cast<double>(N - 1);
    while (j + 1 < m.size() && cum[j + 1] < target) ++j;
    const double f = m[j] > 0.0 ? (target - cum[j]) / m[j] : 0.0;
    out[k] = {j, std::clamp(f, 0.0, 1.0)};
  }
  out.front() = {0, 0.0};
  out.back() = {m.size() - 1, 1.0};
  return out;
}

}  // namespace

double monitor_drift(const FlowState& state) {
  std::vector<Local> loc;
  local_geometry(state, endpoints_of(state), loc);
  return drift_of(cell_masses(state, loc, segment_lengths(state, loc)));
}

void regrid(FlowState& state) {
  const Endpoints ends = endpoints_of(state);
  std::vector<Local> loc;
  local_geometry(state, ends, loc);
  const auto h = segment_lengths(state, loc);
  const auto pos = equidistribute(cell_masses(state, loc, h), state.points.size());
  const double R = state.R();
  std::vector<Vec3> next(state.points.size());
  for (std::size_t k = 0; k < pos.size(); ++k) {
    const auto [j, t] = pos[k];
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    Vec3 x = h00 * state.points[j] + (h10 * h[j]) * loc[j].T + h01 * state.points[j + 1] +
             (h11 * h[j]) * loc[j + 1].T;
    next[k] = (R / norm(x)) * x;
  }
  next.front() = state.points.front();
  next.back() = state.points.back();
  state.points = std::move(next);
}

namespace {

struct RkcCoefficients {
  std::vector<double> mu, nu, mu_t, gamma_t;
  double mu_t1 = 0.0;
};

// Second-order Runge-Kutta-Chebyshev (damping 2/13).
RkcCoefficients rkc_coefficients(int s) {
  const double eps = 2.0 / 13.0;
  const double w0 = 1.0 + eps / (s * s);
  std::vector<double> T(s + 1), dT(s + 1), d2T(s + 1), b(s + 1);
  T[0] = 1.0;
  T[1] = w0;
  dT[0] = 0.0;
  dT[1] = 1.0;
  d2T[0] = 0.0;
  d2T[1] = 0.0;
  for (int j = 2; j <= s; ++j) {
    T[j] = 2.0 * w0 * T[j - 1] - T[j - 2];
    dT[j] = 2.0 * T[j - 1] + 2.0 * w0 * dT[j - 1] - dT[j - 2];
    d2T[j] = 4.0 * dT[j - 1] + 2.0 * w0 * d2T[j - 1] - d2T[j - 2];
  }
  const double w1 = dT[s] / d2T[s];
  for (int j = 2; j <= s; ++j) b[j] = d2T[j] / (dT[j] * dT[j]);
  b[0] = b[1] = b[2];
  RkcCoefficients c;
  c.mu.assign(s + 1, 0.0);
  c.nu.assign(s + 1, 0.0);
  c.mu_t.assign(s + 1, 0.0);
  c.gamma_t.assign(s + 1, 0.0);
  c.mu_t1 = b[1] * w1;
  for (int j = 2; j <= s; ++j) {
    c.mu[j] = 2.0 * b[j] * w0 / b[j - 1];
    c.nu[j] = -b[j] / b[j - 2];
    c.mu_t[j] = 2.0 * b[j] * w1 / b[j - 1];
    c.gamma_t[j] = -(1.0 - b[j - 1] * T[j - 1]) * c.mu_t[j];
  }
  return c;
}

// Normal velocity -H nu, evaluated at the radial projection of the points.
void velocity(const FlowState& shape, const std::vector<Vec3>& pts, const Endpoints& ends,
              FlowState& scratch, std::vector<Local>& loc, std::vector<Vec3>& F) {
  const double R = shape.R();
  scratch.points.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) scratch.points[i] = (R / norm(pts[i])) * pts[i];
  local_geometry(scratch, ends, loc);
  F.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) F[i] = (-loc[i].H) * loc[i].nu;
}

bool valid_profile(const FlowState& s) {
  for (const auto& x : s.points) {
    if (!std::isfinite(x[0]) || !std::isfinite(x[1]) || !std::isfinite(x[2])) return false;
    if (s.sym.p >= 2 && x[0] < 0.0) return false;
    if (s.sym.q >= 2 && x[1] < 0.0) return false;
  }
  for (std::size_t i = 0; i + 2 < s.points.size(); ++i) {
    const Vec3 d0 = s.points[i + 1] - s.points[i];
    const Vec3 d1 = s.points[i + 2] - s.points[i + 1];
    if (!(dot(d0, d1) > 0.0)) return false;
  }
  return true;
}

double max_of(const std::vector<Local>& loc) {
  double m = 0.0;
  for (const auto& L : loc) m = std::max(m, L.A2);
  return m;
}

}  // namespace

StepResult step(FlowState& state, const StepPolicy& policy, double t_limit) {
  const Endpoints ends = endpoints_of(state);
  std::vector<Local> loc;
  local_geometry(state, ends, loc);
  const auto h = segment_lengths(state, loc);
  const double A2max = max_of(loc);
  const double hmin = *std::min_element(h.begin(), h.end());
  const int P = state.sym.mult_a(), Q = state.sym.mult_b();

  double dt = std::min(policy.c_cur / std::max(A2max, 1e-300), policy.dt_max / state.K);
  if (dt < policy.dt_min) throw NumericalError("time step underflow");
  const bool clipped = state.t + dt >= t_limit;
  if (clipped) dt = t_limit - state.t;

  double safety = policy.stage_safety;
  StepResult res;
  FlowState scratch = state;
  scratch.class_c.reset();
  const std::size_t N = state.points.size();
  std::vector<Vec3> Y0 = state.points, Ym1(N), Ym2(N), Y(N), F0, Fj;
  std::vector<Local> sloc;

  for (;;) {
    const double rho = safety * ((4.0 + 2.0 * (P + Q)) / (hmin * hmin) + 2.0 * A2max);
    const int s = std::max(2, 1 + static_cast<int>(std::sqrt(1.0 + 1.54 * dt * rho)));
    const RkcCoefficients c = rkc_coefficients(s);

    velocity(state, Y0, ends, scratch, sloc, F0);
    Ym2 = Y0;
    for (std::size_t i = 0; i < N; ++i) Ym1[i] = Y0[i] + (c.mu_t1 * dt) * F0[i];
    for (int j = 2; j <= s; ++j) {
      velocity(state, Ym1, ends, scratch, sloc, Fj);
      const double a0 = 1.0 - c.mu[j] - c.nu[j];
      for (std::size_t i = 0; i < N; ++i) {
        Y[i] = a0 * Y0[i] + c.mu[j] * Ym1[i] + c.nu[j] * Ym2[i] + (c.mu_t[j] * dt) * Fj[i] +
               (c.gamma_t[j] * dt) * F0[i];
      }
      Ym2.swap(Ym1);
      Ym1.swap(Y);
    }

    FlowState trial = state;
    trial.points = Ym1;
    const double R = state.R();
    for (auto& x : trial.points) x = (R / norm(x)) * x;
    for (Vec3* e : {&trial.points.front(), &trial.points.back()}) {
      const Axis at = e == &trial.points.front() ? ends.first : ends.last;
      (*e)[at == Axis::b ? 1 : 0] = 0.0;
      *e = (R / norm(*e)) * *e;
    }
    bool ok = valid_profile(trial);
    if (ok) {
      local_geometry(trial, ends, sloc);
      const double next = max_of(sloc);
      ok = std::isfinite(next) && next <= 4.0 * A2max + 10.0 * state.K;
    }
    if (ok) {
      trial.t = state.t + dt;
      res.dt = dt;
      res.stages = s;
      state.points = std::move(trial.points);
      state.t = clipped && res.rejected == 0 ? t_limit : trial.t;
      break;
    }
    ++res.rejected;
    dt *= 0.5;
    safety *= 2.0;
    if (dt < policy.dt_min) throw NumericalError("time step underflow after rejected steps");
  }

  if (monitor_drift(state) > policy.regrid_drift) {
    regrid(state);
    res.regridded = true;
  }
  return res;
}

ShapeKind parse_shape_kind(const std::string& name) {
  if (name == "geodesic_sphere") return ShapeKind::geodesic_sphere;
  if (name == "clifford_band") return ShapeKind::clifford_band;
  if (name == "dumbbell") return ShapeKind::dumbbell;
  throw ConfigError("unknown shape '" + name + "'");
}

const char* to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::geodesic_sphere: return "geodesic_sphere";
    case ShapeKind::clifford_band: return "clifford_band";
    case ShapeKind::dumbbell: return "dumbbell";
  }
  return "unknown";
}

namespace {

using Curve = std::function<Vec3(double)>;  // parameter in [0, 1]

Curve sphere_curve(const ShapeDescriptor& d, const SymmetryType& sym, double K) {
  const double sk = std::sqrt(K);
  if (!(d.rho0 > 0.0 && sk * d.rho0 < kPi)) {
    throw Error(ErrorCode::invalid_argument, "geodesic_sphere needs sqrt(K) rho0 in (0, pi)");
  }
  const double R = 1.0 / sk;
  const double c = R * std::sin(sk * d.rho0), z0 = R * std::cos(sk * d.rho0);
  const double lo = sym.q == 1 ? -0.5 * kPi : 0.0;
  const double hi = sym.p == 1 ? kPi : 0.5 * kPi;
  return [=](double u) {
    const double psi = lo + (hi - lo) * u;
    return Vec3{c * std::cos(psi), c * std::sin(psi), z0};
  };
}

Curve band_curve(const ShapeDescriptor& d, const SymmetryType& sym, double K) {
  if (sym.p < 2 || sym.q < 2) throw Error(ErrorCode::invalid_argument, "clifford_band needs p, q >= 2");
  if (d.mode < 0) throw Error(ErrorCode::invalid_argument, "clifford_band mode must be >= 0");
  const double amp = std::abs(d.amplitude);
  if (!(d.phi0 - amp > 0.0 && d.phi0 + amp < 0.5 * kPi)) {
    throw Error(ErrorCode::invalid_argument, "clifford_band angle must stay inside (0, pi/2)");
  }
  const double R = 1.0 / std::sqrt(K);
  return [=](double u) {
    const double psi = kPi * (1.0 - u);
    const double phi = d.phi0 + d.amplitude * std::cos(d.mode * psi);
    return Vec3{R * std::cos(phi), R * std::sin(phi) * std::sin(psi), R * std::sin(phi) * std::cos(psi)};
  };
}

double dumbbell_fmax(double nu, double taper, double c) {
  double best = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double u = static_cast<double>(i) / 4000.0, u2 = u * u;
    best = std::max(best, (1.0 - u2) * (nu * nu + taper * u2 + c * u2 * u2));
  }
  return std::sqrt(best);
}

Curve dumbbell_curve(const ShapeDescriptor& d, const SymmetryType& sym, double K) {
  if (sym.p != 1) throw Error(ErrorCode::invalid_argument, "dumbbell needs p = 1");
  if (!(d.neck_ratio > 0.0) || !(d.taper >= 0.0) || !(d.scale > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "dumbbell needs neck_ratio > 0, taper >= 0, scale > 0");
  }
  if (!(dumbbell_fmax(d.neck_ratio, d.taper, 0.0) < d.bulge_ratio)) {
    throw Error(ErrorCode::invalid_argument, "dumbbell bulge_ratio too small for its neck and taper");
  }
  double lo = 0.0, hi = 1.0;
  while (dumbbell_fmax(d.neck_ratio, d.taper, hi) < d.bulge_ratio) {
    hi *= 2.0;
    if (hi > 1e12) throw Error(ErrorCode::invalid_argument, "dumbbell bulge_ratio unreachable");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dumbbell_fmax(d.neck_ratio, d.taper, mid) < d.bulge_ratio ? lo : hi) = mid;
  }
  const double c = 0.5 * (lo + hi);
  const double R = 1.0 / std::sqrt(K);
  const double S = d.scale;
  const double reach = S * std::sqrt(1.0 + d.bulge_ratio * d.bulge_ratio);
  if (!(reach < 0.9 * kPi)) throw Error(ErrorCode::invalid_argument, "dumbbell does not fit inside the sphere");
  return [=](double v) {
    const double th = kPi * v;
    const double u = std::cos(th), u2 = u * u;
    const double f = std::sqrt(std::max(0.0, (1.0 - u2) * (d.neck_ratio * d.neck_ratio + d.taper * u2 + c * u2 * u2)));
    const double xa = S * u, xb = S * f;
    const double r = std::hypot(xa, xb);
    return Vec3{R * std::sin(r) * xa / r, R * std::sin(r) * xb / r, R * std::cos(r)};
  };
}

}  // namespace

FlowState init_profile(const ShapeDescriptor& shape, const SymmetryType& sym,
                       const PinchingParams& params, int N) {
  if (N < 16) throw Error(ErrorCode::invalid_argument, "resolution N must be at least 16");
  if (params.n != sym.n()) throw Error(ErrorCode::invalid_argument, "params.n does not match p + q - 1");
  const double K = params.K;
  Curve curve;
  switch (shape.kind) {
    case ShapeKind::geodesic_sphere: curve = sphere_curve(shape, sym, K); break;
    case ShapeKind::clifford_band: curve = band_curve(shape, sym, K); break;
    case ShapeKind::dumbbell: curve = dumbbell_curve(shape, sym, K); break;
  }

  // Equidistribute on a fine sample, then place the N points on the exact
  // curve by interpolating the parameter.
  const std::size_t M = static_cast<std::size_t>(std::max(32 * N, 8192));
  std::vector<Vec3> fine(M);
  for (std::size_t j = 0; j < M; ++j) fine[j] = curve(static_cast<double>(j) / static_cast<double>(M - 1));
  const FlowState fs = make_state(sym, K, std::move(fine));
  std::vector<Local> loc;
  local_geometry(fs, endpoints_of(fs), loc);
  const auto pos = equidistribute(cell_masses(fs, loc, segment_lengths(fs, loc)),
                                  static_cast<std::size_t>(N));
  std::vector<Vec3> pts(static_cast<std::size_t>(N));
  for (std::size_t k = 0; k < pos.size(); ++k) {
    const double u = (static_cast<double>(pos[k].first) + pos[k].second) / static_cast<double>(M - 1);
    pts[k] = curve(std::clamp(u, 0.0, 1.0));
  }
  FlowState state = make_state(sym, K, std::move(pts));
  state.class_c = classify_class_C(state, params);
  return state;
}

Snapshot take_snapshot(const FlowState& s, long step, bool regridded) {
  Snapshot snap;
  snap.t = s.t;
  snap.step = step;
  snap.regridded = regridded;
  snap.profile = s.points;
  snap.sigma = arclength(s);
  snap.geometry = geometry(s);
  return snap;
}

namespace {

// 1/max|A|^2 is asymptotically linear in t for both type-I models; the
// extrapolation uses the current point and the latest point at least twice
// as far from the singularity.
double extrapolate_singular_time(const std::vector<std::pair<double, double>>& hist) {
  if (hist.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const auto [t1, y1] = hist.back();
  std::size_t k = hist.size() - 2;
  while (k > 0 && hist[k].second < 2.0 * y1) --k;
  const auto [t0, y0] = hist[k];
  if (!(y0 > y1)) return std::numeric_limits<double>::quiet_NaN();
  return t1 + y1 * (t1 - t0) / (y0 - y1);
}

}  // namespace

EquivariantRun run(const EquivariantScenario& sc) {
  if (!(sc.horizon > 0.0)) throw Error(ErrorCode::invalid_argument, "horizon must be positive");
  if (!(sc.singular_threshold > 1.0)) throw Error(ErrorCode::invalid_argument, "singular_threshold must exceed 1");
  if (!(sc.snapshot_growth > 1.0)) throw Error(ErrorCode::invalid_argument, "snapshot_growth must exceed 1");

  EquivariantRun out;
  FlowState state = init_profile(sc.shape, sc.sym, sc.params, sc.N);
  out.initial_class = *state.class_c;

  FlowTrace& tr = out.trace;
  tr.source = "equivariant";
  tr.sym = sc.sym;
  tr.K = state.K;
  tr.has_profile = tr.has_derivatives = tr.has_area = true;
  tr.snapshots.push_back(take_snapshot(state, 0, false));

  const double K = state.K;
  double last_A2 = tr.snapshots.back().max_A2();
  double last_t = 0.0;
  bool regridded_since = false;
  std::vector<std::pair<double, double>> hist{{0.0, 1.0 / std::max(last_A2, 1e-300)}};
  double A2 = last_A2;

  auto finish = [&](TerminalEvent ev, std::string msg) {
    if (tr.snapshots.back().t != state.t) tr.snapshots.push_back(take_snapshot(state, out.steps, regridded_since));
    tr.terminal = ev;
    tr.terminal_time = state.t;
    tr.message = std::move(msg);
  };

  for (;;) {
    if (A2 / K >= sc.singular_threshold) {
      const auto g = geometry(state, GeometryOptions{false, false});
      double lo = g.front().A_norm_sq;
      for (const auto& x : g) lo = std::min(lo, x.A_norm_sq);
      Vec3 c{0.0, 0.0, 0.0};
      for (const auto& x : state.points) c = c + x;
      c = (1.0 / static_cast<double>(state.points.size())) * c;
      double spread = 0.0;
      for (const auto& x : state.points) spread = std::max(spread, norm(x - c));
      const bool point_orbit = (sc.sym.p == 1 || std::abs(c[0]) <= 10.0 * spread) &&
                               (sc.sym.q == 1 || std::abs(c[1]) <= 10.0 * spread);
      tr.singular_time = extrapolate_singular_time(hist);
      if (lo / A2 > 0.5 && point_orbit) {
        finish(TerminalEvent::extinction, "profile shrank to a point orbit");
      } else {
        finish(TerminalEvent::singularity, "max|A|^2/K reached the singular threshold");
      }
      break;
    }
    if (state.t >= sc.horizon) {
      finish(TerminalEvent::horizon, "");
      break;
    }
    if (out.steps >= sc.max_steps) {
      finish(TerminalEvent::aborted, "step budget exhausted");
      break;
    }
    StepResult r;
    try {
      r = step(state, sc.policy, sc.horizon);
    } catch (const NumericalError& e) {
      tr.singular_time = extrapolate_singular_time(hist);
      finish(A2 / K > 1e3 ? TerminalEvent::singularity : TerminalEvent::degenerate, e.what());
      break;
    }
    ++out.steps;
    if (r.regridded) {
      ++out.regrids;
      regridded_since = true;
    }
    const auto g = geometry(state, GeometryOptions{false, false});
    A2 = 0.0;
    for (const auto& x : g) A2 = std::max(A2, x.A_norm_sq);
    hist.emplace_back(state.t, 1.0 / std::max(A2, 1e-300));

    const bool grew = A2 >= sc.snapshot_growth * last_A2 || A2 * sc.snapshot_growth <= last_A2;
    const bool timed = sc.snapshot_dt > 0.0 && state.t - last_t >= sc.snapshot_dt;
    if (grew || timed) {
      tr.snapshots.push_back(take_snapshot(state, out.steps, regridded_since));
      regridded_since = false;
      last_A2 = A2;
      last_t = state.t;
    }
  }
  return out;
}

}  // namespace pinchflow
