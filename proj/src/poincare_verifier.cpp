#include "pinchflow/poincare_verifier.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "pinchflow/error.hpp"

namespace pinchflow {

namespace {

struct Setup {
  int n = 0;
  double a = 0.0;    ///< coefficient of tr^2 in W
  double b = 0.0;    ///< 2(m - alpha)
  double cf = 0.0;   ///< 1/(n-m+1) + eta
  double cg = 0.0;   ///< 1/(n-m+alpha)
};

double eta_ceiling(const PinchingParams& p) {
  return 1.0 / (p.n - p.m + p.alpha) - 1.0 / (p.n - p.m + 1);
}

Setup setup(const PinchingParams& p, double eta) {
  if (p.n == 2) throw Error(ErrorCode::invalid_argument, "the verifier refuses n = 2");
  require_admissible(p);
  const double top = eta_ceiling(p);
  if (!(eta > 0.0 && eta < top)) {
    std::ostringstream msg;
    msg << "eta = " << eta << " outside (0, " << top << ")";
    throw RangeError(msg.str());
  }
  Setup s;
  s.n = p.n;
  s.cg = 1.0 / (p.n - p.m + p.alpha);
  s.cf = 1.0 / (p.n - p.m + 1) + eta;
  s.a = top + eta0_closed_form(p.n, p.m, p.alpha) - eta;
  s.b = 2.0 * (p.m - p.alpha);
  return s;
}

double trace_of(std::span<const double> v) {
  double t = 0.0;
  for (double x : v) t += x;
  return t;
}

double norm_sq(std::span<const double> v) {
  double t = 0.0;
  for (double x : v) t += x * x;
  return t;
}

// Unit vector with tr(u)^2 <= 1/cf, i.e. f_{m-1,eta}(u) >= 0.
std::vector<double> project(std::vector<double> v, const Setup& s) {
  const int n = s.n;
  double r = std::sqrt(norm_sq(v));
  if (!(r > 0.0)) {
    v.assign(n, 0.0);
    v[0] = 1.0;
    r = 1.0;
  }
  for (auto& x : v) x /= r;
  const double e = 1.0 / std::sqrt(static_cast<double>(n));
  const double tau = trace_of(v) * e;
  const double tau_max = 1.0 / std::sqrt(n * s.cf);
  if (std::abs(tau) <= tau_max) return v;
  std::vector<double> w(v);
  for (auto& x : w) x -= tau * e;
  double wn = std::sqrt(norm_sq(w));
  if (!(wn > 1e-300)) {
    w.assign(n, -e * e);
    w[0] += 1.0;
    wn = std::sqrt(norm_sq(w));
  }
  const double t = std::copysign(tau_max, tau);
  const double scale = std::sqrt(1.0 - t * t) / wn;
  for (int i = 0; i < n; ++i) v[i] = w[i] * scale + t * e;
  return v;
}

struct Inner {
  double value = 0.0;
  double x = 0.0;  ///< s^2
};

// min over x in [0, x_max] of (1 + c1 x + c2 x^2 + c3 x^3)/(A x + b)^3.
Inner inner_min(const std::vector<double>& u, const Setup& s) {
  const int n = s.n;
  double c1 = 0.0, c2 = 0.0, c3 = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d2 = (u[j] - u[i]) * (u[j] - u[i]);
      const double p = u[i] * u[j];
      c1 += d2;
      c2 += 2.0 * d2 * p;
      c3 += d2 * p * p;
    }
  const double T = trace_of(u);
  const double A = s.a * T * T;
  const double q = 1.0 - s.cg * T * T;
  // q <= 0 happens for n-m+alpha < tr^2 <= 1/cf: then g <= 0 at every
  // scale and R tends to c3/A^3. The cap stands in for infinity.
  constexpr double x_cap = 1e12;
  const double x_max = q > s.b / x_cap ? s.b / q : x_cap;
  auto R = [&](double x) {
    const double Q = A * x + s.b;
    return (1.0 + x * (c1 + x * (c2 + x * c3))) / (Q * Q * Q);
  };
  Inner best{R(0.0), 0.0};
  auto consider = [&](double x) {
    if (!(x > 0.0 && x <= x_max)) return;
    const double v = R(x);
    if (v < best.value) best = {v, x};
  };
  consider(x_max);
  const double k0 = c1 * s.b - 3.0 * A, k1 = 2.0 * (c2 * s.b - A * c1), k2 = 3.0 * c3 * s.b - A * c2;
  if (std::abs(k2) > 1e-300) {
    const double disc = k1 * k1 - 4.0 * k2 * k0;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double qq = -0.5 * (k1 + std::copysign(sq, k1));
      if (qq != 0.0) {
        consider(qq / k2);
        consider(k0 / qq);
      }
    }
  } else if (std::abs(k1) > 1e-300) {
    consider(-k0 / k1);
  }
  return best;
}

struct StartResult {
  double value = INFINITY;
  std::vector<double> u;
  double x = 0.0;
};

std::vector<double> initial_point(std::mt19937_64& rng, int kind, const Setup& s) {
  const int n = s.n;
  std::normal_distribution<double> N01;
  std::uniform_real_distribution<double> U01;
  std::vector<double> v(n);
  if (kind == 0) {
    for (auto& x : v) x = N01(rng);
  } else if (kind == 1) {
    // Near-Clifford two-group spectrum.
    const int k = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(n - 1));
    const double t = std::exp(6.0 * U01(rng) - 3.0);
    for (int i = 0; i < n; ++i) v[i] = (i < k ? t : -1.0 / t) + 0.01 * N01(rng);
  } else {
    // ell near-zero entries and n - ell nearly equal ones.
    const int ell = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
    for (int i = 0; i < n; ++i) v[i] = i < ell ? 1e-3 * N01(rng) : 1.0 + 0.05 * N01(rng);
    if (U01(rng) < 0.5)
      for (auto& x : v) x = -x;
  }
  return project(v, s);
}

StartResult descend(std::vector<double> u, const Setup& s) {
  const int n = s.n;
  Inner cur = inner_min(u, s);
  double step = 1e-2;
  std::vector<double> g(n), trial(n);
  for (int it = 0; it < 300 && step > 1e-14; ++it) {
    const double h = 1e-7;
    for (int i = 0; i < n; ++i) {
      auto up = u, dn = u;
      up[i] += h;
      dn[i] -= h;
      g[i] = (inner_min(project(up, s), s).value - inner_min(project(dn, s), s).value) / (2.0 * h);
    }
    const double gn = std::sqrt(norm_sq(g));
    if (!(gn > 0.0)) break;
    bool moved = false;
    while (step > 1e-14) {
      for (int i = 0; i < n; ++i) trial[i] = u[i] - step * g[i] / gn;
      auto cand = project(trial, s);
      const Inner v = inner_min(cand, s);
      if (v.value < cur.value) {
        u = std::move(cand);
        cur = v;
        step *= 2.0;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return {cur.value, u, cur.x};
}

}  // namespace

double poincare_W(std::span<const double> lambda, const PinchingParams& p, double eta, double K) {
  const Setup s = setup(p, eta);
  const double T = trace_of(lambda);
  return s.a * T * T + s.b * K;
}

double poincare_ratio(std::span<const double> lambda, const PinchingParams& p, double eta, double K) {
  const double W = poincare_W(lambda, p, eta, K);
  return (simons_C_norm_sq(lambda, K) + K * K * K) / (W * W * W);
}

bool in_U(std::span<const double> lambda, const PinchingParams& p, double eta, double tol) {
  const Setup s = setup(p, eta);
  const double T = trace_of(lambda), A2 = norm_sq(lambda);
  const double f = A2 - s.cf * T * T;
  const double g = g_m_alpha(T, A2, p.n, p.m, p.alpha, 1.0);
  return f >= -tol && g <= tol;
}

std::vector<RaySample> clifford_ray_witness(const PinchingParams& p, double eta) {
  const Setup s = setup(p, eta);
  std::vector<RaySample> out;
  for (double t : {10.0, 100.0, 1000.0}) {
    RaySample r;
    r.t = t;
    for (int i = 0; i < p.n; ++i) r.lambda.push_back(i < p.m ? t : -1.0 / t);
    const double T = trace_of(r.lambda), A2 = norm_sq(r.lambda);
    r.W = s.a * T * T + s.b;
    r.C_norm_sq = simons_C_norm_sq(r.lambda, 1.0);
    r.ratio = (r.C_norm_sq + 1.0) / (r.W * r.W * r.W);
    r.f = A2 - s.cf * T * T;
    r.g = g_m_alpha(T, A2, p.n, p.m, p.alpha, 1.0);
    const double c = 1.0 / std::sqrt(r.W);
    for (double l : r.lambda) r.lambda_hat.push_back(c * l);
    const double Th = trace_of(r.lambda_hat);
    r.g_hat = norm_sq(r.lambda_hat) - s.cg * Th * Th;
    out.push_back(std::move(r));
  }
  return out;
}

GammaCertificate min_ratio(const PinchingParams& p, double eta, int budget, std::uint64_t seed,
                           int jobs) {
  const Setup s = setup(p, eta);
  if (budget < 1) throw Error(ErrorCode::invalid_argument, "budget must be positive");
  jobs = std::max(1, std::min(jobs, budget));

  std::vector<StartResult> results(static_cast<std::size_t>(budget));
  auto work = [&](int tid) {
    for (int i = tid; i < budget; i += jobs) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(i)};
      std::mt19937_64 rng(seq);
      results[static_cast<std::size_t>(i)] = descend(initial_point(rng, i % 3, s), s);
    }
  };
  if (jobs == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }

  // The zero spectrum is always feasible.
  StartResult best{1.0 / (s.b * s.b * s.b), std::vector<double>(p.n, 0.0), 0.0};
  for (const auto& r : results)
    if (r.value < best.value) best = r;

  GammaCertificate c;
  c.params = p;
  c.eta = eta;
  c.budget = budget;
  c.seed = seed;
  const double sc = std::sqrt(best.x);
  for (double x : best.u) c.minimizer.push_back(sc * x);
  std::sort(c.minimizer.begin(), c.minimizer.end());
  const double T = trace_of(c.minimizer), A2 = norm_sq(c.minimizer);
  c.minimizer_f = A2 - s.cf * T * T;
  c.minimizer_g = g_m_alpha(T, A2, p.n, p.m, p.alpha, 1.0);
  c.minimizer_W = s.a * T * T + s.b;
  c.gamma_hat = poincare_ratio(c.minimizer, p, eta);
  c.feasible = c.minimizer_f >= -1e-9 && c.minimizer_g <= 1e-9;
  c.unconstrained_ray = clifford_ray_witness(p, eta);
  return c;
}

MultiplicityVerdict multiplicity_gap_check(const PinchingParams& p, double eta) {
  setup(p, eta);
  MultiplicityVerdict v;
  v.pass = true;
  for (int ell = 0; ell < p.n; ++ell) {
    const double k = p.n - ell;
    MultiplicityRow r;
    r.ell = ell;
    r.first_margin = k - k * k / (p.n - p.m + 1) - eta * k * k;
    r.second_margin = k * k / (p.n - p.m + p.alpha) - k;
    r.first_holds = r.first_margin > 0.0;
    r.second_holds = r.second_margin >= 0.0;
    if (r.first_holds && r.second_holds) v.pass = false;
    v.rows.push_back(r);
  }
  return v;
}

}  // namespace pinchflow
