#include "pinchflow/curvature_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pinchflow/error.hpp"

namespace pinchflow {

double admissibility_threshold(int n) {
  return std::min(0.5 * n, 2.0 * (n - 1) / 3.0);
}

bool admissible(const PinchingParams& p) {
  if (p.n < 2 || p.m < 1 || p.m > (p.n + 1) / 2) return false;
  if (!(p.alpha > 0.0 && p.alpha < 1.0) || !(p.K > 0.0)) return false;
  return p.m < p.alpha + admissibility_threshold(p.n);
}

void require_admissible(const PinchingParams& p) {
  std::ostringstream msg;
  if (p.n < 2) {
    msg << "inadmissible parameters: n = " << p.n << " must be >= 2";
  } else if (p.m < 1 || p.m > (p.n + 1) / 2) {
    msg << "inadmissible parameters: m = " << p.m << " must lie in [1, ceil(n/2)] = [1, "
        << (p.n + 1) / 2 << "]";
  } else if (!(p.alpha > 0.0 && p.alpha < 1.0)) {
    msg << "inadmissible parameters: alpha = " << p.alpha << " must lie in (0,1)";
  } else if (!(p.K > 0.0)) {
    msg << "inadmissible parameters: K = " << p.K << " must be positive";
  } else if (!(p.m < p.alpha + admissibility_threshold(p.n))) {
    msg.precision(12);
    msg << "inadmissible parameters: m < alpha + min{n/2, 2(n-1)/3} violated: " << p.m
        << " >= " << p.alpha << " + " << admissibility_threshold(p.n);
  } else {
    return;
  }
  throw InadmissibleError(msg.str());
}

ShapeSpectrum::ShapeSpectrum(std::vector<double> lambda) : lambda_(std::move(lambda)) {
  std::sort(lambda_.begin(), lambda_.end());
}

double ShapeSpectrum::H() const {
  return std::accumulate(lambda_.begin(), lambda_.end(), 0.0);
}

double ShapeSpectrum::A_norm_sq() const {
  double s = 0.0;
  for (double l : lambda_) s += l * l;
  return s;
}

ShapeSpectrum ShapeSpectrum::scaled(double c) const {
  std::vector<double> v(lambda_);
  for (double& l : v) l *= c;
  return ShapeSpectrum(std::move(v));
}

ShapeSpectrum umbilic_spectrum(int n, double c) {
  return ShapeSpectrum(std::vector<double>(static_cast<std::size_t>(n), c));
}

ShapeSpectrum two_group_spectrum(int n, int k, double first, double second) {
  std::vector<double> v(static_cast<std::size_t>(n), second);
  std::fill_n(v.begin(), k, first);
  return ShapeSpectrum(std::move(v));
}

Invariants invariants(const ShapeSpectrum& s) {
  return {s.H(), s.A_norm_sq(), s.lambda_min()};
}

StrictBound strict_pinching_bound(int n, int m) {
  if (n == 2 && m == 1) return {3.0 / 4.0, 4.0 / 3.0};
  if (n == 3 && m == 2) return {3.0 / 5.0, 8.0 / 3.0};
  if (n >= 3 && m >= 1 && m <= n / 2) return {1.0 / (n - m), 2.0 * m};
  if (n >= 4 && m == (n + 1) / 2) return {2.0 / n, static_cast<double>(n)};
  std::ostringstream msg;
  msg << "(n, m) = (" << n << ", " << m << ") is outside the quadratic pinching case table";
  throw RangeError(msg.str());
}

double g_m_alpha(double H, double A2, int n, int m, double alpha, double K) {
  return A2 - H * H / (n - m + alpha) - 2.0 * (m - alpha) * K;
}

double f_m_eta(double H, double A2, int n, int m, double eta) {
  return A2 - H * H / (n - m) - eta * H * H;
}

PinchingReport pinching_report(const ShapeSpectrum& spectrum, const PinchingParams& p,
                               double eta) {
  require_admissible(p);
  if (spectrum.n() != p.n) throw Error(ErrorCode::invalid_argument, "spectrum length differs from n");
  if (!(eta >= 0.0)) throw RangeError("eta must be nonnegative");
  const StrictBound bound = strict_pinching_bound(p.n, p.m);
  const double H = spectrum.H();
  const double A2 = spectrum.A_norm_sq();
  PinchingReport r;
  r.strict_margin = A2 - bound.h2 * H * H - bound.k * p.K;
  r.g_m_alpha = g_m_alpha(H, A2, p.n, p.m, p.alpha, p.K);
  r.f_eta = A2 - (1.0 / (p.n - p.m + 1) + eta) * H * H;
  r.f_m_eta = f_m_eta(H, A2, p.n, p.m, eta);
  // f_{m-1,eta} coincides with f_eta.
  r.in_U = r.f_eta >= 0.0 && r.g_m_alpha <= 0.0;
  return r;
}

double eta0_closed_form(int n, int m, double alpha) {
  const double first = (0.5 * n + alpha - m) / n;
  const double c = (n + 2.0) / 3.0;
  const double second = (1.0 - c / (n - m + alpha)) / (n + c);
  return std::min(first, second);
}

Coefficients coefficients(const PinchingParams& p, double eta) {
  require_admissible(p);
  Coefficients c;
  c.n = p.n;
  c.m = p.m;
  c.alpha = p.alpha;
  c.eta = eta;
  c.eta0 = eta0_closed_form(p.n, p.m, p.alpha);
  if (!(eta >= 0.0 && eta < c.eta0)) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "eta = " << eta << " outside [0, eta0) with eta0 = " << c.eta0;
    throw RangeError(msg.str());
  }
  c.a_m = 1.0 / (p.n - p.m + p.alpha);
  c.b_m = 2.0 * (p.m - p.alpha);
  c.a = c.a_m - 1.0 / (p.n - p.m + 1) + c.eta0 - eta;
  c.b = c.b_m;
  c.delta = p.n * c.eta0;
  c.beta = 0.5 * (3.0 / (p.n + 2.0) - 1.0 / (p.n - p.m + 1));
  c.C0 = 2.0 * (p.m - p.alpha);
  return c;
}

double W_value(double H, const Coefficients& c, double K) { return c.a * H * H + c.b * K; }

double W_value(const ShapeSpectrum& s, const Coefficients& c, double K) {
  return W_value(s.H(), c, K);
}

double f_eta_value(double H, double A2, const Coefficients& c) {
  return A2 - (1.0 / (c.n - c.m + 1) + c.eta) * H * H;
}

double f_sigma_eta(double H, double A2, const Coefficients& c, double K, double sigma) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) throw RangeError("sigma must lie in [0,1]");
  const double f = f_eta_value(H, A2, c);
  if (sigma == 1.0) return f;
  return f * std::pow(W_value(H, c, K), sigma - 1.0);
}

double f_sigma_eta(const ShapeSpectrum& s, const Coefficients& c, double K, double sigma) {
  return f_sigma_eta(s.H(), s.A_norm_sq(), c, K, sigma);
}

double simons_C_norm_sq(std::span<const double> l, double K) {
  double sum = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    for (std::size_t j = i + 1; j < l.size(); ++j) {
      const double d = l[j] - l[i];
      const double p = l[i] * l[j] + K;
      sum += d * d * p * p;
    }
  }
  return 2.0 * sum;  // ordered pairs
}

double simons_C_norm_sq(const ShapeSpectrum& s, double K) {
  return simons_C_norm_sq(s.values(), K);
}

namespace {
void require_torus(int n, int m, double r) {
  if (n < 2 || m < 1 || m >= n) throw Error(ErrorCode::invalid_argument, "torus needs 1 <= m < n");
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorCode::invalid_argument, "degenerate torus: r must lie in (0,1)");
}
}  // namespace

CliffordClosedForm clifford_closed_form(int n, int m, double r, double K) {
  require_torus(n, m, r);
  const double r2 = r * r;
  const double s2 = 1.0 - r2;
  const double s = std::sqrt(s2);
  CliffordClosedForm out;
  out.A_norm_sq = (m * s2 * s2 + (n - m) * r2 * r2) / (r2 * s2) * K;
  out.H = ((n - m) * r2 - m * s2) / (r * s) * std::sqrt(K);
  out.excess = (static_cast<double>(m) * (n - 2 * m) / (n - m)) * (s2 / r2) * K;
  return out;
}

ShapeSpectrum clifford_spectrum(int n, int m, double r, double K) {
  require_torus(n, m, r);
  const double s = std::sqrt(1.0 - r * r);
  const double sk = std::sqrt(K);
  return two_group_spectrum(n, m, -sk * s / r, sk * r / s);
}

}  // namespace pinchflow
