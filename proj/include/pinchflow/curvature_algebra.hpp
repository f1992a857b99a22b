#pragma once

// Pointwise algebra of principal curvatures for hypersurfaces of the round
// sphere S^{n+1}_K: pinching functions, flow coefficients, and the Simons
// tensor norm. Everything here is exact up to binary64 rounding.

#include <span>
#include <string>
#include <vector>

namespace pinchflow {

/// Dimension, pinching index, slack and ambient curvature, plus the class
/// bounds on initial area (V) and mean curvature (Theta).
struct PinchingParams {
  int n = 4;
  int m = 2;
  double alpha = 0.5;
  double K = 1.0;
  double V = 1.0e3;
  double Theta = 1.0e4;
};

/// min{n/2, 2(n-1)/3}
double admissibility_threshold(int n);

/// m < alpha + min{n/2, 2(n-1)/3}, together with the basic domain checks.
bool admissible(const PinchingParams& params);

/// Throws InadmissibleError naming the violated threshold.
void require_admissible(const PinchingParams& params);

/// Principal curvatures, kept sorted ascending.
class ShapeSpectrum {
 public:
  ShapeSpectrum() = default;
  explicit ShapeSpectrum(std::vector<double> lambda);

  int n() const { return static_cast<int>(lambda_.size()); }
  std::span<const double> values() const { return lambda_; }
  double operator[](std::size_t i) const { return lambda_[i]; }

  double H() const;
  double A_norm_sq() const;
  double lambda_min() const { return lambda_.empty() ? 0.0 : lambda_.front(); }

  ShapeSpectrum scaled(double c) const;

 private:
  std::vector<double> lambda_;
};

/// Umbilic spectrum (c, ..., c).
ShapeSpectrum umbilic_spectrum(int n, double c);

/// Two-group spectrum: `first` repeated k times, `second` repeated n-k times.
ShapeSpectrum two_group_spectrum(int n, int k, double first, double second);

struct Invariants {
  double H = 0.0;
  double A_norm_sq = 0.0;
  double lambda_min = 0.0;
};

Invariants invariants(const ShapeSpectrum& spectrum);

struct PinchingReport {
  double strict_margin = 0.0;  ///< |A|^2 minus the case-selected strict bound
  double g_m_alpha = 0.0;
  double f_eta = 0.0;
  double f_m_eta = 0.0;
  bool in_U = false;
};

/// Right-hand side of the strict quadratic pinching condition for (n, m),
/// returned as (coefficient of H^2, coefficient of K). Throws RangeError for
/// (n, m) outside the case table.
struct StrictBound {
  double h2 = 0.0;
  double k = 0.0;
};
StrictBound strict_pinching_bound(int n, int m);

PinchingReport pinching_report(const ShapeSpectrum& spectrum,
                               const PinchingParams& params, double eta);

/// g_{m,alpha} = |A|^2 - H^2/(n-m+alpha) - 2(m-alpha)K.
double g_m_alpha(double H, double A2, int n, int m, double alpha, double K);

/// f_{m,eta} = |A|^2 - H^2/(n-m) - eta H^2.
double f_m_eta(double H, double A2, int n, int m, double eta);

struct Coefficients {
  int n = 0;
  int m = 0;
  double alpha = 0.0;
  double eta = 0.0;  ///< the active eta used in `a`
  double a_m = 0.0;
  double b_m = 0.0;
  double a = 0.0;
  double b = 0.0;
  double eta0 = 0.0;
  double delta = 0.0;
  double beta = 0.0;
  double C0 = 0.0;
};

/// Largest eta0 satisfying both linear constraints; may be <= 0 for
/// inadmissible tuples.
double eta0_closed_form(int n, int m, double alpha);

Coefficients coefficients(const PinchingParams& params, double eta);

/// W = a H^2 + b K.
double W_value(const ShapeSpectrum& spectrum, const Coefficients& coeffs, double K);
double W_value(double H, const Coefficients& coeffs, double K);

/// f_eta = |A|^2 - (1/(n-m+1) + eta) H^2 with eta taken from `coeffs`.
double f_eta_value(double H, double A2, const Coefficients& coeffs);

/// f_{sigma,eta} = f_eta * W^(sigma - 1).
double f_sigma_eta(const ShapeSpectrum& spectrum, const Coefficients& coeffs,
                   double K, double sigma);
double f_sigma_eta(double H, double A2, const Coefficients& coeffs, double K,
                   double sigma);

/// sum_{i,j} (lambda_j - lambda_i)^2 (lambda_i lambda_j + K)^2
double simons_C_norm_sq(const ShapeSpectrum& spectrum, double K);
double simons_C_norm_sq(std::span<const double> lambda, double K);

struct CliffordClosedForm {
  double A_norm_sq = 0.0;
  double H = 0.0;
  double excess = 0.0;  ///< |A|^2 - H^2/(n-m) - 2mK
};

/// Closed-form invariants of S^m(r) x S^{n-m}(s), r^2 + s^2 = 1, in S^{n+1}_K.
CliffordClosedForm clifford_closed_form(int n, int m, double r, double K);

/// Principal curvatures of the same product: -sqrt(K) s/r with multiplicity
/// m and sqrt(K) r/s with multiplicity n-m. The orientation matches the sign
/// of H in clifford_closed_form.
ShapeSpectrum clifford_spectrum(int n, int m, double r, double K);

}  // namespace pinchflow
