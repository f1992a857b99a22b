#pragma once

// Empirical measurement of gamma(n, alpha, eta) = inf (|C|^2 + 1)/W^3 over
//   U = {f_{m-1,eta} >= 0 >= g_{m,alpha}}   (K = 1),
// with W = (1/(n-m+alpha) - 1/(n-m+1) + eta0 - eta) tr^2 + 2(m-alpha).
//
// Writing lambda = s u with |u| = 1, both constraints are conditions on u
// plus an upper bound on s^2 (absent when tr(u)^2 > n-m+alpha), and for fixed u the ratio is a rational
// function of s^2 whose critical points solve a quadratic. The search is a
// multistart projected descent over u; the scale is then optimal exactly.

#include <cstdint>
#include <vector>

#include "pinchflow/curvature_algebra.hpp"

namespace pinchflow {

/// W; eta may exceed eta0 here.
double poincare_W(std::span<const double> lambda, const PinchingParams& params, double eta,
                  double K = 1.0);

/// (|C|^2 + K^3) / W^3, invariant under lambda -> c lambda, K -> c^2 K.
double poincare_ratio(std::span<const double> lambda, const PinchingParams& params, double eta,
                      double K = 1.0);

/// f_{m-1,eta}(lambda) >= -tol and g_{m,alpha}(lambda) <= tol at K = 1.
bool in_U(std::span<const double> lambda, const PinchingParams& params, double eta, double tol = 1e-9);

struct RaySample {
  double t = 0.0;
  std::vector<double> lambda;      ///< (t x m, -1/t x (n-m))
  double W = 0.0;
  double C_norm_sq = 0.0;
  double ratio = 0.0;              ///< (|C|^2 + 1)/W^3
  double f = 0.0;                  ///< f_{m-1,eta}(lambda)
  double g = 0.0;                  ///< g_{m,alpha}(lambda)
  std::vector<double> lambda_hat;  ///< W^{-1/2} lambda
  double g_hat = 0.0;              ///< |lambda_hat|^2 - tr(lambda_hat)^2/(n-m+alpha)
};

struct GammaCertificate {
  PinchingParams params;
  double eta = 0.0;
  double gamma_hat = 0.0;
  std::vector<double> minimizer;  ///< ascending
  double minimizer_f = 0.0;
  double minimizer_g = 0.0;
  double minimizer_W = 0.0;
  bool feasible = false;
  int budget = 0;
  std::uint64_t seed = 0;
  std::vector<RaySample> unconstrained_ray;
};

/// budget = number of multistarts; jobs = worker threads (results do not
/// depend on it). Refuses n = 2 and eta outside (0, 1/(n-m+alpha) - 1/(n-m+1)).
GammaCertificate min_ratio(const PinchingParams& params, double eta, int budget,
                           std::uint64_t seed, int jobs = 1);

/// Samples along the Clifford direction at t = 10, 10^2, 10^3.
std::vector<RaySample> clifford_ray_witness(const PinchingParams& params, double eta);

struct MultiplicityRow {
  int ell = 0;
  double first_margin = 0.0;   ///< (n-l) - (n-l)^2/(n-m+1) - eta (n-l)^2, needs > 0
  double second_margin = 0.0;  ///< (n-l)^2/(n-m+alpha) - (n-l), needs >= 0
  bool first_holds = false;
  bool second_holds = false;
};

struct MultiplicityVerdict {
  std::vector<MultiplicityRow> rows;  ///< ell = 0..n-1
  bool pass = false;                  ///< no ell satisfies both
};

MultiplicityVerdict multiplicity_gap_check(const PinchingParams& params, double eta);

}  // namespace pinchflow
