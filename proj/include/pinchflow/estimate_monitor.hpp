#pragma once

// Quantitative pinching, decay, derivative and existence-time estimates
// evaluated along a FlowTrace. Every extremum carries the (t, snapshot, grid
// index) where it was attained. Verdicts only ever mean "no counterexample in
// this trace".

#include <cstddef>
#include <limits>
#include <vector>

#include "pinchflow/curvature_algebra.hpp"
#include "pinchflow/trace.hpp"

namespace pinchflow {

enum class CheckStatus { pass, fail, not_applicable };

const char* to_string(CheckStatus s);

struct Witness {
  double t = std::numeric_limits<double>::quiet_NaN();
  std::size_t snapshot = 0;
  std::size_t index = 0;
};

/// Lambda0/2 = Theta/(n-m+alpha) + 2(m-alpha) (or Theta^2 in the *_theta_sq
/// variant), e^{2n lambda0} = 1 + n/(n+Lambda0), and the guaranteed
/// existence time T_lower = ln(1 + 2n/Lambda0)/(2nK).
struct ClassCBounds {
  double Lambda0 = 0.0;
  double lambda0 = 0.0;
  double T_lower = 0.0;
  double Lambda0_theta_sq = 0.0;
  double lambda0_theta_sq = 0.0;
  double T_lower_theta_sq = 0.0;
};

ClassCBounds class_c_bounds(const PinchingParams& params);

struct PreservationCheck {
  CheckStatus status = CheckStatus::not_applicable;
  bool initially_in_class = false;
  double max_g = 0.0;
  double max_relative = 0.0;  ///< max of g / (max|A|^2(t) + K)
  Witness where;
};

struct DecayCheck {
  CheckStatus status = CheckStatus::not_applicable;
  std::vector<double> t;
  std::vector<double> sup_ratio;  ///< sup (f_0)_+ / W
  std::vector<double> bound;      ///< sup_ratio(0) e^{-4 delta K t}
  double worst_quotient = 0.0;    ///< max sup_ratio / (slack * bound)
  double fitted_exponent = std::numeric_limits<double>::quiet_NaN();  ///< d ln(sup_ratio)/d(Kt)
  double bound_exponent = 0.0;    ///< -4 delta
  Witness where;
};

struct CylindricalEntry {
  double eta = 0.0;
  double C_fit = 0.0;  ///< smallest C with f_eta <= C K e^{-2 delta K t} trace-wide
  double C_eta = 0.0;  ///< max(C_fit, 2): the constant entering G_eta
  Witness where;
};

struct GradientEntry {
  double eta = 0.0;
  double sup = 0.0;  ///< sup |grad A|^2 / (G_eta G_0)
  Witness where;
};

struct GradientCheck {
  CheckStatus status = CheckStatus::not_applicable;
  double t_start = 0.0;  ///< lambda0 / K
  double A2_growth = 0.0;  ///< growth of max|A|^2 across the window
  double min_G0 = 0.0;
  std::vector<GradientEntry> per_eta;
  double crude_sup = 0.0;  ///< sup |grad A|^2 / (H^4 + K^2)
  Witness crude_where;
};

struct HessianCheck {
  CheckStatus status = CheckStatus::not_applicable;
  double sup = 0.0;  ///< sup |grad^2 A|^2 / (H^6 + K^3), t >= lambda0/K
  Witness where;
};

struct KatoCheck {
  CheckStatus status = CheckStatus::not_applicable;
  double min_ratio = std::numeric_limits<double>::infinity();  ///< |grad A|^2 / |grad H|^2
  double margin = std::numeric_limits<double>::infinity();     ///< min_ratio - 3/(n+2)
  Witness where;
};

struct TimeBoundCheck {
  CheckStatus status = CheckStatus::not_applicable;
  ClassCBounds bounds;
  bool singular = false;  ///< the trace ended in a finite-time singularity
  double T_obs = std::numeric_limits<double>::quiet_NaN();
  double lhs = std::numeric_limits<double>::quiet_NaN();  ///< e^{2nK T_obs}
  double rhs = 0.0;                                       ///< 1 + 2n/Lambda0
  bool theta_sq_holds = true;
};

struct EstimateReport {
  PreservationCheck preservation;
  DecayCheck decay;
  std::vector<CylindricalEntry> cylindrical;
  GradientCheck gradient;
  HessianCheck hessian;
  KatoCheck kato;
  TimeBoundCheck time_bound;
};

struct MonitorOptions {
  double preservation_tol = 1e-3;  ///< relative to max|A|^2 + K
  double decay_slack = 1.02;
  double kato_tol = 1e-6;
  /// Points with |grad H|^2 below this multiple of (max|A|^2 + K)^2 are
  /// skipped by the Kato check.
  double kato_floor = 1e-12;
};

/// Every eta must lie in (0, eta0).
EstimateReport check_estimates(const FlowTrace& trace, const PinchingParams& params,
                               const std::vector<double>& eta_list,
                               const MonitorOptions& opts = {});

struct FrontierPoint {
  double eta = 0.0;
  double h_raw = 0.0;  ///< as measured; +inf when the largest |H| of the trace violates
  double h = 0.0;      ///< after isotonic (nonincreasing) cleanup
  Witness where;
};

/// Smallest h with |H| >= h sqrt(K) => lambda_1 >= -eta |H| on the trace,
/// lambda_1 taken in the orientation with H >= 0. eta_grid must be strictly
/// increasing and positive.
std::vector<FrontierPoint> convexity_frontier(const FlowTrace& trace,
                                              const std::vector<double>& eta_grid);

/// Pool-adjacent-violators fit of a nonincreasing sequence (infinite values
/// absorb their pool).
std::vector<double> isotonic_nonincreasing(const std::vector<double>& y);

struct ResidualField {
  bool applicable = false;
  double t = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> residual;
  double max_abs = 0.0;
  double scale = 0.0;  ///< (max|A|^2 + K)^2 at the centre snapshot
  std::size_t argmax = 0;
};

/// Discrete (d/dt - Laplacian) f_eta minus its evolution right-hand side at
/// snapshot t_index, using the snapshots on either side (no regrid between).
ResidualField residual_f_eta(const FlowTrace& trace, const PinchingParams& params,
                             std::size_t t_index, double eta);

struct LpRecord {
  double p = 0.0;
  double sigma = 0.0;
  double eta = 0.0;
  std::vector<double> t;
  std::vector<double> norm;  ///< integral of f_+^p dmu
  double fitted_rate = std::numeric_limits<double>::quiet_NaN();
  double bound_rate = 0.0;  ///< -delta p K
  double C_min = 0.0;       ///< max_t norm(t) e^{delta p K t}
  bool vacuous = false;     ///< f_+ vanished identically
  bool satisfied = false;   ///< C_min <= 1.02 norm(0)
};

LpRecord lp_decay(const FlowTrace& trace, const PinchingParams& params, double p,
                  double sigma, double eta);

/// lambda -> c lambda, K -> c^2 K, t -> t/c^2 applied to a whole trace.
FlowTrace rescaled_trace(const FlowTrace& trace, double c);

}  // namespace pinchflow
