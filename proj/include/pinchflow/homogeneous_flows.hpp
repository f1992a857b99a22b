#pragma once

// Mean curvature flow of the two homogeneous families in S^{n+1}_K, reduced
// to scalar ODEs: geodesic spheres (hyperparallels) and generalized Clifford
// tori S^m(r) x S^{n-m}(s).

#include "pinchflow/curvature_algebra.hpp"
#include "pinchflow/trace.hpp"

namespace pinchflow {

struct HyperparallelState {
  double rho = 0.0;  ///< geodesic radius, in (0, pi/sqrt(K))
  double t = 0.0;
};

struct CliffordState {
  double phi = 0.0;  ///< r = cos(phi), s = sin(phi)
  double t = 0.0;
};

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-14;
  /// A snapshot is recorded whenever max|A|^2 changed by this factor.
  double growth_factor = 1.1;
  /// ... or this much time elapsed (0 selects horizon/200).
  double snapshot_dt = 0.0;
  /// Switch to the closed-form tail once the collapsing radius (times
  /// sqrt(K)) drops below this value.
  double asymptotic_switch = 1e-4;
};

/// Umbilic geometry of the geodesic sphere of radius rho (inner-normal
/// convention: rho < pi/(2 sqrt K) gives H > 0).
PointGeometry hyperparallel_geometry(int n, double K, double rho);

/// Closed form: cos(sqrt(K) rho(t)) = cos(sqrt(K) rho0) e^{nKt}.
double hyperparallel_rho(int n, double K, double rho0, double t);

/// (1/(nK)) ln sec(sqrt(K) rho0); +inf on the equator.
double hyperparallel_extinction_time(int n, double K, double rho0);

struct HyperparallelRun {
  FlowTrace trace;
  bool extinct = false;
  double extinction_time = 0.0;  ///< valid when extinct
};

HyperparallelRun hyperparallel_flow(double rho0, const PinchingParams& params,
                                    double horizon, const OdeOptions& opts = {});

/// Numerical ancient solution: integrates backwards from just inside the
/// equator, rho(0) = pi/(2 sqrt K) - offset/sqrt(K), down to t_min < 0.
/// Snapshots are returned in increasing time.
FlowTrace ancient_hyperparallel(const PinchingParams& params, double t_min,
                                double offset = 1e-3, const OdeOptions& opts = {});

/// H of S^m(cos phi) x S^{n-m}(sin phi), as in clifford_closed_form.
double clifford_H(int n, int m, double phi, double K);

/// d(phi)/dt = -sqrt(K) H(phi).
double clifford_phi_rate(int n, int m, double phi, double K);

/// Minimal torus: r^2 = m/n.
double clifford_minimal_phi(int n, int m);

/// Geometry in orbit-space form: kappa = lam_b = sqrt(K) r/s (the S^{n-m}
/// side, multiplicity n-m in total) and lam_a = -sqrt(K) s/r (multiplicity m).
PointGeometry clifford_geometry(int n, int m, double K, double phi);

struct CliffordRun {
  FlowTrace trace;
  bool collapsed = false;
  double collapse_time = 0.0;  ///< leading-order estimate, valid when collapsed
};

/// Torus split taken from params.m.
CliffordRun clifford_flow(const PinchingParams& params, double phi0, double horizon,
                          const OdeOptions& opts = {});
CliffordRun clifford_flow(const PinchingParams& params, int split, double phi0,
                          double horizon, const OdeOptions& opts = {});

}  // namespace pinchflow
