#pragma once

// Cohomogeneity-one mean curvature flow: SO(p) x SO(q)-invariant
// hypersurfaces of S^{n+1}_K, p + q = n + 1, evolved through their profile
// curve in the orbit space {(a, b, z) : a^2 + b^2 + z^2 = 1/K}.
//
// The hypersurface generated by a profile point is (a u, b v, z) with u in
// S^{p-1}, v in S^{q-1}. A coordinate whose block has size one is signed and
// does not bound the orbit space. Profiles are arcs whose endpoints lie on
// the axes (a = 0 or b = 0) and meet them orthogonally.
//
// Orientation: with T the unit tangent in the direction of increasing index,
// nu = T x X / R. The descriptors below are traversed so that geodesic
// spheres about the z-pole have H > 0.

#include <optional>
#include <string>
#include <vector>

#include "pinchflow/curvature_algebra.hpp"
#include "pinchflow/trace.hpp"

namespace pinchflow {

struct ClassCVerdict {
  double V_measured = 0.0;      ///< mu_0(M) K^{n/2}
  double Theta_measured = 0.0;  ///< max H^2 / K
  double max_g = 0.0;           ///< max of g_{m,alpha} over the grid
  bool in_class = false;
};

struct FlowState {
  SymmetryType sym;
  double K = 1.0;
  double t = 0.0;
  std::vector<Vec3> points;
  std::optional<ClassCVerdict> class_c;

  double R() const;
  std::size_t size() const { return points.size(); }
};

enum class ShapeKind { geodesic_sphere, clifford_band, dumbbell };

struct ShapeDescriptor {
  ShapeKind kind = ShapeKind::geodesic_sphere;
  // geodesic_sphere: geodesic radius about the z-pole, sqrt(K) rho0 in (0, pi).
  double rho0 = 1.0;
  // clifford_band: angle from the a-pole is phi0 + amplitude cos(mode psi),
  // psi in [0, pi]. Needs p >= 2 and q >= 2; the zero-amplitude band is the
  // torus S^{p-1}(cos phi0) x S^{q}(sin phi0).
  double phi0 = 0.5;
  double amplitude = 0.0;
  int mode = 2;
  // dumbbell (p = 1): Euclidean rotation graph about the a-axis,
  // f(u)^2 = (1 - u^2)(neck^2 + taper u^2 + c u^4), u in [-1, 1], with c
  // chosen so that max f = bulge_ratio; scaled by scale / sqrt(K) and
  // carried to the sphere by the exponential map at the z-pole.
  double neck_ratio = 0.2;
  double bulge_ratio = 0.32;
  double taper = 0.06;
  double scale = 1.2;
};

ShapeKind parse_shape_kind(const std::string& name);
const char* to_string(ShapeKind kind);

/// Builds an N-point profile equidistributed with respect to the solver's
/// monitor and attaches the class verdict. Descriptors that leave the orbit
/// space throw Error(invalid_argument).
FlowState init_profile(const ShapeDescriptor& shape, const SymmetryType& sym,
                       const PinchingParams& params, int N);

/// State from explicit points (endpoints must lie on the axes).
FlowState make_state(const SymmetryType& sym, double K, std::vector<Vec3> points);

/// Arclength coordinate of every grid point, starting at 0.
std::vector<double> arclength(const FlowState& state);

struct GeometryOptions {
  bool derivatives = true;
  bool area = true;
};

std::vector<PointGeometry> geometry(const FlowState& state, const GeometryOptions& opts = {});

/// mu(M): quadrature of the area weight in arclength.
double area(const FlowState& state);

ClassCVerdict classify_class_C(const FlowState& state, const PinchingParams& params);

struct StepPolicy {
  double c_cur = 0.01;          ///< dt <= c_cur / max|A|^2
  double dt_max = 1e-2;         ///< also dt <= dt_max / K
  double dt_min = 1e-14;
  double regrid_drift = 0.05;   ///< regrid when cell masses drift this far
  double stage_safety = 1.2;    ///< inflation of the spectral radius estimate
};

struct StepResult {
  double dt = 0.0;
  int stages = 0;
  int rejected = 0;
  bool regridded = false;
};

/// One Runge-Kutta-Chebyshev step of the normal velocity -H nu (never past
/// t_limit), followed by projection and, if needed, a regrid. Throws
/// NumericalError when the step size underflows dt_min.
StepResult step(FlowState& state, const StepPolicy& policy, double t_limit);

/// Redistributes the grid to equidistribute the monitor.
void regrid(FlowState& state);

/// Largest relative deviation of monitor cell masses from equidistribution.
double monitor_drift(const FlowState& state);

/// Snapshot of the current state with full geometry.
Snapshot take_snapshot(const FlowState& state, long step, bool regridded);

struct EquivariantScenario {
  ShapeDescriptor shape;
  SymmetryType sym{1, 4};
  PinchingParams params;
  int N = 512;
  double horizon = 10.0;
  double singular_threshold = 1e6;  ///< stop when max|A|^2 / K reaches this
  double snapshot_growth = 1.1;     ///< snapshot when max|A|^2 moves by this factor
  double snapshot_dt = 0.0;         ///< ... or this much time passed (0: none)
  long max_steps = 2'000'000;
  StepPolicy policy;
};

struct EquivariantRun {
  FlowTrace trace;
  ClassCVerdict initial_class;
  long steps = 0;
  long regrids = 0;
};

EquivariantRun run(const EquivariantScenario& scenario);

}  // namespace pinchflow
