#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "pinchflow/curvature_algebra.hpp"

namespace pinchflow {

/// Point (a, b, z) of the orbit space {a, b >= 0, a^2 + b^2 + z^2 = 1/K}.
/// When a block has size one its coordinate is signed.
using Vec3 = std::array<double, 3>;

/// SO(p) x SO(q) symmetry with p + q = n + 1. Generic orbits are
/// S^{p-1} x S^{q-1}.
struct SymmetryType {
  int p = 1;
  int q = 1;

  int n() const { return p + q - 1; }
  int mult_a() const { return p - 1; }
  int mult_b() const { return q - 1; }
};

struct PointGeometry {
  double kappa = 0.0;  ///< geodesic curvature of the profile
  double lam_a = 0.0;  ///< multiplicity p-1
  double lam_b = 0.0;  ///< multiplicity q-1
  double H = 0.0;
  double A_norm_sq = 0.0;
  double grad_A_sq = std::numeric_limits<double>::quiet_NaN();
  double hess_A_sq = std::numeric_limits<double>::quiet_NaN();
  double grad_H_sq = std::numeric_limits<double>::quiet_NaN();
  double area_weight = std::numeric_limits<double>::quiet_NaN();
};

struct Snapshot {
  double t = 0.0;
  long step = 0;
  bool regridded = false;  ///< grid was redistributed right before this snapshot
  std::vector<Vec3> profile;
  std::vector<double> sigma;  ///< arclength coordinate
  std::vector<PointGeometry> geometry;

  double max_A2() const;
  double min_A2() const;
  std::size_t argmax_A2() const;
};

enum class TerminalEvent { none, extinction, singularity, horizon, degenerate, aborted };

const char* to_string(TerminalEvent e);

struct FlowTrace {
  std::string source;  ///< "hyperparallel", "clifford", "equivariant", "synthetic"
  SymmetryType sym;
  double K = 1.0;
  bool has_profile = false;      ///< snapshots carry a discretized profile
  bool has_derivatives = false;  ///< |grad A|^2, |grad^2 A|^2 are populated
  bool has_area = false;
  std::vector<Snapshot> snapshots;
  TerminalEvent terminal = TerminalEvent::none;
  double terminal_time = std::numeric_limits<double>::quiet_NaN();
  /// Extinction or singular time, when the producing solver can estimate it.
  double singular_time = std::numeric_limits<double>::quiet_NaN();
  std::string message;

  int n() const { return sym.n(); }
};

/// Full spectrum (kappa, lam_a x (p-1), lam_b x (q-1)) at a grid point.
ShapeSpectrum spectrum_of(const PointGeometry& g, const SymmetryType& sym);

/// Shift every time stamp by dt.
FlowTrace time_shifted(FlowTrace trace, double dt);

}  // namespace pinchflow
