#pragma once

// Type-I / type-II classification of finite-time singularities and
// spectrum-level comparison of type-I blow-ups with shrinking spheres and
// cylinders R^k x S^{n-k}.

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "pinchflow/trace.hpp"

namespace pinchflow {

enum class BlowupType { type_I, type_II, undecided };

const char* to_string(BlowupType t);

struct RescaledSpectrum {
  double t = 0.0;
  std::size_t snapshot = 0;
  std::size_t index = 0;          ///< grid point carrying max|A|^2
  std::vector<double> rescaled;   ///< sqrt(T - t) lambda, ascending
  std::vector<double> normalized; ///< lambda / |A|, ascending
  std::vector<double> distances;  ///< to the model with k flat directions, k = 0..m-1
  int best_k = -1;
  double model_distance = std::numeric_limits<double>::infinity();
  double max_H2_over_K = 0.0;
  double neck_ratio = 0.0;        ///< (|A|^2 - H^2/(n-1)) / H^2 at the point
};

struct BlowupRecord {
  BlowupType type = BlowupType::undecided;
  double T = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> t;
  std::vector<double> functional;  ///< (T - t) max|A|^2
  double functional_sup = 0.0;
  double decades = 0.0;            ///< log10 of the growth of max|A|^2
  double last_decade_increase = std::numeric_limits<double>::quiet_NaN();
  std::vector<RescaledSpectrum> rescaled;
  std::vector<RescaledSpectrum> competing;  ///< rival maxima of |A|^2, when present
  int best_k = -1;                          ///< model matched at the last snapshot
  std::string message;
};

/// T from a least-squares line through 1/max|A|^2 over the last decade of
/// curvature growth. NaN when the data does not determine it.
double extrapolate_singular_time(const FlowTrace& trace);

/// Type I when the running sup of (T - t) max|A|^2 grows by less than 5%
/// across the last decade of curvature growth; undecided with less than one
/// decade of growth.
BlowupRecord classify_type(const FlowTrace& trace);

/// Model distances (sorted Euclidean, minimized over orientation) of the
/// normalized spectrum against (0^k, 1^{n-k})/sqrt(n-k), k = 0..m-1.
/// Throws Error(invalid_argument) unless the trace classifies as type I.
BlowupRecord rescale_type_I(const FlowTrace& trace, int m);

/// Distance of a unit spectrum to the k-model, invariant under permutation
/// and overall sign.
double model_distance(const std::vector<double>& unit_spectrum, int k);

struct PickedPoint {
  long j = 0;
  double T_j = 0.0;  ///< T - (T - t_0)/j
  double t = 0.0;
  std::size_t snapshot = 0;
  std::size_t index = 0;
  double A2 = 0.0;
  double r = 0.0;  ///< |A|^{-1}
};

/// Hamilton's point picking: maximize |A|^2(p, t)(T_j - t) over t <= T_j,
/// along a geometric sequence of j. Throws Error(invalid_argument) unless the
/// trace classifies as type II.
std::vector<PickedPoint> pick_type_II_points(const FlowTrace& trace);

}  // namespace pinchflow
