#include "pinchflow/trace.hpp"

#include <algorithm>
#include <cmath>

namespace pinchflow {

double Snapshot::max_A2() const {
  double m = 0.0;
  for (const auto& g : geometry) m = std::max(m, g.A_norm_sq);
  return m;
}

double Snapshot::min_A2() const {
  if (geometry.empty()) return 0.0;
  double m = geometry.front().A_norm_sq;
  for (const auto& g : geometry) m = std::min(m, g.A_norm_sq);
  return m;
}

std::size_t Snapshot::argmax_A2() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < geometry.size(); ++i) {
    if (geometry[i].A_norm_sq > geometry[best].A_norm_sq) best = i;
  }
  return best;
}

const char* to_string(TerminalEvent e) {
  switch (e) {
    case TerminalEvent::none: return "none";
    case TerminalEvent::extinction: return "extinction";
    case TerminalEvent::singularity: return "singularity";
    case TerminalEvent::horizon: return "horizon";
    case TerminalEvent::degenerate: return "degenerate";
    case TerminalEvent::aborted: return "aborted";
  }
  return "unknown";
}

ShapeSpectrum spectrum_of(const PointGeometry& g, const SymmetryType& sym) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(sym.n()));
  v.push_back(g.kappa);
  v.insert(v.end(), static_cast<std::size_t>(sym.mult_a()), g.lam_a);
  v.insert(v.end(), static_cast<std::size_t>(sym.mult_b()), g.lam_b);
  return ShapeSpectrum(std::move(v));
}

FlowTrace time_shifted(FlowTrace trace, double dt) {
  for (auto& s : trace.snapshots) s.t += dt;
  trace.terminal_time += dt;
  trace.singular_time += dt;
  return trace;
}

}  // namespace pinchflow
