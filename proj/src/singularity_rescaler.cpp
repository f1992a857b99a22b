#include "pinchflow/singularity_rescaler.hpp"

#include <algorithm>
#include <cmath>

#include "pinchflow/error.hpp"

namespace pinchflow {

const char* to_string(BlowupType t) {
  switch (t) {
    case BlowupType::type_I: return "I";
    case BlowupType::type_II: return "II";
    case BlowupType::undecided: return "undecided";
  }
  return "?";
}

namespace {

std::vector<double> max_series(const FlowTrace& tr) {
  std::vector<double> m;
  for (const auto& s : tr.snapshots) m.push_back(s.max_A2());
  return m;
}

}  // namespace

double extrapolate_singular_time(const FlowTrace& tr) {
  const auto M = max_series(tr);
  if (M.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  const double top = M.back();
  // Times are taken relative to the last snapshot: the last decade can be
  // far narrower than t itself.
  const double t_ref = tr.snapshots.back().t;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < M.size(); ++k) {
    if (M[k] < 0.1 * top) continue;
    xs.push_back(tr.snapshots[k].t - t_ref);
    ys.push_back(1.0 / M[k]);
  }
  const double n = static_cast<double>(xs.size());
  if (n < 3) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  if (!(slope < 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return t_ref + (mx - my / slope);
}

BlowupRecord classify_type(const FlowTrace& tr) {
  BlowupRecord r;
  if (tr.snapshots.empty()) throw Error(ErrorCode::invalid_argument, "trace has no snapshots");
  const auto M = max_series(tr);
  const double lo = *std::min_element(M.begin(), M.end());
  r.decades = std::log10(M.back() / lo);
  if (!(r.decades >= 1.0)) {
    r.message = "less than one decade of curvature growth";
    return r;
  }
  r.T = extrapolate_singular_time(tr);
  if (!std::isfinite(r.T) || r.T <= tr.snapshots.back().t) {
    r.message = "singular time could not be extrapolated";
    r.T = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  double sup_before = 0.0;
  const double last_decade = 0.1 * M.back();
  for (std::size_t k = 0; k < M.size(); ++k) {
    const double f = (r.T - tr.snapshots[k].t) * M[k];
    r.t.push_back(tr.snapshots[k].t);
    r.functional.push_back(f);
    r.functional_sup = std::max(r.functional_sup, f);
    if (M[k] < last_decade) sup_before = std::max(sup_before, f);
  }
  if (!(sup_before > 0.0)) {
    r.message = "no snapshots before the last decade";
    return r;
  }
  r.last_decade_increase = r.functional_sup / sup_before - 1.0;
  r.type = r.last_decade_increase < 0.05 ? BlowupType::type_I : BlowupType::type_II;
  return r;
}

double model_distance(const std::vector<double>& u, int k) {
  const int n = static_cast<int>(u.size());
  if (k < 0 || k >= n) throw Error(ErrorCode::invalid_argument, "model index out of range");
  std::vector<double> model(n, 0.0);
  for (int i = k; i < n; ++i) model[i] = 1.0 / std::sqrt(static_cast<double>(n - k));
  double best = std::numeric_limits<double>::infinity();
  for (double sign : {1.0, -1.0}) {
    std::vector<double> v(u);
    for (auto& x : v) x *= sign;
    std::sort(v.begin(), v.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) d += (v[i] - model[i]) * (v[i] - model[i]);
    best = std::min(best, std::sqrt(d));
  }
  return best;
}

namespace {

RescaledSpectrum rescale_at(const FlowTrace& tr, std::size_t k, std::size_t i, double T, int m) {
  const Snapshot& s = tr.snapshots[k];
  const auto& g = s.geometry[i];
  const auto spec = spectrum_of(g, tr.sym);
  RescaledSpectrum out;
  out.t = s.t;
  out.snapshot = k;
  out.index = i;
  const double A = std::sqrt(spec.A_norm_sq());
  const double c = std::sqrt(T - s.t);
  for (double l : spec.values()) {
    out.rescaled.push_back(c * l);
    out.normalized.push_back(l / A);
  }
  for (int kk = 0; kk < m; ++kk) {
    out.distances.push_back(model_distance(out.normalized, kk));
    if (out.distances.back() < out.model_distance) {
      out.model_distance = out.distances.back();
      out.best_k = kk;
    }
  }
  const int n = tr.n();
  const double H2 = g.H * g.H;
  out.max_H2_over_K = H2 / tr.K;
  out.neck_ratio = H2 > 0.0 ? (g.A_norm_sq - H2 / (n - 1)) / H2 : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace

BlowupRecord rescale_type_I(const FlowTrace& tr, int m) {
  if (m < 1 || m > tr.n()) throw Error(ErrorCode::invalid_argument, "m out of range");
  BlowupRecord r = classify_type(tr);
  if (r.type != BlowupType::type_I) {
    throw Error(ErrorCode::invalid_argument,
                std::string("rescaling needs a type-I trace; classified as ") + to_string(r.type));
  }
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    const Snapshot& s = tr.snapshots[k];
    if (s.t >= r.T) continue;
    const std::size_t imax = s.argmax_A2();
    r.rescaled.push_back(rescale_at(tr, k, imax, r.T, m));
  }
  // Rival peaks of |A|^2 at the last snapshot: within 1% of the top and
  // separated from every accepted peak by a dip of more than 1%. A plateau
  // (homogeneous collapse) is one peak.
  const std::size_t last = r.rescaled.back().snapshot;
  const auto& G = tr.snapshots[last].geometry;
  const double top = G[r.rescaled.back().index].A_norm_sq;
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < G.size(); ++i) {
    const bool left = i == 0 || G[i].A_norm_sq >= G[i - 1].A_norm_sq;
    const bool right = i + 1 == G.size() || G[i].A_norm_sq >= G[i + 1].A_norm_sq;
    if (left && right && G[i].A_norm_sq >= 0.99 * top) cand.push_back(i);
  }
  std::stable_sort(cand.begin(), cand.end(),
                   [&](std::size_t x, std::size_t y) { return G[x].A_norm_sq > G[y].A_norm_sq; });
  std::vector<std::size_t> peaks{r.rescaled.back().index};
  for (std::size_t c : cand) {
    bool separate = true;
    for (std::size_t pk : peaks) {
      double dip = G[c].A_norm_sq;
      for (std::size_t i = std::min(c, pk); i <= std::max(c, pk); ++i) dip = std::min(dip, G[i].A_norm_sq);
      separate = separate && dip < 0.99 * G[c].A_norm_sq;
    }
    if (!separate) continue;
    peaks.push_back(c);
    r.competing.push_back(rescale_at(tr, last, c, r.T, m));
  }
  r.best_k = r.rescaled.back().best_k;
  return r;
}

std::vector<PickedPoint> pick_type_II_points(const FlowTrace& tr) {
  const BlowupRecord r = classify_type(tr);
  if (r.type != BlowupType::type_II) {
    throw Error(ErrorCode::invalid_argument,
                std::string("point picking needs a type-II trace; classified as ") + to_string(r.type));
  }
  const auto M = max_series(tr);
  const double t0 = tr.snapshots.front().t;
  const double t_last = tr.snapshots.back().t;
  std::vector<PickedPoint> out;
  long prev_j = 0;
  for (int e = 2; e < 200; ++e) {
    const long j = static_cast<long>(std::ceil(std::pow(2.0, 0.5 * e)));
    if (j == prev_j) continue;
    prev_j = j;
    const double Tj = r.T - (r.T - t0) / static_cast<double>(j);
    if (Tj > t_last) break;
    PickedPoint best;
    double score = -1.0;
    for (std::size_t k = 0; k < M.size() && tr.snapshots[k].t <= Tj; ++k) {
      const double v = M[k] * (Tj - tr.snapshots[k].t);
      if (v > score) {
        score = v;
        best.snapshot = k;
      }
    }
    const Snapshot& s = tr.snapshots[best.snapshot];
    best.j = j;
    best.T_j = Tj;
    best.t = s.t;
    best.index = s.argmax_A2();
    best.A2 = M[best.snapshot];
    best.r = 1.0 / std::sqrt(best.A2);
    out.push_back(best);
  }
  return out;
}

}  // namespace pinchflow
