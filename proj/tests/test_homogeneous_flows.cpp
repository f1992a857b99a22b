#include <array>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pinchflow/homogeneous_flows.hpp"

using namespace pinchflow;
using std::numbers::pi;

namespace {

PinchingParams params(int n, int m, double alpha, double K) {
  return PinchingParams{n, m, alpha, K, 1.0e3, 1.0e4};
}

using V5 = std::array<double, 5>;

// Torus S^1(r) x S^2(s) in R^5 with r = cos(phi), s = sin(phi); coordinates
// (theta, u, v) with u the polar angle on S^2.
V5 torus_point(double phi, double th, double u, double v) {
  const double r = std::cos(phi), s = std::sin(phi);
  return {r * std::cos(th), r * std::sin(th), s * std::sin(u) * std::cos(v),
          s * std::sin(u) * std::sin(v), s * std::cos(u)};
}

// Laplace-Beltrami of the embedding in orthogonal coordinates, by nested
// central differences. For the unit sphere S^4, Delta X + n X is the mean
// curvature vector of the hypersurface inside S^4, i.e. the MCF velocity.
V5 mcf_velocity(double phi, double th, double u, double v) {
  const double r = std::cos(phi), s = std::sin(phi);
  const double h = 1e-4;
  auto sqrtg = [&](double uu) { return r * s * s * std::sin(uu); };
  const double g0 = sqrtg(u);
  V5 lap{};
  for (int c = 0; c < 5; ++c) {
    auto X = [&](double a, double b, double d) { return torus_point(phi, a, b, d)[c]; };
    const double d_th = (X(th + h, u, v) - 2 * X(th, u, v) + X(th - h, u, v)) / (h * h) / (r * r);
    auto flux_u = [&](double uu) {
      return sqrtg(uu) / (s * s) * (X(th, uu + h, v) - X(th, uu - h, v)) / (2 * h);
    };
    const double d_u = (flux_u(u + h) - flux_u(u - h)) / (2 * h) / g0;
    const double gvv = s * s * std::sin(u) * std::sin(u);
    const double d_v = (X(th, u, v + h) - 2 * X(th, u, v) + X(th, u, v - h)) / (h * h) / gvv;
    lap[c] = d_th + d_u + d_v;
  }
  const V5 x = torus_point(phi, th, u, v);
  for (int c = 0; c < 5; ++c) lap[c] += 3.0 * x[c];
  return lap;
}

}  // namespace

TEST_CASE("equator is stationary") {
  auto run = hyperparallel_flow(pi / 2, params(3, 1, 0.5, 1.0), 2.0);
  CHECK_FALSE(run.extinct);
  CHECK(run.trace.terminal == TerminalEvent::horizon);
  for (const auto& s : run.trace.snapshots) {
    CHECK(s.geometry[0].H == 0.0);
    CHECK(s.profile[0][0] == doctest::Approx(1.0));
  }
}

TEST_CASE("hyperparallel extinction matches the closed form") {
  const double T = std::log(2.0) / 3.0;
  CHECK(hyperparallel_extinction_time(3, 1.0, pi / 3) == doctest::Approx(T).epsilon(1e-15));
  auto run = hyperparallel_flow(pi / 3, params(3, 1, 0.5, 1.0), 1.0);
  REQUIRE(run.extinct);
  CHECK(std::abs(run.extinction_time - T) / T < 1e-8);

  for (int n : {3, 4}) {
    for (double K : {1.0, 4.0}) {
      for (double rho : {pi / 6, pi / 3}) {
        const double r0 = rho / std::sqrt(K);
        auto r = hyperparallel_flow(r0, params(n, 1, 0.5, K), 10.0);
        const double Tc = hyperparallel_extinction_time(n, K, r0);
        REQUIRE(r.extinct);
        CHECK(std::abs(r.extinction_time - Tc) / Tc < 1e-8);
      }
    }
  }
}

TEST_CASE("trace follows the closed-form radius") {
  auto run = hyperparallel_flow(1.0, params(4, 1, 0.5, 1.0), 1.0);
  for (const auto& s : run.trace.snapshots) {
    // cos(rho) is well conditioned all the way to extinction.
    const double c = s.profile[0][2];
    CHECK(c == doctest::Approx(std::cos(1.0) * std::exp(4.0 * s.t)).epsilon(1e-9));
  }
}

TEST_CASE("antipodal collapse") {
  const double rho0 = 2.0;
  auto run = hyperparallel_flow(rho0, params(3, 1, 0.5, 1.0), 5.0);
  REQUIRE(run.extinct);
  CHECK(run.extinction_time ==
        doctest::Approx(hyperparallel_extinction_time(3, 1.0, rho0)).epsilon(1e-8));
}

TEST_CASE("type-I sphere signature near extinction") {
  auto run = hyperparallel_flow(pi / 3, params(3, 1, 0.5, 1.0), 1.0);
  const double T = run.extinction_time;
  const auto& last = run.trace.snapshots.back();
  CHECK((T - last.t) * last.max_A2() == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("ancient hyperparallel") {
  auto p = params(4, 2, 0.5, 1.0);
  auto trace = ancient_hyperparallel(p, -3.0);
  REQUIRE(trace.snapshots.size() > 3);
  CHECK(trace.snapshots.front().t == doctest::Approx(-3.0));
  CHECK(trace.snapshots.back().t == 0.0);
  const auto& early = trace.snapshots.front().geometry[0];
  const double g_early = g_m_alpha(early.H, early.A_norm_sq, 4, 2, 0.5, 1.0);
  CHECK(g_early == doctest::Approx(-2.0 * (2 - 0.5)).epsilon(1e-6));
  auto co = coefficients(p, 0.01);
  for (const auto& s : trace.snapshots) {
    const auto& g = s.geometry[0];
    CHECK(f_eta_value(g.H, g.A_norm_sq, co) / W_value(g.H, co, 1.0) <= 0.0);
    CHECK(g_m_alpha(g.H, g.A_norm_sq, 4, 2, 0.5, 1.0) < 0.0);
  }
  // Forward continuation from rho(0) reproduces the extinction time.
  const double rho0 = std::atan2(trace.snapshots.back().profile[0][0],
                                 trace.snapshots.back().profile[0][2]);
  auto fwd = hyperparallel_flow(rho0, p, 100.0);
  REQUIRE(fwd.extinct);
  CHECK(fwd.extinction_time == doctest::Approx(hyperparallel_extinction_time(4, 1.0, rho0)).epsilon(1e-8));
}

TEST_CASE("minimal Clifford torus is stationary and unstable") {
  const int n = 4, m = 1;
  const double phi = clifford_minimal_phi(n, m);
  CHECK(std::abs(clifford_H(n, m, phi, 1.0)) < 1e-14);
  auto still = clifford_flow(params(n, m, 0.5, 1.0), phi, 1.0);
  for (const auto& s : still.trace.snapshots) CHECK(s.profile[0][2] == doctest::Approx(std::sin(phi)));

  // Finite-difference linearization of the phi equation at the fixed point.
  const double h = 1e-6;
  const double slope = (clifford_phi_rate(n, m, phi + h, 1.0) - clifford_phi_rate(n, m, phi - h, 1.0)) / (2 * h);
  CHECK(slope > 0.0);

  for (double d : {-1e-3, 1e-3}) {
    auto run = clifford_flow(params(n, m, 0.5, 1.0), phi + d, 20.0);
    CHECK(run.collapsed);
    double prev = d;
    for (const auto& s : run.trace.snapshots) {
      const double cur = std::atan2(s.profile[0][2], s.profile[0][0]) - phi;
      CHECK(cur * d > 0.0);
      CHECK(std::abs(cur) >= std::abs(prev) * (1 - 1e-12));
      prev = cur;
    }
  }
}

TEST_CASE("Clifford excess along a trace matches the pinching report") {
  for (auto [n, m] : {std::pair{4, 1}, std::pair{5, 2}, std::pair{6, 2}}) {
    const double K = 2.0;
    auto run = clifford_flow(params(n, m, 0.5, K), 0.6, 1.0);
    for (const auto& s : run.trace.snapshots) {
      const double phi = std::atan2(s.profile[0][2], s.profile[0][0]);
      auto spec = spectrum_of(s.geometry[0], run.trace.sym);
      auto cf = clifford_closed_form(n, m, std::cos(phi), K);
      const double excess = spec.A_norm_sq() - spec.H() * spec.H() / (n - m) - 2.0 * m * K;
      CHECK(excess == doctest::Approx(cf.excess).epsilon(1e-10).scale(spec.A_norm_sq()));
      CHECK(spec.H() == doctest::Approx(clifford_H(n, m, phi, K)).epsilon(1e-12));
    }
  }
}

TEST_CASE("no Clifford torus satisfies the uniform pinching") {
  for (int n = 2; n <= 8; ++n) {
    for (int m = 1; 2 * m <= n; ++m) {
      for (double alpha : {0.05, 0.5, 0.95}) {
        PinchingParams p = params(n, m, alpha, 1.0);
        if (!admissible(p)) continue;
        for (int i = 1; i <= 1000; ++i) {
          const double phi = 0.5 * pi * i / 1001.0;
          auto s = spectrum_of(clifford_geometry(n, m, 1.0, phi), SymmetryType{m + 1, n - m});
          CHECK(g_m_alpha(s.H(), s.A_norm_sq(), n, m, alpha, 1.0) > 0.0);
        }
      }
    }
  }
}

TEST_CASE("odd n, m = (n+1)/2: thin S^m factors enter the class") {
  // The split coincides with S^{m-1} x S^{n-m+1}; collapsing the S^m factor
  // approaches the cylinder R^{m-1} x S^m, which the class allows.
  for (int n : {3, 5, 7}) {
    const int m = (n + 1) / 2;
    PinchingParams p = params(n, m, 0.95, 1.0);
    REQUIRE(admissible(p));
    auto thin = spectrum_of(clifford_geometry(n, m, 1.0, 0.5 * pi - 1e-3), SymmetryType{m + 1, n - m});
    CHECK(g_m_alpha(thin.H(), thin.A_norm_sq(), n, m, 0.95, 1.0) < 0.0);
    auto fat = spectrum_of(clifford_geometry(n, m, 1.0, 1e-3), SymmetryType{m + 1, n - m});
    CHECK(g_m_alpha(fat.H(), fat.A_norm_sq(), n, m, 0.95, 1.0) > 0.0);
  }
}

TEST_CASE("orientation of the Clifford equation agrees with the embedded torus") {
  // n = 3, split m = 1: S^1(r) x S^2(s) in S^4.
  for (double phi : {0.4, 0.7, 1.1}) {
    const V5 v = mcf_velocity(phi, 0.3, 1.2, 0.5);
    const double r = std::cos(phi), s = std::sin(phi);
    const V5 x = torus_point(phi, 0.3, 1.2, 0.5);
    // d/dphi of the embedding.
    const V5 dphi{-s * x[0] / r, -s * x[1] / r, r * x[2] / s, r * x[3] / s, r * x[4] / s};
    double along = 0.0;
    for (int c = 0; c < 5; ++c) along += v[c] * dphi[c];
    CHECK(along == doctest::Approx(clifford_phi_rate(3, 1, phi, 1.0)).epsilon(1e-5));
  }
}

TEST_CASE("time translation shifts traces exactly") {
  auto run = hyperparallel_flow(1.0, params(3, 1, 0.5, 1.0), 1.0);
  auto shifted = time_shifted(run.trace, 2.5);
  REQUIRE(shifted.snapshots.size() == run.trace.snapshots.size());
  for (std::size_t i = 0; i < shifted.snapshots.size(); ++i) {
    CHECK(shifted.snapshots[i].t == run.trace.snapshots[i].t + 2.5);
    CHECK(shifted.snapshots[i].geometry[0].H == run.trace.snapshots[i].geometry[0].H);
  }
}
