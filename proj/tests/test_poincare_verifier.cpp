#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "pinchflow/error.hpp"
#include "pinchflow/poincare_verifier.hpp"

using namespace pinchflow;

namespace {

struct Config {
  PinchingParams p;
  double eta;
};

const std::vector<Config>& configs() {
  static const std::vector<Config> c{{{4, 2, 0.5}, 0.01}, {{5, 2, 0.5}, 0.01}, {{6, 3, 0.6}, 0.005}};
  return c;
}

// Brute-force oracle: the ratio along random feasible spectra never beats gamma_hat by much.
double sampled_min(const PinchingParams& p, double eta, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double best = INFINITY;
  std::vector<double> l(p.n);
  for (int s = 0; s < samples; ++s) {
    for (auto& x : l) x = N01(rng);
    const double scale = std::exp(4.0 * U(rng) - 2.0);
    for (auto& x : l) x *= scale;
    if (!in_U(l, p, eta, 0.0)) continue;
    best = std::min(best, poincare_ratio(l, p, eta));
  }
  return best;
}

// Grid oracle over two-group directions (1^k, r^{n-k}), r in [-1, 1], with a
// log scan in scale refined by golden section. The minimizers live there.
double two_group_grid_min(const PinchingParams& p, double eta, int cells) {
  double best = INFINITY;
  std::vector<double> l(p.n);
  auto R = [&](int k, double r, double s) {
    for (int i = 0; i < p.n; ++i) l[i] = s * (i < k ? 1.0 : r);
    return in_U(l, p, eta, 1e-12) ? poincare_ratio(l, p, eta) : INFINITY;
  };
  const double cf = 1.0 / (p.n - p.m + 1) + eta;
  for (int k = 1; k < p.n; ++k) {
    std::vector<double> rs;
    for (int i = 0; i <= cells; ++i) rs.push_back(-1.0 + 2.0 * i / cells);
    // f = 0 edge: k + (n-k) r^2 - cf (k + (n-k) r)^2 = 0.
    const double j = p.n - k;
    const double qa = j - cf * j * j, qb = -2.0 * cf * k * j, qc = k - cf * k * k;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0)
      for (double sg : {-1.0, 1.0}) rs.push_back((-qb + sg * std::sqrt(disc)) / (2.0 * qa));
    for (double r : rs) {
      double sb = 0.0, vb = INFINITY;
      for (int j = 0; j <= 300; ++j) {
        const double sc = std::pow(10.0, -2.0 + 5.0 * j / 300);
        const double v = R(k, r, sc);
        if (v < vb) vb = v, sb = sc;
      }
      if (!std::isfinite(vb)) continue;
      double lo = sb / 1.04, hi = sb * 1.04;
      for (int it = 0; it < 60; ++it) {
        const double m1 = lo + 0.382 * (hi - lo), m2 = lo + 0.618 * (hi - lo);
        (R(k, r, m1) < R(k, r, m2) ? hi : lo) = (R(k, r, m1) < R(k, r, m2) ? m2 : m1);
      }
      best = std::min({best, vb, R(k, r, 0.5 * (lo + hi))});
    }
  }
  return best;
}

}  // namespace

TEST_CASE("gamma_hat is positive, feasible and below the zero spectrum") {
  for (const auto& c : configs()) {
    const auto cert = min_ratio(c.p, c.eta, 90, 1);
    const double b = 2.0 * (c.p.m - c.p.alpha);
    CHECK(cert.gamma_hat > 0.0);
    CHECK(cert.gamma_hat <= 1.0 / (b * b * b) * (1.0 + 1e-12));
    CHECK(cert.feasible);
    CHECK(in_U(cert.minimizer, c.p, c.eta));
    CHECK(std::is_sorted(cert.minimizer.begin(), cert.minimizer.end()));
    CHECK(poincare_ratio(cert.minimizer, c.p, c.eta) == doctest::Approx(cert.gamma_hat).epsilon(1e-12));
    // Random sampling does not find anything better.
    CHECK(sampled_min(c.p, c.eta, 200000, 3) >= cert.gamma_hat * (1.0 - 1e-6));
    const double grid = two_group_grid_min(c.p, c.eta, 4000);
    CHECK(grid >= cert.gamma_hat * (1.0 - 1e-6));
    CHECK(grid <= cert.gamma_hat * 1.01);
  }
}

TEST_CASE("gamma_hat is stable under doubling the budget") {
  for (const auto& c : configs()) {
    const double g1 = min_ratio(c.p, c.eta, 60, 5).gamma_hat;
    const double g2 = min_ratio(c.p, c.eta, 120, 5).gamma_hat;
    CHECK(std::abs(g2 - g1) < 0.05 * g1);
    CHECK(g2 <= g1);  // the larger run contains the smaller one's starts
  }
}

TEST_CASE("bit-reproducible and independent of the job count") {
  const auto& c = configs()[1];
  const auto a = min_ratio(c.p, c.eta, 30, 11, 1);
  const auto b = min_ratio(c.p, c.eta, 30, 11, 1);
  const auto d = min_ratio(c.p, c.eta, 30, 11, 4);
  CHECK(a.gamma_hat == b.gamma_hat);
  CHECK(a.gamma_hat == d.gamma_hat);
  CHECK(a.minimizer == d.minimizer);
  CHECK(min_ratio(c.p, c.eta, 30, 12).gamma_hat != a.gamma_hat);
}

TEST_CASE("ratio is invariant under permutation and scaling") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> N01;
  const auto& c = configs()[2];
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> l(c.p.n);
    for (auto& x : l) x = N01(rng);
    const double r = poincare_ratio(l, c.p, c.eta);
    auto v = l;
    std::shuffle(v.begin(), v.end(), rng);
    CHECK(poincare_ratio(v, c.p, c.eta) == doctest::Approx(r).epsilon(1e-13));
    for (double s : {0.1, 3.0, 50.0}) {
      auto w = l;
      for (auto& x : w) x *= s;
      CHECK(poincare_ratio(w, c.p, c.eta, s * s) == doctest::Approx(r).epsilon(1e-12));
    }
  }
}

TEST_CASE("gamma_hat does not increase as eta decreases") {
  const PinchingParams p{5, 2, 0.5};
  double prev = INFINITY;
  for (double eta : {0.03, 0.02, 0.01}) {
    const double g = min_ratio(p, eta, 60, 9).gamma_hat;
    CHECK(g <= prev * (1.0 + 1e-3));
    prev = g;
  }
}

TEST_CASE("Clifford ray drives the ratio to zero while leaving U") {
  for (const auto& c : configs()) {
    const auto ray = clifford_ray_witness(c.p, c.eta);
    REQUIRE(ray.size() == 3);
    const auto& far = ray.back();
    CHECK(far.t == 1000.0);
    CHECK(far.ratio < 1e-12);
    CHECK(far.C_norm_sq < 1e-9 * far.W * far.W * far.W);
    CHECK(far.g > 0.0);
    CHECK_FALSE(in_U(far.lambda, c.p, c.eta));
    for (std::size_t i = 1; i < ray.size(); ++i) CHECK(ray[i].ratio < ray[i - 1].ratio);
    // lambda_hat -> (c, ..., c, 0, ..., 0) with c^2 = 1/(a m^2).
    const double top = far.lambda_hat.front();
    for (int i = 0; i < c.p.m; ++i) CHECK(far.lambda_hat[i] == doctest::Approx(top).epsilon(1e-5));
    for (int i = c.p.m; i < c.p.n; ++i) CHECK(std::abs(far.lambda_hat[i]) < 1e-5);
  }
}

TEST_CASE("multiplicity gap holds across admissible parameters") {
  for (int n = 3; n <= 8; ++n)
    for (int m = 1; m <= (n + 1) / 2; ++m)
      for (double alpha : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const PinchingParams p{n, m, alpha};
        if (!admissible(p)) continue;
        const double top = 1.0 / (n - m + alpha) - 1.0 / (n - m + 1);
        for (double frac : {0.01, 0.5, 0.99}) {
          const auto v = multiplicity_gap_check(p, frac * top);
          CHECK(v.pass);
          CHECK(v.rows.size() == static_cast<std::size_t>(n));
        }
      }
  // (5, 2): ell = 1 misses the first condition by exactly 16 eta.
  const auto a = multiplicity_gap_check({5, 2, 0.5}, 0.01);
  CHECK(a.rows[1].first_margin == doctest::Approx(-0.16));
  CHECK_FALSE(a.rows[1].first_holds);
  CHECK(a.rows[1].second_holds);
  // (4, 2): ell = 3 misses the second.
  const auto b = multiplicity_gap_check({4, 2, 0.5}, 0.01);
  CHECK(b.rows[3].second_margin < 0.0);
  CHECK_FALSE(b.rows[3].second_holds);
}

TEST_CASE("refusals") {
  CHECK_THROWS_AS(min_ratio({2, 1, 0.5}, 0.01, 10, 1), Error);
  CHECK_THROWS_AS(min_ratio({4, 2, 0.5}, 0.0, 10, 1), RangeError);
  CHECK_THROWS_AS(min_ratio({4, 2, 0.5}, 0.2, 10, 1), RangeError);
  CHECK_THROWS_AS(min_ratio({4, 2, 0.5}, 0.01, 0, 1), Error);
  CHECK_THROWS_AS(min_ratio({4, 3, 0.5}, 0.01, 10, 1), InadmissibleError);
}
