#include <cmath>
#include <vector>

#include "doctest.h"
#include "qmtk/errors.hpp"
#include "qmtk/fitting.hpp"
#include "qmtk/rng.hpp"

using namespace qmtk;

namespace {

std::vector<ScanPoint> decay_scan(double H, double tau, const std::vector<double>& xs,
                                  double rel_noise, SplitRng* rng) {
  std::vector<ScanPoint> points;
  for (double x : xs) {
    const double y_true = H * std::exp(-x / tau);
    double y = y_true;
    if (rng) y += rel_noise * y_true * rng->gaussian();
    points.push_back({x, y, rel_noise > 0 ? rel_noise * y_true : 0.0});
  }
  return points;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(a + (b - a) * i / (n - 1));
  return xs;
}

double weighted_ssr(const std::vector<ScanPoint>& pts, double H, double tau) {
  double s = 0;
  for (const auto& p : pts) {
    const double w = p.sigma_y > 0 ? 1.0 / (p.sigma_y * p.sigma_y) : 1.0;
    const double r = p.y - H * std::exp(-p.x / tau);
    s += w * r * r;
  }
  return s;
}

}  // namespace

TEST_CASE("noiseless scan is recovered exactly") {
  const auto points = decay_scan(0.054, 2.4e-6, {0.15e-6, 0.5e-6, 1e-6, 2e-6, 4e-6}, 0, nullptr);
  const auto fit = fit_exponential(points);
  CHECK(fit.amplitude == doctest::Approx(0.054).epsilon(1e-10));
  CHECK(fit.tau == doctest::Approx(2.4e-6).epsilon(1e-10));
  CHECK(fit.residual_norm < 1e-10);
}

TEST_CASE("recovered decay constant covers the truth at the quoted significance") {
  // 20-point scan, 2% relative noise; |tau - 2.4 us| < 3 sd nearly always
  const auto xs = linspace(0.15e-6, 8e-6, 20);
  int covered = 0;
  for (int rep = 0; rep < 40; ++rep) {
    SplitRng rng = SplitRng::stream(1234, 9, static_cast<std::uint64_t>(rep));
    const auto points = decay_scan(0.054, 2.4e-6, xs, 0.02, &rng);
    const auto fit = fit_exponential(points);
    if (std::abs(fit.tau - 2.4e-6) < 3 * fit.tau_sd) ++covered;
  }
  CHECK(covered >= 38);
}

TEST_CASE("residuals at the optimum are orthogonal to the Jacobian") {
  SplitRng rng(55);
  const auto xs = linspace(0.1e-6, 6e-6, 15);
  const auto points = decay_scan(0.05, 2.0e-6, xs, 0.05, &rng);
  const auto fit = fit_exponential(points);
  double gH = 0, gT = 0, scale = 0;
  for (const auto& p : points) {
    const double w = 1.0 / (p.sigma_y * p.sigma_y);
    const double e = std::exp(-p.x / fit.tau);
    const double r = p.y - fit.amplitude * e;
    const double jT = fit.amplitude * p.x * e / (fit.tau * fit.tau);
    gH += w * e * r;
    gT += w * jT * r;
    scale += w * (e * e + jT * jT);
  }
  CHECK(std::abs(gH) / scale < 1e-8);
  CHECK(std::abs(gT) / scale < 1e-8);
}

TEST_CASE("analytic gradient agrees with central differences") {
  SplitRng rng(56);
  for (int rep = 0; rep < 10; ++rep) {
    const auto xs = linspace(0.2e-6, 5e-6, 12);
    SplitRng noise = SplitRng::stream(56, 2, static_cast<std::uint64_t>(rep));
    const auto points = decay_scan(0.04 + 0.02 * rng.uniform(), (1.5 + rng.uniform()) * 1e-6, xs,
                                   0.03, &noise);
    const double H = 0.05, tau = 2.1e-6;
    // gradient of the objective: dS/dH = -2 sum w jH r, dS/dtau = -2 sum w jT r
    double gH = 0, gT = 0;
    for (const auto& p : points) {
      const double w = 1.0 / (p.sigma_y * p.sigma_y);
      const double e = std::exp(-p.x / tau);
      const double r = p.y - H * e;
      gH += -2 * w * e * r;
      gT += -2 * w * (H * p.x * e / (tau * tau)) * r;
    }
    const double hH = 1e-7, hT = 1e-13;
    const double fdH =
        (weighted_ssr(points, H + hH, tau) - weighted_ssr(points, H - hH, tau)) / (2 * hH);
    const double fdT =
        (weighted_ssr(points, H, tau + hT) - weighted_ssr(points, H, tau - hT)) / (2 * hT);
    CHECK(gH == doctest::Approx(fdH).epsilon(1e-6));
    CHECK(gT == doctest::Approx(fdT).epsilon(1e-6));
  }
}

TEST_CASE("fit is invariant under rescaling x") {
  SplitRng rng(57);
  const auto xs = linspace(0.15e-6, 8e-6, 20);
  auto points = decay_scan(0.054, 2.4e-6, xs, 0.02, &rng);
  const auto fit_s = fit_exponential(points);
  for (auto& p : points) p.x *= 1e6;  // seconds -> microseconds
  const auto fit_us = fit_exponential(points);
  CHECK(fit_us.tau == doctest::Approx(fit_s.tau * 1e6).epsilon(1e-8));
  CHECK(fit_us.tau_sd == doctest::Approx(fit_s.tau_sd * 1e6).epsilon(1e-6));
  CHECK(fit_us.amplitude == doctest::Approx(fit_s.amplitude).epsilon(1e-8));
}

TEST_CASE("unweighted mode scales the covariance by the residual variance") {
  SplitRng rng(58);
  const auto xs = linspace(0.15e-6, 8e-6, 20);
  auto points = decay_scan(0.054, 2.4e-6, xs, 0.02, &rng);
  const auto weighted = fit_exponential(points);
  const auto unweighted = fit_exponential(points, /*force_unweighted=*/true);
  CHECK_FALSE(unweighted.weighted);
  CHECK(weighted.weighted);
  CHECK(unweighted.tau == doctest::Approx(weighted.tau).epsilon(0.05));
  CHECK(unweighted.tau_sd > 0);
}

TEST_CASE("error paths") {
  CHECK_THROWS_WITH_AS(
      fit_exponential(std::vector<ScanPoint>{{0, 1, 0}, {1, 0.5, 0}}),
      doctest::Contains(">= 3 points"), ConfigError);
  CHECK_THROWS_AS(fit_exponential(std::vector<ScanPoint>{{1, 1, 0}, {1, 2, 0}, {1, 3, 0}}),
                  ConfigError);
  CHECK_THROWS_AS(
      fit_exponential(std::vector<ScanPoint>{{0, 1, 0}, {1, -0.5, 0}, {2, 0.2, 0}}),
      ConfigError);
  // rising data has no decaying optimum
  CHECK_THROWS_WITH_AS(
      fit_exponential(std::vector<ScanPoint>{{0, 1, 0}, {1, 2, 0}, {2, 4, 0}}),
      doctest::Contains("non-decaying"), ConfigError);
}
