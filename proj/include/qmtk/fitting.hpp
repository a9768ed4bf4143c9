#pragma once

#include <span>
#include <string>
#include <vector>

// Weighted least-squares fit of y = H * exp(-x / tau) for storage-time
// scans. Initial guess from log-linear regression, refined by Gauss-Newton
// with Levenberg damping that engages only when a step is rejected.

namespace qmtk {

struct ScanPoint {
  double x = 0;        // storage time
  double y = 0;        // efficiency
  double sigma_y = 0;  // <= 0 means no error bar on this point
};

struct ExpFitResult {
  double amplitude = 0;  // H
  double tau = 0;        // 1/e decay constant, same unit as x
  double amplitude_sd = 0;
  double tau_sd = 0;
  double cov[2][2] = {{0, 0}, {0, 0}};  // (H, tau) covariance
  double residual_norm = 0;             // sqrt of the weighted SSR
  int iterations = 0;
  bool weighted = false;
};

// Weights default to 1/sigma_y^2 when every point carries an error bar;
// unit weights otherwise (then the covariance is scaled by SSR/(n-2)).
// Preconditions: n >= 3, x not all equal, y > 0 everywhere.
ExpFitResult fit_exponential(std::span<const ScanPoint> points, bool force_unweighted = false);

std::vector<ScanPoint> read_scan_csv(const std::string& path);
std::string fit_to_json(const ExpFitResult& fit);

}  // namespace qmtk
