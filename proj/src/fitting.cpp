#include "qmtk/fitting.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "qmtk/errors.hpp"
#include "json.hpp"

namespace qmtk {

namespace {

struct Normal2x2 {
  double a11 = 0, a12 = 0, a22 = 0;  // symmetric
  double b1 = 0, b2 = 0;
};

// objective: sum_i w_i (y_i - H exp(-x_i/tau))^2
double ssr(std::span<const ScanPoint> pts, std::span<const double> w, double H, double tau) {
  double s = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double r = pts[i].y - H * std::exp(-pts[i].x / tau);
    s += w[i] * r * r;
  }
  return s;
}

}  // namespace

ExpFitResult fit_exponential(std::span<const ScanPoint> points, bool force_unweighted) {
  const std::size_t n = points.size();
  if (n < 3) throw ConfigError("fit_exponential: >= 3 points required");

  bool all_sigma = !force_unweighted;
  for (const auto& p : points) {
    if (!(p.y > 0))
      throw ConfigError("fit_exponential: the log-linear initializer requires y > 0");
    if (!(p.sigma_y > 0)) all_sigma = false;
  }
  bool same_x = true;
  for (const auto& p : points) same_x = same_x && p.x == points[0].x;
  if (same_x) throw ConfigError("fit_exponential: points must span more than one x value");

  std::vector<double> w(n, 1.0);
  if (all_sigma)
    for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / (points[i].sigma_y * points[i].sigma_y);

  // log-linear start: ln y = ln H - x/tau, delta-method weights w * y^2
  double sw = 0, sx = 0, sz = 0, sxx = 0, sxz = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w[i] * points[i].y * points[i].y;
    const double z = std::log(points[i].y);
    sw += wi;
    sx += wi * points[i].x;
    sz += wi * z;
    sxx += wi * points[i].x * points[i].x;
    sxz += wi * points[i].x * z;
  }
  const double det = sw * sxx - sx * sx;
  const double slope = (sw * sxz - sx * sz) / det;
  const double intercept = (sz * sxx - sx * sxz) / det;
  if (!(slope < 0)) throw ConfigError("fit_exponential: non-decaying data");

  double H = std::exp(intercept);
  double tau = -1.0 / slope;

  double obj = ssr(points, w, H, tau);
  double lambda = 0.0;
  int iter = 0;
  constexpr int kMaxIter = 100;
  constexpr double kTol = 1e-12;

  for (; iter < kMaxIter; ++iter) {
    Normal2x2 nm;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = std::exp(-points[i].x / tau);
      const double f = H * e;
      const double r = points[i].y - f;
      const double jH = e;
      const double jT = H * points[i].x * e / (tau * tau);
      nm.a11 += w[i] * jH * jH;
      nm.a12 += w[i] * jH * jT;
      nm.a22 += w[i] * jT * jT;
      nm.b1 += w[i] * jH * r;
      nm.b2 += w[i] * jT * r;
    }

    bool accepted = false;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      const double a11 = nm.a11 * (1.0 + lambda);
      const double a22 = nm.a22 * (1.0 + lambda);
      const double d = a11 * a22 - nm.a12 * nm.a12;
      if (d == 0) break;
      const double dH = (nm.b1 * a22 - nm.a12 * nm.b2) / d;
      const double dT = (a11 * nm.b2 - nm.a12 * nm.b1) / d;
      const double H_new = H + dH;
      const double tau_new = tau + dT;
      const double obj_new =
          tau_new > 0 ? ssr(points, w, H_new, tau_new) : std::numeric_limits<double>::infinity();
      if (obj_new <= obj) {
        const double rel_drop = (obj - obj_new) / std::max(obj, 1e-300);
        H = H_new;
        tau = tau_new;
        const bool converged = rel_drop < kTol;
        obj = obj_new;
        lambda = 0.0;
        accepted = true;
        if (converged) {
          iter = iter + 1;
          goto done;
        }
      } else {
        lambda = lambda == 0.0 ? 1e-4 : lambda * 10.0;
      }
    }
    if (!accepted) break;  // damping exhausted, treat the current point as optimal
  }
  if (iter >= kMaxIter) {
    std::ostringstream os;
    os << "fit_exponential: no convergence after " << kMaxIter
       << " iterations (weighted SSR " << obj << ")";
    throw Error(os.str());
  }
done:
  if (!(tau > 0)) throw ConfigError("fit_exponential: non-decaying data (tau <= 0 at optimum)");

  // covariance from the final Jacobian
  double a11 = 0, a12 = 0, a22 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = std::exp(-points[i].x / tau);
    const double jH = e;
    const double jT = H * points[i].x * e / (tau * tau);
    a11 += w[i] * jH * jH;
    a12 += w[i] * jH * jT;
    a22 += w[i] * jT * jT;
  }
  const double det2 = a11 * a22 - a12 * a12;
  if (det2 <= 0) throw Error("fit_exponential: singular normal equations at the optimum");
  double c11 = a22 / det2;
  double c12 = -a12 / det2;
  double c22 = a11 / det2;
  if (!all_sigma) {
    // unit weights: scale by the residual variance estimate
    const double s2 = obj / static_cast<double>(n - 2);
    c11 *= s2;
    c12 *= s2;
    c22 *= s2;
  }

  ExpFitResult res;
  res.amplitude = H;
  res.tau = tau;
  res.amplitude_sd = std::sqrt(c11);
  res.tau_sd = std::sqrt(c22);
  res.cov[0][0] = c11;
  res.cov[0][1] = res.cov[1][0] = c12;
  res.cov[1][1] = c22;
  res.residual_norm = std::sqrt(obj);
  res.iterations = iter;
  res.weighted = all_sigma;
  return res;
}

std::vector<ScanPoint> read_scan_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<ScanPoint> points;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.find_first_not_of("0123456789+-.eE, \t\r") != std::string::npos)
      continue;  // header row
    std::istringstream ss(line);
    ScanPoint p;
    char comma;
    if (!(ss >> p.x >> comma >> p.y))
      throw DataError(path + ":" + std::to_string(lineno) + ": expected x,y[,sigma_y]");
    if (ss >> comma >> p.sigma_y) {
      // optional third column
    }
    points.push_back(p);
  }
  return points;
}

std::string fit_to_json(const ExpFitResult& fit) {
  nlohmann::json j;
  j["model"] = "H*exp(-x/tau)";
  j["amplitude"] = fit.amplitude;
  j["amplitude_sd"] = fit.amplitude_sd;
  j["tau"] = fit.tau;
  j["tau_sd"] = fit.tau_sd;
  j["covariance"] = {{fit.cov[0][0], fit.cov[0][1]}, {fit.cov[1][0], fit.cov[1][1]}};
  j["residual_norm"] = fit.residual_norm;
  j["iterations"] = fit.iterations;
  j["weighted"] = fit.weighted;
  return j.dump(2);
}

}  // namespace qmtk
