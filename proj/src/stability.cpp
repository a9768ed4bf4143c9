#include "qmtk/stability.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <tuple>

#include <boost/math/distributions/chi_squared.hpp>

#include "qmtk/errors.hpp"

namespace qmtk {

double overlapping_adev(std::span<const double> values, std::size_t m) {
  const std::size_t M = values.size();
  if (m < 1 || M < 2 * m + 1)
    throw ConfigError("overlapping_adev: need 1 <= m <= floor((M-1)/2), got m = " +
                      std::to_string(m) + ", M = " + std::to_string(M));

  // slide the inner sum: D_{j+1} = D_j - (v[j+m] - v[j]) + (v[j+2m] - v[j+m]).
  // Differences of equal samples stay exactly zero this way, so a constant
  // series gives 0 rather than prefix-sum cancellation noise.
  long double d = 0;
  for (std::size_t i = 0; i < m; ++i)
    d += static_cast<long double>(values[i + m]) - values[i];
  long double acc = d * d;
  const std::size_t j_max = M - 2 * m;
  for (std::size_t j = 1; j <= j_max; ++j) {
    d -= static_cast<long double>(values[j + m - 1]) - values[j - 1];
    d += static_cast<long double>(values[j + 2 * m - 1]) - values[j + m - 1];
    acc += d * d;
  }
  const long double var =
      acc / (2.0L * static_cast<long double>(m) * static_cast<long double>(m) *
             static_cast<long double>(M - 2 * m + 1));
  return static_cast<double>(std::sqrt(var));
}

double adev_edf_white_fm(std::size_t m, std::size_t M) {
  const double md = static_cast<double>(m);
  const double Md = static_cast<double>(M);
  return (3.0 * (Md - 1.0) / (2.0 * md) - 2.0 * (Md - 2.0) / Md) * 4.0 * md * md /
         (4.0 * md * md + 5.0);
}

std::pair<double, double> adev_confidence(double adev, std::size_t m, std::size_t M,
                                          double confidence) {
  if (!(confidence > 0 && confidence < 1))
    throw ConfigError("adev_confidence: confidence must be in (0,1)");
  const double edf = adev_edf_white_fm(m, M);
  if (edf < 1.0)
    throw ConfigError("adev_confidence: insufficient data at this tau (edf = " +
                      std::to_string(edf) + ")");
  const boost::math::chi_squared_distribution<double> chi2(edf);
  const double hi_q = boost::math::quantile(chi2, 0.5 * (1.0 + confidence));
  const double lo_q = boost::math::quantile(chi2, 0.5 * (1.0 - confidence));
  const double var = adev * adev;
  return {std::sqrt(var * edf / hi_q), std::sqrt(var * edf / lo_q)};
}

namespace {

StabilitySeries normalized(const StabilitySeries& s) {
  double mean = 0;
  for (double v : s.values) mean += v;
  mean /= static_cast<double>(s.values.size());
  if (std::abs(mean) < 1e-300)
    throw ConfigError("adev: cannot normalize a zero-mean series");
  StabilitySeries out = s;
  for (double& v : out.values) v /= mean;
  return out;
}

AdevPoint point_at(const StabilitySeries& s, std::size_t m, double confidence) {
  AdevPoint p;
  p.m = m;
  p.tau_s = static_cast<double>(m) * s.tau0_s;
  p.adev = overlapping_adev(s.values, m);
  p.edf = adev_edf_white_fm(m, s.size());
  std::tie(p.ci_low, p.ci_high) = adev_confidence(p.adev, m, s.size(), confidence);
  return p;
}

}  // namespace

AdevPoint adev_at(const StabilitySeries& series, std::size_t m, bool normalize,
                  double confidence) {
  return point_at(normalize ? normalized(series) : series, m, confidence);
}

std::vector<AdevPoint> adev_curve(const StabilitySeries& series, bool normalize,
                                  double confidence, bool dense) {
  const std::size_t M = series.size();
  if (M < 8) throw ConfigError("adev_curve: need at least 8 samples");
  const StabilitySeries s = normalize ? normalized(series) : series;
  const std::size_t m_max = (M - 1) / 2;

  std::vector<std::size_t> ms;
  if (dense) {
    for (std::size_t m = 1; m <= m_max; ++m) ms.push_back(m);
  } else {
    for (std::size_t m = 1; m <= m_max; m *= 2) ms.push_back(m);
    if (ms.back() != m_max) ms.push_back(m_max);  // endpoint
  }

  std::vector<AdevPoint> out;
  out.reserve(ms.size());
  for (std::size_t m : ms) out.push_back(point_at(s, m, confidence));
  return out;
}

StabilitySeries read_series_csv(const std::string& path, bool interpolate_gaps) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);

  std::vector<double> times, values;
  std::string line;
  std::size_t lineno = 0;
  bool two_columns = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of("0123456789+-.eE, \t\r") != std::string::npos) {
      if (values.empty()) continue;  // header row
      throw DataError(path + ":" + std::to_string(lineno) + ": malformed row");
    }
    std::istringstream ss(line);
    double a = 0, b = 0;
    char comma;
    if (!(ss >> a)) throw DataError(path + ":" + std::to_string(lineno) + ": malformed row");
    const bool row_has_two = static_cast<bool>(ss >> comma >> b);
    if (!values.empty() && row_has_two != two_columns)
      throw DataError(path + ":" + std::to_string(lineno) + ": inconsistent column count");
    two_columns = row_has_two;
    if (row_has_two) {
      times.push_back(a);
      values.push_back(b);
    } else {
      values.push_back(a);
    }
  }
  if (values.empty()) throw DataError(path + ": no samples");

  StabilitySeries s;
  if (!two_columns) {
    s.values = std::move(values);
    return s;
  }

  s.t_start_s = times.front();
  std::vector<double> dts;
  for (std::size_t i = 1; i < times.size(); ++i) dts.push_back(times[i] - times[i - 1]);
  if (dts.empty()) {
    s.values = std::move(values);
    return s;
  }
  std::vector<double> sorted = dts;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  if (!(median > 0)) throw DataError(path + ": non-increasing timestamps");
  s.tau0_s = median;

  bool has_gap = false;
  for (double dt : dts) has_gap = has_gap || dt > 1.5 * median || dt < 0.5 * median;
  if (!has_gap) {
    s.values = std::move(values);
    return s;
  }
  if (!interpolate_gaps)
    throw DataError(path + ": cadence gap detected (ADEV assumes uniform sampling); "
                           "re-run with interpolation enabled to fill gaps");

  // resample onto the uniform grid, linear between the bracketing samples
  const std::size_t n_grid =
      static_cast<std::size_t>(std::llround((times.back() - times.front()) / median)) + 1;
  s.values.reserve(n_grid);
  std::size_t k = 0;
  for (std::size_t g = 0; g < n_grid; ++g) {
    const double t = times.front() + static_cast<double>(g) * median;
    while (k + 1 < times.size() && times[k + 1] <= t) ++k;
    if (k + 1 >= times.size()) {
      s.values.push_back(values.back());
      continue;
    }
    const double span = times[k + 1] - times[k];
    const double frac = span > 0 ? (t - times[k]) / span : 0.0;
    s.values.push_back(values[k] + frac * (values[k + 1] - values[k]));
  }
  return s;
}

void adev_curve_to_csv(std::span<const AdevPoint> points, std::ostream& out) {
  out << "tau_s,adev,ci_low,ci_high\n";
  for (const AdevPoint& p : points)
    out << p.tau_s << ',' << p.adev << ',' << p.ci_low << ',' << p.ci_high << '\n';
}

}  // namespace qmtk
