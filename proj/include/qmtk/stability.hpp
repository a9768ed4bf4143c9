#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

// Overlapping Allan deviation of metric time series with chi-squared
// confidence intervals. Deviations are absolute by default (the inputs are
// already dimensionless fractions); a normalize-by-mean flag gives the
// fractional variant.

namespace qmtk {

struct StabilitySeries {
  std::vector<double> values;
  double tau0_s = 0;     // sampling cadence
  double t_start_s = 0;  // wall-clock reference

  std::size_t size() const { return values.size(); }
};

// sigma_y^2(m tau0) = sum_j [ sum_{i=j}^{j+m-1} (v[i+m] - v[i]) ]^2
//                     / (2 m^2 (M - 2m + 1)),   j = 0 .. M - 2m
// Valid for 1 <= m <= floor((M-1)/2).
double overlapping_adev(std::span<const double> values, std::size_t m);

// Equivalent degrees of freedom, white-FM approximation:
// edf = (3(M-1)/(2m) - 2(M-2)/M) * 4m^2 / (4m^2 + 5)
double adev_edf_white_fm(std::size_t m, std::size_t M);

// Chi-squared interval on sigma at the given two-sided confidence level.
std::pair<double, double> adev_confidence(double adev, std::size_t m, std::size_t M,
                                          double confidence);

struct AdevPoint {
  std::size_t m = 0;
  double tau_s = 0;
  double adev = 0;
  double ci_low = 0;
  double ci_high = 0;
  double edf = 0;
};

// Octave-spaced m = 1, 2, 4, ... plus the largest valid m as an endpoint;
// dense evaluates every m. Requires M >= 8.
std::vector<AdevPoint> adev_curve(const StabilitySeries& series, bool normalize = false,
                                  double confidence = 0.683, bool dense = false);

// Single point at averaging factor m, same normalize semantics.
AdevPoint adev_at(const StabilitySeries& series, std::size_t m, bool normalize = false,
                  double confidence = 0.683);

// CSV input: "timestamp_s,value" rows (or a single value column). The
// cadence comes from the median spacing; gaps abort unless interpolation is
// requested, in which case missing samples are filled linearly.
StabilitySeries read_series_csv(const std::string& path, bool interpolate_gaps = false);

void adev_curve_to_csv(std::span<const AdevPoint> points, std::ostream& out);

}  // namespace qmtk
