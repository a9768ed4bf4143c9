#pragma once

#include <cmath>
#include <cstdint>

// Time is carried as integer picoseconds everywhere events and windows live.
// 1 ps resolution over ~10^5 s spans stays well inside int64.

namespace qmtk {

constexpr std::int64_t kPsPerNs = 1'000;
constexpr std::int64_t kPsPerUs = 1'000'000;
constexpr std::int64_t kPsPerMs = 1'000'000'000;
constexpr std::int64_t kPsPerS = 1'000'000'000'000;

// fwhm = 2*sqrt(2*ln2) * sigma for a Gaussian
constexpr double kFwhmPerSigma = 2.3548200450309493;

inline std::int64_t ps_from_ns(double ns) { return std::llround(ns * 1e3); }
inline std::int64_t ps_from_us(double us) { return std::llround(us * 1e6); }
inline std::int64_t ps_from_s(double s) { return std::llround(s * 1e12); }

inline double ns_from_ps(std::int64_t ps) { return static_cast<double>(ps) * 1e-3; }
inline double s_from_ps(std::int64_t ps) { return static_cast<double>(ps) * 1e-12; }

}  // namespace qmtk
