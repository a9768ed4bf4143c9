#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qmtk/config.hpp"

// Characterization formulas: mu_in, eta_e2e, eta_mem, SNR, mu_1, inferred
// fidelity, the classical measure-and-prepare threshold for weak coherent
// states, and first-order uncertainty propagation. Statistical errors come
// from Poisson counting (sd sqrt(N)); systematic errors from the calibration
// uncertainties. The two are kept separate and combined in quadrature only
// for display.

namespace qmtk {

struct Measured {
  double value = 0;
  double stat = 0;
  double sys = 0;

  double combined() const;
};

struct WindowCounts {
  double n_mon = 0;
  double n_sig = 0;
  double n_noi = 0;          // measured at mu_in = 0, scaled to the signal exposure
  double f_rep_hz = 0;
  double t_int_s = 0;
  double noise_scale = 1.0;  // exposure ratio applied to the raw vacuum count

  double exposure() const { return f_rep_hz * t_int_s; }  // f_rep * t_int
};

struct MetricsResult {
  Measured mu_in;
  Measured eta_e2e;
  Measured eta_mem;
  Measured snr;
  Measured mu_1;
  Measured fidelity;
  bool vacuum_input = false;       // n_mon = 0, efficiency undefined
  bool signal_below_noise = false; // n_sig <= n_noi, eta reported as-is
  bool snr_infinite = false;       // n_noi = 0
};

// mu_in = N_mon * theta / (t_int * f_rep * eta_apd_mon)
Measured mean_input_photon_number(const WindowCounts& c, const Calibration& cal);

// eta_e2e = (N_sig - N_noi) / (mu_in * eta_apd_sig * f_rep * t_int); may be
// <= 0 when the signal sits below the noise floor (caller flags it).
Measured end_to_end_efficiency(const WindowCounts& c, const Measured& mu_in,
                               const Calibration& cal);

// SNR = (N_sig - N_noi) / N_noi; N_noi = 0 yields an infinite-value result
// rather than a division crash.
Measured signal_to_noise(const WindowCounts& c);

// mu_1 = N_noi / (eta_e2e * f_rep * t_int)
Measured mu1(const WindowCounts& c, const Measured& eta_e2e);

// F = (mu_in + mu_1) / (mu_in + 2 mu_1)
Measured fidelity(const Measured& mu_in, const Measured& mu_1);

// Relative quadrature sum helper used by the propagation formulas.
double quadrature(std::initializer_list<double> terms);

// All metrics from one set of window counts, with correlations between the
// shared counts handled (fidelity and mu_1 are propagated through
// r = eta_apd_sig * N_noi / (N_sig - N_noi), where mu_in cancels).
MetricsResult compute_metrics(const WindowCounts& c, const Calibration& cal);

// Classical measure-and-prepare bound: Poisson strata p_N(mu_in) with
// per-Fock fidelities F_0 = 1/2, F_N = (N+1)/(N+2); an attacker keeps the
// best strata from high N downward up to the device's success probability
// eta_accept, splitting the boundary stratum fractionally. F_class is the
// accepted-mass-weighted mean fidelity.
struct ThresholdStratum {
  int n = 0;
  double p_n = 0;
  double accepted_fraction = 0;  // q_N in [0, 1]
  double fidelity_n = 0;
};

struct ThresholdResult {
  double f_class = 0;
  double mu_in = 0;
  double eta_accept = 0;
  int n_max = 0;
  double tail_mass = 0;
  std::vector<ThresholdStratum> strata;  // N = 0 .. n_max
};

// n_max < 0 selects an automatic cutoff with tail mass < 1e-12 (and well
// below eta_accept); an explicit n_max that leaves too much tail throws.
ThresholdResult classical_threshold(double mu_in, double eta_accept, int n_max = -1);

struct FileDigest {
  std::string path;
  std::uint64_t bytes = 0;
  std::uint64_t fnv1a64 = 0;
  std::uint64_t records = 0;
  std::uint64_t shots = 0;
};

struct AnalysisResult {
  MetricsResult metrics;
  WindowCounts counts;
  WindowPair windows;
  double n_noi_raw = 0;
  FileDigest tags;
  FileDigest vacuum;
  std::uint64_t orphans = 0;
  std::uint64_t out_of_span = 0;
};

// Full pipeline: fold both runs, count the detection windows, apply every
// formula. The exposure f_rep * t_int is taken as the sync count actually
// recorded in the signal file; a vacuum run of different length is rescaled.
AnalysisResult analyze_files(const std::string& tags_path, const std::string& vacuum_path,
                             const ExperimentConfig& cfg,
                             std::optional<WindowPair> windows_override = std::nullopt);

// Same pipeline with the noise reference supplied as an explicit count
// instead of a vacuum run: n_noi counts observed over noise_shots shots
// (0 means the same exposure as the signal run).
AnalysisResult analyze_with_noise(const std::string& tags_path, double n_noi,
                                  std::uint64_t noise_shots, const ExperimentConfig& cfg,
                                  std::optional<WindowPair> windows_override = std::nullopt);

std::string analysis_to_json(const AnalysisResult& r);

}  // namespace qmtk
