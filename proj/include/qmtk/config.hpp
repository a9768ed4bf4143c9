#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qmtk/units.hpp"

// Domain types for the storage sequence: timing, pulses, calibration
// constants, detection windows and the full experiment configuration.
// All values are immutable plain data once constructed.

namespace qmtk {

struct PulseSpec {
  // only Gaussian pulses are supported
  std::int64_t center_ps = 0;
  std::int64_t fwhm_ps = 0;
  // mean photon number for the signal pulse; peak power in mW for control
  // pulses (informational there)
  double mean_area = 0.0;

  double sigma_ps() const { return static_cast<double>(fwhm_ps) / kFwhmPerSigma; }
};

// Per-shot frame: the write-in control pulse center defines t0 = 0.
// The pump occupies [-(pump_settle + pump_duration), -pump_settle).
struct SequenceTiming {
  std::int64_t pump_duration_ps = 30 * kPsPerUs;
  std::int64_t pump_settle_ps = 250 * kPsPerNs;
  std::int64_t signal_delay_td_ps = 5 * kPsPerNs;
  std::int64_t storage_time_ps = 150 * kPsPerNs;
  std::int64_t shot_period_ps = 0;  // derived from f_rep, see ExperimentConfig

  // start of the usable folded frame (just before t0, after the pump AOM
  // settles)
  std::int64_t frame_origin_ps() const { return -pump_settle_ps; }
};

struct Calibration {
  double theta = 11.2;  // memory-path / monitor-path splitting ratio
  double theta_sys = 0.4;
  double eta_apd_mon = 0.36;
  double eta_apd_mon_sys = 0.05;
  double eta_apd_sig = 0.30;
  double eta_apd_sig_sys = 0.05;
  double eta_setup = 0.23;
  double eta_setup_sys = 0.01;
};

enum class NoiseProfile { Uniform, Gaussian };

// Ground truth the simulator realizes; the analyzer never sees these.
struct SimTruth {
  double eta_mem_zero = 0.23;       // end-to-end memory efficiency at t_st = 0
  double lifetime_tau_s = 2.4e-6;   // 1/e decay of eta_mem vs storage time
  double noise_mean_per_shot = 1.2e-3;  // detected noise counts per shot in the
                                        // signal window at mu_in = 0
  double dark_rate_hz = 0.0;        // uniform background over the whole shot
  double dead_time_ns = 0.0;        // reserved: detector dead-time/afterpulse
                                    // modeling is not implemented, must be 0
  std::optional<double> leak_fraction;  // unstored input transmitted at t0;
                                        // default 1 - eta_mem_zero
  NoiseProfile noise_profile = NoiseProfile::Uniform;
  std::optional<std::int64_t> retrieved_center_ps;  // default: signal-window
                                                    // midpoint

  double eta_mem_at(double t_st_s) const {
    return eta_mem_zero * std::exp(-t_st_s / lifetime_tau_s);
  }
  double leak() const { return leak_fraction.value_or(1.0 - eta_mem_zero); }
};

// Half-open interval [start, end) in the folded per-shot frame.
struct DetectionWindow {
  std::int64_t start_ps = 0;
  std::int64_t end_ps = 0;

  std::int64_t width_ps() const { return end_ps - start_ps; }
  bool contains(std::int64_t t_ps) const { return t_ps >= start_ps && t_ps < end_ps; }
};

struct WindowPair {
  DetectionWindow monitor;
  DetectionWindow signal;
};

struct ExperimentConfig {
  double f_rep_hz = 31'000.0;
  double t_int_s = 20.0;
  double mu_in_target = 1.0;
  double detuning_ghz = 1.5;         // metadata only
  double cell_temperature_c = 75.0;  // metadata only
  SequenceTiming timing;
  PulseSpec signal_pulse{0, 10 * kPsPerNs, 1.0};
  PulseSpec control_write{0, 25 * kPsPerNs, 5.0};
  PulseSpec control_read{150 * kPsPerNs, 25 * kPsPerNs, 5.0};
  Calibration calibration;
  SimTruth truth;

  std::uint64_t shots() const {
    return static_cast<std::uint64_t>(std::floor(f_rep_hz * t_int_s));
  }

  // Long-duration operating point with all defaults resolved.
  static ExperimentConfig defaults();
};

// Monitor window: +-4 fwhm around t0. Signal window: [t_st - 4 fwhm,
// t_st - 0.6 fwhm). Throws ConfigError on overlap or when a window leaves
// the usable frame.
WindowPair default_windows(const SequenceTiming& timing, std::int64_t signal_fwhm_ps);

// Returns every violated invariant, one message per violation; empty means
// the configuration is valid.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

// Throws ConfigError listing all violations.
void ensure_valid(const ExperimentConfig& cfg);

ExperimentConfig config_from_json(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace qmtk
