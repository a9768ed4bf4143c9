#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "qmtk/config.hpp"
#include "qmtk/metrics.hpp"
#include "qmtk/rng.hpp"
#include "qmtk/tagstream.hpp"

// Per-shot Monte Carlo source of time-tag streams. Photon statistics are
// Poissonian at every stage (weak coherent input through linear loss), so
// each detector's click count is drawn directly from the composed mean and
// arrival times from the pulse envelope.

namespace qmtk {

enum class ClickKind : std::uint8_t { Monitor, Leak, Retrieved, Noise, Dark };

struct SimClick {
  std::int64_t t_ps = 0;  // per-shot frame, t0 = 0
  ClickKind kind = ClickKind::Monitor;
};

struct ShotOutcome {
  std::vector<SimClick> monitor_clicks;
  std::vector<SimClick> signal_clicks;
};

// Everything simulate_shot needs, precomputed once per configuration.
struct ShotModel {
  WindowPair windows;
  FoldFrame frame;
  double sigma_ps = 0;
  std::int64_t monitor_center_ps = 0;
  std::int64_t retrieved_center_ps = 0;
  double mean_monitor = 0;    // mu * eta_apd_mon / theta
  double mean_retrieved = 0;  // mu * eta_mem(t_st) * eta_setup * eta_apd_sig
  double mean_leak = 0;       // mu * leak_fraction * eta_setup * eta_apd_sig
  double mean_noise = 0;      // per shot, inside the signal window
  double mean_dark = 0;       // dark_rate * shot_period
  NoiseProfile noise_profile = NoiseProfile::Uniform;

  static ShotModel build(const ExperimentConfig& cfg);
  static ShotModel build(const ExperimentConfig& cfg, const WindowPair& windows);
};

double gaussian_window_mass(DetectionWindow w, double center_ps, double sigma_ps);

// Per-shot expected counts inside the detection windows (analytic, includes
// envelope coverage). vacuum_window is the signal-window mean at mu_in = 0.
struct ExpectedWindowCounts {
  double monitor_window = 0;
  double signal_window = 0;
  double vacuum_window = 0;
};
ExpectedWindowCounts expected_window_counts(const ShotModel& model);

ShotOutcome simulate_shot(const ShotModel& model, SplitRng& rng);

struct RunStats {
  std::uint64_t shots = 0;
  std::uint64_t records = 0;
  std::uint64_t dropped_out_of_frame = 0;
};

// Emits floor(f_rep * t_int) shots as a QTT1 stream, one sync record per
// shot at that shot's t0. Byte-deterministic for a fixed (config, seed).
RunStats simulate_run(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream& out);
RunStats simulate_run_file(const ExperimentConfig& cfg, std::uint64_t seed,
                           const std::string& path);

// Slow multiplicative drift applied point-to-point in a campaign: both
// eta_mem_zero and noise_mean_per_shot follow independent log random walks
// with the given per-step standard deviation.
struct CampaignPoint {
  int index = 0;
  double t_offset_s = 0;
  double eta_mem_zero = 0;
  double noise_mean_per_shot = 0;
};

std::vector<CampaignPoint> campaign_truth(const ExperimentConfig& cfg, int n_points,
                                          double cadence_s, double drift_amplitude,
                                          std::uint64_t seed);

// One signal + one vacuum QTT1 file per point, plus manifest.json.
void simulate_campaign_files(const ExperimentConfig& cfg, int n_points, double cadence_s,
                             double drift_amplitude, std::uint64_t seed,
                             const std::string& out_dir);

// Fast path: samples the per-point window counts directly (the window count
// over S shots is Poisson with the composed mean, so this is distributed
// identically to folding a full click-level run) and feeds them through the
// metrics pipeline.
struct CampaignSeries {
  double cadence_s = 0;
  std::vector<CampaignPoint> truth;
  std::vector<WindowCounts> counts;
  std::vector<MetricsResult> points;
};
CampaignSeries simulate_campaign_series(const ExperimentConfig& cfg, int n_points,
                                        double cadence_s, double drift_amplitude,
                                        std::uint64_t seed);

}  // namespace qmtk
