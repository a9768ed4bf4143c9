#include "qmtk/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "qmtk/errors.hpp"
#include "json.hpp"

namespace qmtk {

namespace {

// substream tags
constexpr std::uint64_t kStreamShot = 1;
constexpr std::uint64_t kStreamDriftEta = 2;
constexpr std::uint64_t kStreamDriftNoise = 3;
constexpr std::uint64_t kStreamPoint = 4;
constexpr std::uint64_t kStreamSeries = 5;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

double gaussian_window_mass(DetectionWindow w, double center_ps, double sigma_ps) {
  if (sigma_ps <= 0) return 0;
  return normal_cdf((static_cast<double>(w.end_ps) - center_ps) / sigma_ps) -
         normal_cdf((static_cast<double>(w.start_ps) - center_ps) / sigma_ps);
}

ShotModel ShotModel::build(const ExperimentConfig& cfg) {
  return build(cfg, default_windows(cfg.timing, cfg.signal_pulse.fwhm_ps));
}

ShotModel ShotModel::build(const ExperimentConfig& cfg, const WindowPair& windows) {
  ShotModel m;
  m.windows = windows;
  m.frame = FoldFrame::full_period(cfg.timing);
  m.sigma_ps = cfg.signal_pulse.sigma_ps();
  m.monitor_center_ps = cfg.signal_pulse.center_ps;
  m.retrieved_center_ps = cfg.truth.retrieved_center_ps.value_or(
      (windows.signal.start_ps + windows.signal.end_ps) / 2);
  const Calibration& cal = cfg.calibration;
  const double mu = cfg.mu_in_target;
  const double t_st_s = s_from_ps(cfg.timing.storage_time_ps);
  m.mean_monitor = mu * cal.eta_apd_mon / cal.theta;
  m.mean_retrieved = mu * cfg.truth.eta_mem_at(t_st_s) * cal.eta_setup * cal.eta_apd_sig;
  m.mean_leak = mu * cfg.truth.leak() * cal.eta_setup * cal.eta_apd_sig;
  m.mean_noise = cfg.truth.noise_mean_per_shot;
  m.mean_dark = cfg.truth.dark_rate_hz * s_from_ps(m.frame.span_ps);
  m.noise_profile = cfg.truth.noise_profile;
  return m;
}

ExpectedWindowCounts expected_window_counts(const ShotModel& m) {
  ExpectedWindowCounts e;
  e.monitor_window = m.mean_monitor * gaussian_window_mass(m.windows.monitor,
                                                           static_cast<double>(m.monitor_center_ps),
                                                           m.sigma_ps);
  const double dark_in_window =
      m.mean_dark * static_cast<double>(m.windows.signal.width_ps()) /
      static_cast<double>(m.frame.span_ps);
  double noise_in_window = m.mean_noise;
  if (m.noise_profile == NoiseProfile::Gaussian)
    noise_in_window *= gaussian_window_mass(m.windows.signal,
                                            static_cast<double>(m.retrieved_center_ps), m.sigma_ps);
  e.vacuum_window = noise_in_window + dark_in_window;
  e.signal_window =
      e.vacuum_window +
      m.mean_retrieved * gaussian_window_mass(m.windows.signal,
                                              static_cast<double>(m.retrieved_center_ps),
                                              m.sigma_ps) +
      m.mean_leak * gaussian_window_mass(m.windows.signal,
                                         static_cast<double>(m.monitor_center_ps), m.sigma_ps);
  return e;
}

ShotOutcome simulate_shot(const ShotModel& m, SplitRng& rng) {
  ShotOutcome shot;

  auto add_gaussian = [&](std::vector<SimClick>& dst, double mean, std::int64_t center,
                          ClickKind kind) {
    const std::uint64_t n = rng.poisson(mean);
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::int64_t t = center + std::llround(m.sigma_ps * rng.gaussian());
      dst.push_back({t, kind});
    }
  };

  add_gaussian(shot.monitor_clicks, m.mean_monitor, m.monitor_center_ps, ClickKind::Monitor);
  add_gaussian(shot.signal_clicks, m.mean_leak, m.monitor_center_ps, ClickKind::Leak);
  add_gaussian(shot.signal_clicks, m.mean_retrieved, m.retrieved_center_ps,
               ClickKind::Retrieved);

  const std::uint64_t n_noise = rng.poisson(m.mean_noise);
  for (std::uint64_t i = 0; i < n_noise; ++i) {
    std::int64_t t;
    if (m.noise_profile == NoiseProfile::Gaussian) {
      t = m.retrieved_center_ps + std::llround(m.sigma_ps * rng.gaussian());
    } else {
      t = m.windows.signal.start_ps +
          static_cast<std::int64_t>(rng.uniform() *
                                    static_cast<double>(m.windows.signal.width_ps()));
    }
    shot.signal_clicks.push_back({t, ClickKind::Noise});
  }

  const std::uint64_t n_dark = rng.poisson(m.mean_dark);
  for (std::uint64_t i = 0; i < n_dark; ++i) {
    const std::int64_t t =
        m.frame.origin_ps +
        static_cast<std::int64_t>(rng.uniform() * static_cast<double>(m.frame.span_ps));
    shot.signal_clicks.push_back({t, ClickKind::Dark});
  }
  return shot;
}

RunStats simulate_run(const ExperimentConfig& cfg, std::uint64_t seed, std::ostream& out) {
  ensure_valid(cfg);
  const ShotModel model = ShotModel::build(cfg);
  const std::uint64_t n_shots = cfg.shots();
  const std::int64_t period = cfg.timing.shot_period_ps;
  const std::int64_t t0_first = cfg.timing.pump_duration_ps + cfg.timing.pump_settle_ps;
  const std::int64_t frame_end = model.frame.origin_ps + model.frame.span_ps;

  TagFileWriter writer(out, header_for(cfg));
  RunStats stats;
  stats.shots = n_shots;

  std::vector<TimeTagRecord> block;
  for (std::uint64_t k = 0; k < n_shots; ++k) {
    SplitRng rng = SplitRng::stream(seed, kStreamShot, k);
    const ShotOutcome shot = simulate_shot(model, rng);
    const std::int64_t t0 = t0_first + static_cast<std::int64_t>(k) * period;

    block.clear();
    block.push_back({static_cast<std::uint64_t>(t0), kChannelSync});
    auto emit = [&](const std::vector<SimClick>& clicks, std::uint16_t channel) {
      for (const SimClick& c : clicks) {
        if (c.t_ps < model.frame.origin_ps || c.t_ps >= frame_end) {
          ++stats.dropped_out_of_frame;
          continue;
        }
        block.push_back({static_cast<std::uint64_t>(t0 + c.t_ps), channel});
      }
    };
    emit(shot.signal_clicks, kChannelSignal);
    emit(shot.monitor_clicks, kChannelMonitor);

    std::sort(block.begin(), block.end(), [](const TimeTagRecord& a, const TimeTagRecord& b) {
      return a.timestamp_ps != b.timestamp_ps ? a.timestamp_ps < b.timestamp_ps
                                              : a.channel < b.channel;
    });
    for (const auto& rec : block) writer.write(rec);
  }
  stats.records = writer.records_written();
  return stats;
}

RunStats simulate_run_file(const ExperimentConfig& cfg, std::uint64_t seed,
                           const std::string& path) {
  const std::string tmp = path + ".tmp";
  RunStats stats;
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp + " for writing");
    stats = simulate_run(cfg, seed, out);
  }
  std::filesystem::rename(tmp, path);
  return stats;
}

std::vector<CampaignPoint> campaign_truth(const ExperimentConfig& cfg, int n_points,
                                          double cadence_s, double drift_amplitude,
                                          std::uint64_t seed) {
  if (n_points < 2) throw ConfigError("campaign: n_points must be >= 2");
  if (!(cadence_s > 0)) throw ConfigError("campaign: cadence must be > 0");
  if (drift_amplitude < 0) throw ConfigError("campaign: drift amplitude must be >= 0");

  SplitRng eta_walk = SplitRng::stream(seed, kStreamDriftEta);
  SplitRng noise_walk = SplitRng::stream(seed, kStreamDriftNoise);
  std::vector<CampaignPoint> points(static_cast<std::size_t>(n_points));
  double w_eta = 0, w_noise = 0;
  for (int i = 0; i < n_points; ++i) {
    if (i > 0 && drift_amplitude > 0) {
      w_eta += drift_amplitude * eta_walk.gaussian();
      w_noise += drift_amplitude * noise_walk.gaussian();
    }
    CampaignPoint& p = points[static_cast<std::size_t>(i)];
    p.index = i;
    p.t_offset_s = cadence_s * i;
    p.eta_mem_zero = std::min(1.0, cfg.truth.eta_mem_zero * std::exp(w_eta));
    p.noise_mean_per_shot = cfg.truth.noise_mean_per_shot * std::exp(w_noise);
  }
  return points;
}

void simulate_campaign_files(const ExperimentConfig& cfg, int n_points, double cadence_s,
                             double drift_amplitude, std::uint64_t seed,
                             const std::string& out_dir) {
  ensure_valid(cfg);
  const auto points = campaign_truth(cfg, n_points, cadence_s, drift_amplitude, seed);
  std::filesystem::create_directories(out_dir);

  nlohmann::json manifest;
  manifest["format"] = "qmtk-campaign/1";
  manifest["n_points"] = n_points;
  manifest["cadence_s"] = cadence_s;
  manifest["drift_amplitude"] = drift_amplitude;
  manifest["seed"] = seed;
  manifest["config"] = nlohmann::json::parse(config_to_json(cfg));
  manifest["points"] = nlohmann::json::array();

  for (const CampaignPoint& p : points) {
    ExperimentConfig point_cfg = cfg;
    point_cfg.truth.eta_mem_zero = p.eta_mem_zero;
    point_cfg.truth.noise_mean_per_shot = p.noise_mean_per_shot;

    char name[64];
    std::snprintf(name, sizeof(name), "point_%05d_signal.qtt1", p.index);
    const std::string signal_file = name;
    std::snprintf(name, sizeof(name), "point_%05d_vacuum.qtt1", p.index);
    const std::string vacuum_file = name;

    const std::uint64_t signal_seed =
        SplitRng::mix64(seed ^ SplitRng::mix64(kStreamPoint ^ (2ULL * p.index)));
    const std::uint64_t vacuum_seed =
        SplitRng::mix64(seed ^ SplitRng::mix64(kStreamPoint ^ (2ULL * p.index + 1)));

    simulate_run_file(point_cfg, signal_seed, out_dir + "/" + signal_file);
    ExperimentConfig vacuum_cfg = point_cfg;
    vacuum_cfg.mu_in_target = 0.0;
    simulate_run_file(vacuum_cfg, vacuum_seed, out_dir + "/" + vacuum_file);

    manifest["points"].push_back({{"index", p.index},
                                  {"t_offset_s", p.t_offset_s},
                                  {"eta_mem_zero", p.eta_mem_zero},
                                  {"noise_mean_per_shot", p.noise_mean_per_shot},
                                  {"signal_file", signal_file},
                                  {"vacuum_file", vacuum_file}});
  }

  const std::string manifest_path = out_dir + "/manifest.json";
  const std::string tmp = manifest_path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp + " for writing");
    out << manifest.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, manifest_path);
}

CampaignSeries simulate_campaign_series(const ExperimentConfig& cfg, int n_points,
                                        double cadence_s, double drift_amplitude,
                                        std::uint64_t seed) {
  ensure_valid(cfg);
  CampaignSeries series;
  series.cadence_s = cadence_s;
  series.truth = campaign_truth(cfg, n_points, cadence_s, drift_amplitude, seed);

  const double shots = static_cast<double>(cfg.shots());
  for (const CampaignPoint& p : series.truth) {
    ExperimentConfig point_cfg = cfg;
    point_cfg.truth.eta_mem_zero = p.eta_mem_zero;
    point_cfg.truth.noise_mean_per_shot = p.noise_mean_per_shot;
    const ExpectedWindowCounts e = expected_window_counts(ShotModel::build(point_cfg));

    SplitRng rng = SplitRng::stream(seed, kStreamSeries, static_cast<std::uint64_t>(p.index));
    WindowCounts c;
    c.n_mon = static_cast<double>(rng.poisson(shots * e.monitor_window));
    c.n_sig = static_cast<double>(rng.poisson(shots * e.signal_window));
    c.n_noi = static_cast<double>(rng.poisson(shots * e.vacuum_window));
    c.f_rep_hz = cfg.f_rep_hz;
    c.t_int_s = shots / cfg.f_rep_hz;
    series.counts.push_back(c);
    series.points.push_back(compute_metrics(c, cfg.calibration));
  }
  return series;
}

}  // namespace qmtk
