#include "qmtk.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qmtk/config.hpp"
#include "qmtk/errors.hpp"
#include "qmtk/fitting.hpp"
#include "qmtk/metrics.hpp"
#include "qmtk/report.hpp"
#include "qmtk/simulator.hpp"
#include "qmtk/stability.hpp"
#include "qmtk/tagstream.hpp"

struct qmtk_config {
  qmtk::ExperimentConfig cfg;
};

namespace {

thread_local std::string g_last_error;

qmtk_status fail(qmtk_status code, const char* what) {
  g_last_error = what;
  return code;
}

template <typename Fn>
qmtk_status guarded(Fn&& fn) {
  try {
    fn();
    return QMTK_OK;
  } catch (const qmtk::ConfigError& e) {
    return fail(QMTK_ERR_USAGE, e.what());
  } catch (const qmtk::DataError& e) {
    return fail(QMTK_ERR_DATA, e.what());
  } catch (const std::exception& e) {
    return fail(QMTK_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

qmtk_status require(bool ok, const char* what) {
  return ok ? QMTK_OK : fail(QMTK_ERR_USAGE, what);
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw qmtk::DataError("cannot open " + tmp + " for writing");
    out << text;
    if (!out) throw qmtk::DataError("write to " + tmp + " failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

extern "C" {

const char* qmtk_version(void) { return "0.1.0"; }

const char* qmtk_last_error(void) { return g_last_error.c_str(); }

qmtk_status qmtk_config_default(qmtk_config** out) {
  if (auto st = require(out != nullptr, "config_default: out is NULL")) return st;
  return guarded([&] { *out = new qmtk_config{qmtk::ExperimentConfig::defaults()}; });
}

qmtk_status qmtk_config_load(const char* path, qmtk_config** out) {
  if (auto st = require(path && out, "config_load: NULL argument")) return st;
  return guarded([&] { *out = new qmtk_config{qmtk::load_config_file(path)}; });
}

qmtk_status qmtk_config_from_json(const char* json_text, qmtk_config** out) {
  if (auto st = require(json_text && out, "config_from_json: NULL argument")) return st;
  return guarded([&] { *out = new qmtk_config{qmtk::config_from_json(json_text)}; });
}

qmtk_status qmtk_config_to_json(const qmtk_config* cfg, char** json_out) {
  if (auto st = require(cfg && json_out, "config_to_json: NULL argument")) return st;
  return guarded([&] { *json_out = dup_string(qmtk::config_to_json(cfg->cfg)); });
}

qmtk_status qmtk_config_set_mu_in(qmtk_config* cfg, double mu_in) {
  if (auto st = require(cfg != nullptr, "config_set_mu_in: cfg is NULL")) return st;
  if (auto st = require(mu_in >= 0, "config_set_mu_in: mu_in must be >= 0")) return st;
  cfg->cfg.mu_in_target = mu_in;
  return QMTK_OK;
}

void qmtk_config_free(qmtk_config* cfg) { delete cfg; }

void qmtk_string_free(char* s) { std::free(s); }

qmtk_status qmtk_simulate_run(const qmtk_config* cfg, uint64_t seed, const char* out_path) {
  if (auto st = require(cfg && out_path, "simulate_run: NULL argument")) return st;
  return guarded([&] { qmtk::simulate_run_file(cfg->cfg, seed, out_path); });
}

qmtk_status qmtk_simulate_campaign(const qmtk_config* cfg, int n_points, double cadence_s,
                                   double drift_amplitude, uint64_t seed, const char* out_dir) {
  if (auto st = require(cfg && out_dir, "simulate_campaign: NULL argument")) return st;
  return guarded([&] {
    qmtk::simulate_campaign_files(cfg->cfg, n_points, cadence_s, drift_amplitude, seed, out_dir);
  });
}

qmtk_status qmtk_simulate_campaign_counts(const qmtk_config* cfg, int n_points, double cadence_s,
                                          double drift_amplitude, uint64_t seed,
                                          const char* out_csv_path, const char* out_json_path) {
  if (auto st = require(cfg != nullptr, "simulate_campaign_counts: cfg is NULL")) return st;
  return guarded([&] {
    const auto series =
        qmtk::simulate_campaign_series(cfg->cfg, n_points, cadence_s, drift_amplitude, seed);
    qmtk::CampaignReport report;
    report.cfg = cfg->cfg;
    report.cadence_s = cadence_s;
    for (std::size_t i = 0; i < series.points.size(); ++i)
      report.rows.push_back(qmtk::make_campaign_row(
          series.truth[i].index, series.truth[i].t_offset_s, series.points[i]));
    if (out_csv_path) {
      std::ostringstream csv;
      qmtk::report_to_csv(report, csv);
      write_text_atomic(out_csv_path, csv.str());
    }
    if (out_json_path) write_text_atomic(out_json_path, qmtk::report_summary_json(report));
  });
}

qmtk_status qmtk_analyze(const qmtk_config* cfg, const char* tags_path, const char* vacuum_path,
                         const double* windows_ns, char** metrics_json_out) {
  if (auto st = require(cfg && tags_path && vacuum_path && metrics_json_out,
                        "analyze: NULL argument"))
    return st;
  return guarded([&] {
    std::optional<qmtk::WindowPair> windows;
    if (windows_ns) {
      windows = qmtk::WindowPair{{qmtk::ps_from_ns(windows_ns[0]), qmtk::ps_from_ns(windows_ns[1])},
                                 {qmtk::ps_from_ns(windows_ns[2]), qmtk::ps_from_ns(windows_ns[3])}};
    }
    const auto result = qmtk::analyze_files(tags_path, vacuum_path, cfg->cfg, windows);
    *metrics_json_out = dup_string(qmtk::analysis_to_json(result));
  });
}

qmtk_status qmtk_analyze_with_noise(const qmtk_config* cfg, const char* tags_path, double n_noi,
                                    uint64_t n_noi_shots, const double* windows_ns,
                                    char** metrics_json_out) {
  if (auto st = require(cfg && tags_path && metrics_json_out, "analyze_with_noise: NULL argument"))
    return st;
  return guarded([&] {
    std::optional<qmtk::WindowPair> windows;
    if (windows_ns) {
      windows = qmtk::WindowPair{{qmtk::ps_from_ns(windows_ns[0]), qmtk::ps_from_ns(windows_ns[1])},
                                 {qmtk::ps_from_ns(windows_ns[2]), qmtk::ps_from_ns(windows_ns[3])}};
    }
    const auto result = qmtk::analyze_with_noise(tags_path, n_noi, n_noi_shots, cfg->cfg, windows);
    *metrics_json_out = dup_string(qmtk::analysis_to_json(result));
  });
}

qmtk_status qmtk_metrics_from_counts(const qmtk_config* cfg, double n_mon, double n_sig,
                                     double n_noi, double f_rep_hz, double t_int_s,
                                     char** metrics_json_out) {
  if (auto st = require(cfg && metrics_json_out, "metrics_from_counts: NULL argument")) return st;
  return guarded([&] {
    qmtk::WindowCounts c{n_mon, n_sig, n_noi, f_rep_hz, t_int_s, 1.0};
    const auto m = qmtk::compute_metrics(c, cfg->cfg.calibration);
    qmtk::AnalysisResult r;
    r.metrics = m;
    r.counts = c;
    r.n_noi_raw = n_noi;
    r.windows = qmtk::default_windows(cfg->cfg.timing, cfg->cfg.signal_pulse.fwhm_ps);
    *metrics_json_out = dup_string(qmtk::analysis_to_json(r));
  });
}

qmtk_status qmtk_histogram_csv(const qmtk_config* cfg, const char* tags_path, uint16_t channel,
                               int64_t bin_width_ps, int64_t origin_ps, int64_t span_ps,
                               const char* out_csv_path) {
  if (auto st = require(cfg && tags_path && out_csv_path, "histogram_csv: NULL argument"))
    return st;
  return guarded([&] {
    const auto records = qmtk::read_tag_file(tags_path);
    qmtk::FoldFrame frame{origin_ps, span_ps};
    if (span_ps <= 0) frame = qmtk::FoldFrame::full_period(cfg->cfg.timing);
    const auto hist =
        qmtk::fold_and_bin(records, qmtk::kChannelSync, bin_width_ps, frame, channel);
    std::ostringstream csv;
    qmtk::histogram_to_csv(hist, csv);
    write_text_atomic(out_csv_path, csv.str());
  });
}

qmtk_status qmtk_fit_lifetime(const double* x, const double* y, const double* sigma_y, size_t n,
                              qmtk_fit_result* out) {
  if (auto st = require(x && y && out, "fit_lifetime: NULL argument")) return st;
  return guarded([&] {
    std::vector<qmtk::ScanPoint> points(n);
    for (size_t i = 0; i < n; ++i)
      points[i] = {x[i], y[i], sigma_y ? sigma_y[i] : 0.0};
    const auto fit = qmtk::fit_exponential(points);
    *out = {fit.amplitude,     fit.tau,        fit.amplitude_sd, fit.tau_sd,
            fit.cov[0][1],     fit.residual_norm, fit.iterations,
            fit.weighted ? 1 : 0};
  });
}

qmtk_status qmtk_fit_lifetime_csv(const char* points_csv_path, qmtk_fit_result* out) {
  if (auto st = require(points_csv_path && out, "fit_lifetime_csv: NULL argument")) return st;
  return guarded([&] {
    const auto points = qmtk::read_scan_csv(points_csv_path);
    const auto fit = qmtk::fit_exponential(points);
    *out = {fit.amplitude,     fit.tau,        fit.amplitude_sd, fit.tau_sd,
            fit.cov[0][1],     fit.residual_norm, fit.iterations,
            fit.weighted ? 1 : 0};
  });
}

qmtk_status qmtk_adev_curve(const double* values, size_t n, double tau0_s, int normalize,
                            double confidence, qmtk_adev_point** points_out,
                            size_t* n_points_out) {
  if (auto st = require(values && points_out && n_points_out, "adev_curve: NULL argument"))
    return st;
  return guarded([&] {
    qmtk::StabilitySeries series;
    series.values.assign(values, values + n);
    series.tau0_s = tau0_s;
    const auto curve = qmtk::adev_curve(series, normalize != 0, confidence);
    auto* arr = static_cast<qmtk_adev_point*>(std::malloc(curve.size() * sizeof(qmtk_adev_point)));
    if (!arr) throw std::bad_alloc();
    for (size_t i = 0; i < curve.size(); ++i)
      arr[i] = {curve[i].tau_s, curve[i].adev, curve[i].ci_low, curve[i].ci_high};
    *points_out = arr;
    *n_points_out = curve.size();
  });
}

void qmtk_adev_points_free(qmtk_adev_point* points) { std::free(points); }

qmtk_status qmtk_series_read_csv(const char* path, int interpolate_gaps, double** values_out,
                                 size_t* n_out, double* tau0_s_out) {
  if (auto st = require(path && values_out && n_out, "series_read_csv: NULL argument")) return st;
  return guarded([&] {
    const auto series = qmtk::read_series_csv(path, interpolate_gaps != 0);
    auto* arr = static_cast<double*>(std::malloc(series.values.size() * sizeof(double)));
    if (!arr) throw std::bad_alloc();
    std::memcpy(arr, series.values.data(), series.values.size() * sizeof(double));
    *values_out = arr;
    *n_out = series.values.size();
    if (tau0_s_out) *tau0_s_out = series.tau0_s;
  });
}

void qmtk_series_free(double* values) { std::free(values); }

qmtk_status qmtk_classical_threshold(double mu_in, double eta_accept, double* f_class_out) {
  if (auto st = require(f_class_out != nullptr, "classical_threshold: out is NULL")) return st;
  return guarded([&] { *f_class_out = qmtk::classical_threshold(mu_in, eta_accept).f_class; });
}

qmtk_status qmtk_threshold_strata(double mu_in, double eta_accept, double* f_class_out,
                                  qmtk_threshold_stratum** strata_out, size_t* n_strata_out) {
  if (auto st = require(f_class_out && strata_out && n_strata_out,
                        "threshold_strata: NULL argument"))
    return st;
  return guarded([&] {
    const auto res = qmtk::classical_threshold(mu_in, eta_accept);
    auto* arr = static_cast<qmtk_threshold_stratum*>(
        std::malloc(res.strata.size() * sizeof(qmtk_threshold_stratum)));
    if (!arr) throw std::bad_alloc();
    for (size_t i = 0; i < res.strata.size(); ++i)
      arr[i] = {res.strata[i].n, res.strata[i].p_n, res.strata[i].accepted_fraction,
                res.strata[i].fidelity_n};
    *f_class_out = res.f_class;
    *strata_out = arr;
    *n_strata_out = res.strata.size();
  });
}

void qmtk_threshold_strata_free(qmtk_threshold_stratum* strata) { std::free(strata); }

qmtk_status qmtk_report_campaign(const char* campaign_dir, const char* out_csv_path,
                                 const char* out_json_path) {
  if (auto st = require(campaign_dir != nullptr, "report_campaign: dir is NULL")) return st;
  return guarded([&] {
    const auto report = qmtk::report_campaign(campaign_dir);
    if (out_csv_path) {
      std::ostringstream csv;
      qmtk::report_to_csv(report, csv);
      write_text_atomic(out_csv_path, csv.str());
    }
    if (out_json_path) write_text_atomic(out_json_path, qmtk::report_summary_json(report));
  });
}

} /* extern "C" */
