#include "qmtk/metrics.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "qmtk/errors.hpp"
#include "qmtk/tagstream.hpp"
#include "json.hpp"

namespace qmtk {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

double Measured::combined() const { return std::hypot(stat, sys); }

double quadrature(std::initializer_list<double> terms) {
  double s = 0;
  for (double t : terms) s += t * t;
  return std::sqrt(s);
}

Measured mean_input_photon_number(const WindowCounts& c, const Calibration& cal) {
  const double exposure = c.exposure();
  if (!(exposure > 0) || !(cal.eta_apd_mon > 0))
    throw ConfigError("mu_in: zero denominator (f_rep * t_int * eta_apd_mon must be > 0)");
  Measured m;
  m.value = c.n_mon * cal.theta / (exposure * cal.eta_apd_mon);
  m.stat = c.n_mon > 0 ? m.value / std::sqrt(c.n_mon) : 0.0;
  m.sys = m.value * quadrature({cal.theta_sys / cal.theta, cal.eta_apd_mon_sys / cal.eta_apd_mon});
  return m;
}

Measured end_to_end_efficiency(const WindowCounts& c, const Measured& mu_in,
                               const Calibration& cal) {
  if (!(mu_in.value > 0)) throw ConfigError("eta_e2e: efficiency undefined at vacuum input");
  const double exposure = c.exposure();
  if (!(exposure > 0) || !(cal.eta_apd_sig > 0))
    throw ConfigError("eta_e2e: zero denominator");
  const double denom = mu_in.value * cal.eta_apd_sig * exposure;
  const double delta = c.n_sig - c.n_noi;
  Measured m;
  m.value = delta / denom;
  // counting variance of N_sig - N_noi plus the statistical part of mu_in
  const double var_counts = (c.n_sig + c.n_noi * c.noise_scale) / (denom * denom);
  const double rel_mu = mu_in.value > 0 ? mu_in.stat / mu_in.value : 0.0;
  m.stat = std::sqrt(var_counts + m.value * m.value * rel_mu * rel_mu);
  const double rel_mu_sys = mu_in.value > 0 ? mu_in.sys / mu_in.value : 0.0;
  m.sys = std::abs(m.value) *
          quadrature({rel_mu_sys, cal.eta_apd_sig_sys / cal.eta_apd_sig});
  return m;
}

Measured signal_to_noise(const WindowCounts& c) {
  Measured m;
  if (c.n_noi <= 0) {
    m.value = c.n_sig > 0 ? kInf : kNaN;
    return m;
  }
  m.value = (c.n_sig - c.n_noi) / c.n_noi;
  const double d_sig = 1.0 / c.n_noi;
  const double d_noi = c.n_sig / (c.n_noi * c.n_noi);
  m.stat = std::sqrt(d_sig * d_sig * c.n_sig + d_noi * d_noi * c.n_noi * c.noise_scale);
  return m;
}

Measured mu1(const WindowCounts& c, const Measured& eta_e2e) {
  if (!(eta_e2e.value > 0)) throw ConfigError("mu_1: requires eta_e2e > 0");
  const double exposure = c.exposure();
  if (!(exposure > 0)) throw ConfigError("mu_1: zero exposure");
  Measured m;
  m.value = c.n_noi / (eta_e2e.value * exposure);
  // treats N_noi and eta_e2e as independent; compute_metrics carries the
  // correlated version
  const double rel_n = c.n_noi > 0 ? std::sqrt(c.n_noi * c.noise_scale) / c.n_noi : 0.0;
  m.stat = m.value * quadrature({rel_n, eta_e2e.stat / eta_e2e.value});
  m.sys = m.value * (eta_e2e.sys / eta_e2e.value);
  return m;
}

Measured fidelity(const Measured& mu_in, const Measured& mu_1) {
  if (!(mu_in.value >= 0) || !(mu_1.value >= 0) || (mu_in.value == 0 && mu_1.value == 0))
    throw ConfigError("fidelity: requires mu_in >= 0, mu_1 >= 0, not both zero");
  const double a = mu_in.value, b = mu_1.value;
  const double denom = a + 2 * b;
  Measured m;
  m.value = (a + b) / denom;
  const double da = b / (denom * denom);
  const double db = -a / (denom * denom);
  m.stat = std::hypot(da * mu_in.stat, db * mu_1.stat);
  m.sys = std::hypot(da * mu_in.sys, db * mu_1.sys);
  return m;
}

MetricsResult compute_metrics(const WindowCounts& c, const Calibration& cal) {
  MetricsResult r;
  r.mu_in = mean_input_photon_number(c, cal);
  r.snr = signal_to_noise(c);
  r.snr_infinite = std::isinf(r.snr.value);

  if (!(r.mu_in.value > 0)) {
    r.vacuum_input = true;
    r.signal_below_noise = c.n_sig <= c.n_noi;
    r.eta_e2e = {0, 0, 0};
    r.eta_mem = {0, 0, 0};
    r.mu_1 = {kNaN, 0, 0};
    r.fidelity = {kNaN, 0, 0};
    return r;
  }

  r.eta_e2e = end_to_end_efficiency(c, r.mu_in, cal);
  r.eta_mem.value = r.eta_e2e.value / cal.eta_setup;
  r.eta_mem.stat = r.eta_e2e.stat / cal.eta_setup;
  r.eta_mem.sys = std::sqrt(r.eta_e2e.sys * r.eta_e2e.sys +
                            r.eta_e2e.value * r.eta_e2e.value * cal.eta_setup_sys *
                                cal.eta_setup_sys / (cal.eta_setup * cal.eta_setup)) /
                  cal.eta_setup;

  const double delta = c.n_sig - c.n_noi;
  if (delta <= 0) {
    r.signal_below_noise = true;
    r.mu_1 = {kNaN, 0, 0};
    r.fidelity = {kNaN, 0, 0};
    return r;
  }

  const double exposure = c.exposure();
  r.mu_1.value = c.n_noi / (r.eta_e2e.value * exposure);
  if (c.n_noi > 0) {
    // mu_1 = N_noi * mu_in * eta_apd_sig / (N_sig - N_noi): propagate against
    // the independent inputs so the shared counts stay correlated
    const double d_noi = 1.0 / c.n_noi + 1.0 / delta;
    const double rel_stat2 = (c.n_mon > 0 ? 1.0 / c.n_mon : 0.0) +
                             d_noi * d_noi * c.n_noi * c.noise_scale + c.n_sig / (delta * delta);
    r.mu_1.stat = r.mu_1.value * std::sqrt(rel_stat2);
    r.mu_1.sys = r.mu_1.value * quadrature({cal.theta_sys / cal.theta,
                                            cal.eta_apd_mon_sys / cal.eta_apd_mon,
                                            cal.eta_apd_sig_sys / cal.eta_apd_sig});

    // F depends only on r = mu_1 / mu_in = eta_apd_sig * N_noi / (N_sig - N_noi);
    // the monitor-path factors cancel
    const double ratio = cal.eta_apd_sig * c.n_noi / delta;
    r.fidelity.value = (1 + ratio) / (1 + 2 * ratio);
    const double dF = ratio / ((1 + 2 * ratio) * (1 + 2 * ratio));
    const double rel_r_stat =
        std::sqrt(d_noi * d_noi * c.n_noi * c.noise_scale + c.n_sig / (delta * delta));
    r.fidelity.stat = dF * rel_r_stat;
    r.fidelity.sys = dF * (cal.eta_apd_sig_sys / cal.eta_apd_sig);
  } else {
    r.mu_1 = {0, 0, 0};
    r.fidelity = {1, 0, 0};
  }
  return r;
}

namespace {

// signal-side fold plus the metrics chain; the noise reference arrives as a
// raw count over its own exposure, wherever it came from
AnalysisResult analyze_impl(const std::string& tags_path, const ExperimentConfig& cfg,
                            std::optional<WindowPair> windows_override, double n_noi_raw,
                            std::uint64_t noise_shots, FileDigest vacuum_digest) {
  ensure_valid(cfg);
  const WindowPair windows =
      windows_override ? *windows_override : default_windows(cfg.timing, cfg.signal_pulse.fwhm_ps);
  const FoldFrame frame = FoldFrame::full_period(cfg.timing);

  TagFileHeader tags_header;
  const auto tags = read_tag_file(tags_path, &tags_header);

  AnalysisResult res;
  res.windows = windows;

  const auto mon = window_sum(tags, kChannelSync, kChannelMonitor, windows.monitor, frame);
  const auto sig = window_sum(tags, kChannelSync, kChannelSignal, windows.signal, frame);
  if (mon.stats.n_shots == 0)
    throw DataError("analyze: channel 0 (sync) missing from " + tags_path);
  if (noise_shots == 0) noise_shots = mon.stats.n_shots;

  const double scale =
      static_cast<double>(mon.stats.n_shots) / static_cast<double>(noise_shots);

  WindowCounts c;
  c.n_mon = static_cast<double>(mon.count);
  c.n_sig = static_cast<double>(sig.count);
  c.n_noi = n_noi_raw * scale;
  c.noise_scale = scale;
  c.f_rep_hz = tags_header.f_rep_mhz > 0 ? tags_header.f_rep_hz() : cfg.f_rep_hz;
  // exposure is the shot count actually recorded, not the nominal product
  c.t_int_s = static_cast<double>(mon.stats.n_shots) / c.f_rep_hz;

  res.counts = c;
  res.n_noi_raw = n_noi_raw;
  res.metrics = compute_metrics(c, cfg.calibration);
  res.orphans = mon.stats.orphans + sig.stats.orphans;
  res.out_of_span = mon.stats.out_of_span + sig.stats.out_of_span;

  res.tags.path = tags_path;
  res.tags.fnv1a64 = fnv1a64_file(tags_path, &res.tags.bytes);
  res.tags.records = static_cast<std::uint64_t>(tags.size());
  res.tags.shots = mon.stats.n_shots;
  res.vacuum = std::move(vacuum_digest);
  if (res.vacuum.shots == 0) res.vacuum.shots = noise_shots;
  return res;
}

}  // namespace

AnalysisResult analyze_files(const std::string& tags_path, const std::string& vacuum_path,
                             const ExperimentConfig& cfg,
                             std::optional<WindowPair> windows_override) {
  ensure_valid(cfg);
  const WindowPair windows =
      windows_override ? *windows_override : default_windows(cfg.timing, cfg.signal_pulse.fwhm_ps);
  const FoldFrame frame = FoldFrame::full_period(cfg.timing);

  TagFileHeader vacuum_header;
  const auto vacuum = read_tag_file(vacuum_path, &vacuum_header);
  const auto noi = window_sum(vacuum, kChannelSync, kChannelSignal, windows.signal, frame);
  if (noi.stats.n_shots == 0)
    throw DataError("analyze: channel 0 (sync) missing from " + vacuum_path);

  FileDigest vacuum_digest;
  vacuum_digest.path = vacuum_path;
  vacuum_digest.fnv1a64 = fnv1a64_file(vacuum_path, &vacuum_digest.bytes);
  vacuum_digest.records = static_cast<std::uint64_t>(vacuum.size());
  vacuum_digest.shots = noi.stats.n_shots;

  return analyze_impl(tags_path, cfg, windows_override, static_cast<double>(noi.count),
                      noi.stats.n_shots, std::move(vacuum_digest));
}

AnalysisResult analyze_with_noise(const std::string& tags_path, double n_noi,
                                  std::uint64_t noise_shots, const ExperimentConfig& cfg,
                                  std::optional<WindowPair> windows_override) {
  if (!(n_noi >= 0)) throw ConfigError("analyze: explicit N_noi must be >= 0");
  FileDigest digest;
  digest.path = "(explicit N_noi)";
  digest.shots = noise_shots;
  return analyze_impl(tags_path, cfg, windows_override, n_noi, noise_shots, std::move(digest));
}

namespace {

nlohmann::json measured_json(const Measured& m) {
  return {{"value", m.value}, {"stat", m.stat}, {"sys", m.sys}};
}

nlohmann::json digest_json(const FileDigest& d) {
  char hex[19];
  std::snprintf(hex, sizeof(hex), "0x%016llx", static_cast<unsigned long long>(d.fnv1a64));
  return {{"path", d.path},
          {"bytes", d.bytes},
          {"fnv1a64", hex},
          {"records", d.records},
          {"shots", d.shots}};
}

}  // namespace

std::string analysis_to_json(const AnalysisResult& r) {
  nlohmann::json j;
  j["inputs"] = {{"tags", digest_json(r.tags)}, {"vacuum", digest_json(r.vacuum)}};
  j["windows_ns"] = {
      {"monitor", {ns_from_ps(r.windows.monitor.start_ps), ns_from_ps(r.windows.monitor.end_ps)}},
      {"signal", {ns_from_ps(r.windows.signal.start_ps), ns_from_ps(r.windows.signal.end_ps)}}};
  j["counts"] = {{"n_mon", r.counts.n_mon},      {"n_sig", r.counts.n_sig},
                 {"n_noi", r.counts.n_noi},      {"n_noi_raw", r.n_noi_raw},
                 {"noise_scale", r.counts.noise_scale}, {"orphans", r.orphans},
                 {"out_of_span", r.out_of_span}};
  j["f_rep_hz"] = r.counts.f_rep_hz;
  j["t_int_s"] = r.counts.t_int_s;
  j["metrics"] = {{"mu_in", measured_json(r.metrics.mu_in)},
                  {"eta_e2e", measured_json(r.metrics.eta_e2e)},
                  {"eta_mem", measured_json(r.metrics.eta_mem)},
                  {"snr", measured_json(r.metrics.snr)},
                  {"mu_1", measured_json(r.metrics.mu_1)},
                  {"fidelity", measured_json(r.metrics.fidelity)}};
  j["flags"] = {{"vacuum_input", r.metrics.vacuum_input},
                {"signal_below_noise", r.metrics.signal_below_noise},
                {"snr_infinite", r.metrics.snr_infinite}};
  return j.dump(2);
}

}  // namespace qmtk
