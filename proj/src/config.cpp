#include "qmtk/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "qmtk/errors.hpp"
#include "json.hpp"

namespace qmtk {

using nlohmann::json;

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig cfg;
  cfg.timing.shot_period_ps = std::llround(1e12 / cfg.f_rep_hz);
  return cfg;
}

WindowPair default_windows(const SequenceTiming& timing, std::int64_t signal_fwhm_ps) {
  if (signal_fwhm_ps <= 0) throw ConfigError("default_windows: signal fwhm must be > 0");

  const std::int64_t t_st = timing.storage_time_ps;
  WindowPair w;
  w.monitor = {-4 * signal_fwhm_ps, 4 * signal_fwhm_ps};
  w.signal = {t_st - 4 * signal_fwhm_ps,
              t_st - std::llround(0.6 * static_cast<double>(signal_fwhm_ps))};

  auto fmt_ns = [](std::int64_t ps) {
    std::ostringstream os;
    os << ns_from_ps(ps) << " ns";
    return os.str();
  };
  if (w.signal.start_ps < w.monitor.end_ps) {
    throw ConfigError("default_windows: signal window [" + fmt_ns(w.signal.start_ps) + ", " +
                      fmt_ns(w.signal.end_ps) + ") overlaps monitor window [" +
                      fmt_ns(w.monitor.start_ps) + ", " + fmt_ns(w.monitor.end_ps) + ")");
  }
  if (w.monitor.start_ps < timing.frame_origin_ps()) {
    throw ConfigError("default_windows: monitor window starts before the pump settles (" +
                      fmt_ns(w.monitor.start_ps) + " < " + fmt_ns(timing.frame_origin_ps()) + ")");
  }
  if (timing.shot_period_ps > 0) {
    const std::int64_t frame_end =
        timing.shot_period_ps - timing.pump_duration_ps - timing.pump_settle_ps;
    if (w.signal.end_ps > frame_end) {
      throw ConfigError("default_windows: signal window ends at " + fmt_ns(w.signal.end_ps) +
                        ", beyond the usable frame (" + fmt_ns(frame_end) +
                        " before the next pump)");
    }
  }
  return w;
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> v;
  auto bad = [&v](const std::string& msg) { v.push_back(msg); };

  auto check_prob = [&](double x, const std::string& field) {
    if (!(x > 0.0 && x <= 1.0)) bad(field + ": probability must be in (0,1]");
  };
  auto check_nonneg = [&](double x, const std::string& field) {
    if (!(x >= 0.0)) bad(field + ": must be >= 0");
  };

  if (!(cfg.f_rep_hz > 0)) bad("f_rep_hz: must be > 0");
  if (!(cfg.t_int_s > 0)) bad("t_int_s: must be > 0");
  if (cfg.f_rep_hz > 0 && cfg.t_int_s > 0 && cfg.f_rep_hz * cfg.t_int_s < 1.0)
    bad("f_rep_hz * t_int_s: fewer than one shot");
  if (!(cfg.mu_in_target >= 0)) bad("mu_in_target: must be >= 0");

  const SequenceTiming& t = cfg.timing;
  if (t.pump_duration_ps < 0) bad("timing.pump_duration: must be >= 0");
  if (t.pump_settle_ps < 0) bad("timing.pump_settle: must be >= 0");
  if (t.signal_delay_td_ps < 0) bad("timing.signal_delay_td: must be >= 0");
  if (t.storage_time_ps < 0) bad("timing.storage_time: must be >= 0");
  if (t.shot_period_ps <= 0) bad("timing.shot_period: must be > 0");

  if (cfg.signal_pulse.fwhm_ps <= 0) bad("signal_pulse.fwhm: must be > 0");
  if (cfg.control_write.fwhm_ps <= 0) bad("control_write.fwhm: must be > 0");
  if (cfg.control_read.fwhm_ps <= 0) bad("control_read.fwhm: must be > 0");
  if (t.storage_time_ps <= cfg.signal_pulse.fwhm_ps)
    bad("timing.storage_time: must exceed the signal pulse fwhm");

  // sequence budget: pump, settle, storage and the read-out window reach
  // must fit inside one period
  if (t.shot_period_ps > 0 &&
      t.pump_duration_ps + t.pump_settle_ps + t.storage_time_ps + 4 * cfg.signal_pulse.fwhm_ps >=
          t.shot_period_ps)
    bad("timing: pump + settle + storage + read-out window exceed the shot period");

  const Calibration& c = cfg.calibration;
  if (!(c.theta >= 1.0)) bad("calibration.theta: splitting ratio must be >= 1");
  check_prob(c.eta_apd_mon, "calibration.eta_apd_mon");
  check_prob(c.eta_apd_sig, "calibration.eta_apd_sig");
  check_prob(c.eta_setup, "calibration.eta_setup");
  check_nonneg(c.theta_sys, "calibration.theta_sys");
  check_nonneg(c.eta_apd_mon_sys, "calibration.eta_apd_mon_sys");
  check_nonneg(c.eta_apd_sig_sys, "calibration.eta_apd_sig_sys");
  check_nonneg(c.eta_setup_sys, "calibration.eta_setup_sys");

  const SimTruth& s = cfg.truth;
  if (!(s.eta_mem_zero >= 0.0 && s.eta_mem_zero <= 1.0))
    bad("truth.eta_mem_zero: must be in [0,1]");
  if (!(s.lifetime_tau_s > 0)) bad("truth.lifetime_tau: must be > 0");
  check_nonneg(s.noise_mean_per_shot, "truth.noise_mean_per_shot");
  check_nonneg(s.dark_rate_hz, "truth.dark_rate");
  if (s.dead_time_ns != 0.0)
    bad("truth.dead_time_ns: dead-time modeling is a reserved extension, must be 0");
  if (s.leak_fraction && !(*s.leak_fraction >= 0.0 && *s.leak_fraction <= 1.0))
    bad("truth.leak_fraction: must be in [0,1]");

  if (v.empty()) {
    try {
      default_windows(cfg.timing, cfg.signal_pulse.fwhm_ps);
    } catch (const ConfigError& e) {
      bad(e.what());
    }
  }
  return v;
}

void ensure_valid(const ExperimentConfig& cfg) {
  const auto violations = validate_config(cfg);
  if (violations.empty()) return;
  std::string msg = "invalid configuration:";
  for (const auto& m : violations) msg += "\n  - " + m;
  throw ConfigError(msg);
}

namespace {

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& scope) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) throw ConfigError("config: unknown key \"" + scope + key + "\"");
  }
}

double get_num(const json& j, const char* key, double fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("config: ") + key + " must be a number");
  return j.at(key).get<double>();
}

PulseSpec parse_pulse(const json& j, const std::string& scope, const PulseSpec& fallback) {
  reject_unknown_keys(j, {"shape", "center_ns", "fwhm_ns", "mean_area"}, scope);
  if (j.contains("shape") && j.at("shape").get<std::string>() != "gaussian")
    throw ConfigError("config: " + scope + "shape: only \"gaussian\" is supported");
  PulseSpec p = fallback;
  p.center_ps = ps_from_ns(get_num(j, "center_ns", ns_from_ps(fallback.center_ps)));
  p.fwhm_ps = ps_from_ns(get_num(j, "fwhm_ns", ns_from_ps(fallback.fwhm_ps)));
  p.mean_area = get_num(j, "mean_area", fallback.mean_area);
  return p;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: JSON parse failed: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");

  reject_unknown_keys(j,
                      {"f_rep_hz", "t_int_s", "mu_in_target", "detuning_ghz",
                       "cell_temperature_c", "timing", "signal_pulse", "control_write",
                       "control_read", "calibration", "truth"},
                      "");

  ExperimentConfig cfg = ExperimentConfig::defaults();
  try {
    cfg.f_rep_hz = get_num(j, "f_rep_hz", cfg.f_rep_hz);
    cfg.t_int_s = get_num(j, "t_int_s", cfg.t_int_s);
    cfg.mu_in_target = get_num(j, "mu_in_target", cfg.mu_in_target);
    cfg.detuning_ghz = get_num(j, "detuning_ghz", cfg.detuning_ghz);
    cfg.cell_temperature_c = get_num(j, "cell_temperature_c", cfg.cell_temperature_c);

    if (j.contains("timing")) {
      const json& t = j.at("timing");
      reject_unknown_keys(t,
                          {"pump_duration_us", "pump_settle_ns", "signal_delay_td_ns",
                           "storage_time_ns", "shot_period_ns"},
                          "timing.");
      cfg.timing.pump_duration_ps =
          ps_from_us(get_num(t, "pump_duration_us", 1e-6 * cfg.timing.pump_duration_ps));
      cfg.timing.pump_settle_ps =
          ps_from_ns(get_num(t, "pump_settle_ns", ns_from_ps(cfg.timing.pump_settle_ps)));
      cfg.timing.signal_delay_td_ps =
          ps_from_ns(get_num(t, "signal_delay_td_ns", ns_from_ps(cfg.timing.signal_delay_td_ps)));
      cfg.timing.storage_time_ps =
          ps_from_ns(get_num(t, "storage_time_ns", ns_from_ps(cfg.timing.storage_time_ps)));
      if (t.contains("shot_period_ns") && !t.at("shot_period_ns").is_null())
        cfg.timing.shot_period_ps = ps_from_ns(t.at("shot_period_ns").get<double>());
    }
    // shot period follows f_rep unless pinned explicitly
    if (!j.contains("timing") || !j.at("timing").contains("shot_period_ns") ||
        j.at("timing").at("shot_period_ns").is_null()) {
      if (cfg.f_rep_hz > 0) cfg.timing.shot_period_ps = std::llround(1e12 / cfg.f_rep_hz);
    }

    if (j.contains("signal_pulse"))
      cfg.signal_pulse = parse_pulse(j.at("signal_pulse"), "signal_pulse.", cfg.signal_pulse);
    if (j.contains("control_write"))
      cfg.control_write = parse_pulse(j.at("control_write"), "control_write.", cfg.control_write);
    if (j.contains("control_read"))
      cfg.control_read = parse_pulse(j.at("control_read"), "control_read.", cfg.control_read);

    if (j.contains("calibration")) {
      const json& c = j.at("calibration");
      reject_unknown_keys(c,
                          {"theta", "theta_sys", "eta_apd_mon", "eta_apd_mon_sys", "eta_apd_sig",
                           "eta_apd_sig_sys", "eta_setup", "eta_setup_sys"},
                          "calibration.");
      Calibration& cal = cfg.calibration;
      cal.theta = get_num(c, "theta", cal.theta);
      cal.theta_sys = get_num(c, "theta_sys", cal.theta_sys);
      cal.eta_apd_mon = get_num(c, "eta_apd_mon", cal.eta_apd_mon);
      cal.eta_apd_mon_sys = get_num(c, "eta_apd_mon_sys", cal.eta_apd_mon_sys);
      cal.eta_apd_sig = get_num(c, "eta_apd_sig", cal.eta_apd_sig);
      cal.eta_apd_sig_sys = get_num(c, "eta_apd_sig_sys", cal.eta_apd_sig_sys);
      cal.eta_setup = get_num(c, "eta_setup", cal.eta_setup);
      cal.eta_setup_sys = get_num(c, "eta_setup_sys", cal.eta_setup_sys);
    }

    if (j.contains("truth")) {
      const json& s = j.at("truth");
      reject_unknown_keys(s,
                          {"eta_mem_zero", "lifetime_tau_us", "noise_mean_per_shot",
                           "dark_rate_hz", "dead_time_ns", "leak_fraction", "noise_profile",
                           "retrieved_center_ns"},
                          "truth.");
      SimTruth& tr = cfg.truth;
      tr.eta_mem_zero = get_num(s, "eta_mem_zero", tr.eta_mem_zero);
      tr.lifetime_tau_s = 1e-6 * get_num(s, "lifetime_tau_us", tr.lifetime_tau_s * 1e6);
      tr.noise_mean_per_shot = get_num(s, "noise_mean_per_shot", tr.noise_mean_per_shot);
      tr.dark_rate_hz = get_num(s, "dark_rate_hz", tr.dark_rate_hz);
      tr.dead_time_ns = get_num(s, "dead_time_ns", tr.dead_time_ns);
      if (s.contains("leak_fraction") && !s.at("leak_fraction").is_null())
        tr.leak_fraction = s.at("leak_fraction").get<double>();
      if (s.contains("noise_profile")) {
        const auto prof = s.at("noise_profile").get<std::string>();
        if (prof == "uniform")
          tr.noise_profile = NoiseProfile::Uniform;
        else if (prof == "gaussian")
          tr.noise_profile = NoiseProfile::Gaussian;
        else
          throw ConfigError("config: truth.noise_profile must be \"uniform\" or \"gaussian\"");
      }
      if (s.contains("retrieved_center_ns") && !s.at("retrieved_center_ns").is_null())
        tr.retrieved_center_ps = ps_from_ns(s.at("retrieved_center_ns").get<double>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["f_rep_hz"] = cfg.f_rep_hz;
  j["t_int_s"] = cfg.t_int_s;
  j["mu_in_target"] = cfg.mu_in_target;
  j["detuning_ghz"] = cfg.detuning_ghz;
  j["cell_temperature_c"] = cfg.cell_temperature_c;
  j["timing"] = {{"pump_duration_us", 1e-6 * cfg.timing.pump_duration_ps},
                 {"pump_settle_ns", ns_from_ps(cfg.timing.pump_settle_ps)},
                 {"signal_delay_td_ns", ns_from_ps(cfg.timing.signal_delay_td_ps)},
                 {"storage_time_ns", ns_from_ps(cfg.timing.storage_time_ps)},
                 {"shot_period_ns", ns_from_ps(cfg.timing.shot_period_ps)}};
  auto pulse_json = [](const PulseSpec& p) {
    return json{{"shape", "gaussian"},
                {"center_ns", ns_from_ps(p.center_ps)},
                {"fwhm_ns", ns_from_ps(p.fwhm_ps)},
                {"mean_area", p.mean_area}};
  };
  j["signal_pulse"] = pulse_json(cfg.signal_pulse);
  j["control_write"] = pulse_json(cfg.control_write);
  j["control_read"] = pulse_json(cfg.control_read);
  j["calibration"] = {{"theta", cfg.calibration.theta},
                      {"theta_sys", cfg.calibration.theta_sys},
                      {"eta_apd_mon", cfg.calibration.eta_apd_mon},
                      {"eta_apd_mon_sys", cfg.calibration.eta_apd_mon_sys},
                      {"eta_apd_sig", cfg.calibration.eta_apd_sig},
                      {"eta_apd_sig_sys", cfg.calibration.eta_apd_sig_sys},
                      {"eta_setup", cfg.calibration.eta_setup},
                      {"eta_setup_sys", cfg.calibration.eta_setup_sys}};
  json truth = {{"eta_mem_zero", cfg.truth.eta_mem_zero},
                {"lifetime_tau_us", cfg.truth.lifetime_tau_s * 1e6},
                {"noise_mean_per_shot", cfg.truth.noise_mean_per_shot},
                {"dark_rate_hz", cfg.truth.dark_rate_hz},
                {"dead_time_ns", cfg.truth.dead_time_ns},
                {"noise_profile",
                 cfg.truth.noise_profile == NoiseProfile::Uniform ? "uniform" : "gaussian"}};
  if (cfg.truth.leak_fraction) truth["leak_fraction"] = *cfg.truth.leak_fraction;
  if (cfg.truth.retrieved_center_ps)
    truth["retrieved_center_ns"] = ns_from_ps(*cfg.truth.retrieved_center_ps);
  j["truth"] = truth;
  return j.dump(2);
}

}  // namespace qmtk
