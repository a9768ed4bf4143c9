#include "qmtk/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "qmtk/errors.hpp"
#include "qmtk/stability.hpp"
#include "json.hpp"

namespace qmtk {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

CampaignRow make_campaign_row(int index, double t_offset_s, const MetricsResult& metrics) {
  CampaignRow row;
  row.index = index;
  row.t_offset_s = t_offset_s;
  row.metrics = metrics;
  row.f_class = kNaN;
  if (!metrics.vacuum_input && !metrics.signal_below_noise && metrics.eta_e2e.value > 0 &&
      metrics.eta_e2e.value <= 1.0)
    row.f_class = classical_threshold(metrics.mu_in.value, metrics.eta_e2e.value).f_class;
  return row;
}

CampaignReport report_campaign(const std::string& campaign_dir) {
  const std::string manifest_path = campaign_dir + "/manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("report: no manifest.json in " + campaign_dir);
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("report: " + manifest_path + ": " + e.what());
  }

  CampaignReport report;
  try {
    report.cfg = config_from_json(manifest.at("config").dump());
    report.cadence_s = manifest.at("cadence_s").get<double>();
    for (const auto& p : manifest.at("points")) {
      const std::string signal_file = campaign_dir + "/" + p.at("signal_file").get<std::string>();
      const std::string vacuum_file = campaign_dir + "/" + p.at("vacuum_file").get<std::string>();
      const auto analysis = analyze_files(signal_file, vacuum_file, report.cfg);
      report.rows.push_back(make_campaign_row(p.at("index").get<int>(),
                                              p.at("t_offset_s").get<double>(),
                                              analysis.metrics));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("report: malformed manifest: " + std::string(e.what()));
  }
  if (report.rows.empty()) throw ConfigError("report: campaign has no points");
  return report;
}

void report_to_csv(const CampaignReport& report, std::ostream& out) {
  out << "t_offset_s,mu_in,eta_e2e,snr,mu_1,fidelity,f_class\n";
  for (const auto& row : report.rows) {
    const MetricsResult& m = row.metrics;
    out << row.t_offset_s << ',' << m.mu_in.value << ',' << m.eta_e2e.value << ','
        << m.snr.value << ',' << m.mu_1.value << ',' << m.fidelity.value << ',' << row.f_class
        << '\n';
  }
}

namespace {

nlohmann::json column_stats(const std::vector<double>& values) {
  std::vector<double> clean;
  for (double v : values)
    if (std::isfinite(v)) clean.push_back(v);
  if (clean.empty()) return {{"mean", nullptr}, {"sd", nullptr}, {"n", 0}};
  double mean = 0;
  for (double v : clean) mean += v;
  mean /= static_cast<double>(clean.size());
  double var = 0;
  for (double v : clean) var += (v - mean) * (v - mean);
  var = clean.size() > 1 ? var / static_cast<double>(clean.size() - 1) : 0.0;
  return {{"mean", mean}, {"sd", std::sqrt(var)}, {"n", clean.size()}};
}

nlohmann::json adev_section(const std::vector<double>& values, double cadence_s) {
  if (values.size() < 8)
    return {{"available", false}, {"reason", "fewer than 8 points"}};
  StabilitySeries series{values, cadence_s, 0.0};
  nlohmann::json curve = nlohmann::json::array();
  for (const AdevPoint& p : adev_curve(series)) {
    curve.push_back({{"tau_s", p.tau_s},
                     {"adev", p.adev},
                     {"ci_low", p.ci_low},
                     {"ci_high", p.ci_high}});
  }
  nlohmann::json section = {{"available", true}, {"mode", "absolute"}, {"curve", curve}};
  const auto m_1h = static_cast<std::size_t>(std::llround(3600.0 / cadence_s));
  if (m_1h >= 1 && values.size() >= 2 * m_1h + 1)
    section["adev_at_1h"] = overlapping_adev(series.values, m_1h);
  return section;
}

}  // namespace

std::string report_summary_json(const CampaignReport& report) {
  std::vector<double> mu_in, eta, snr_v, mu1_v, fid, fclass;
  for (const auto& row : report.rows) {
    const MetricsResult& m = row.metrics;
    mu_in.push_back(m.mu_in.value);
    eta.push_back(m.eta_e2e.value);
    snr_v.push_back(m.snr.value);
    mu1_v.push_back(m.mu_1.value);
    fid.push_back(m.fidelity.value);
    fclass.push_back(row.f_class);
  }

  nlohmann::json j;
  j["n_points"] = report.rows.size();
  j["cadence_s"] = report.cadence_s;
  j["duration_h"] = report.cadence_s * static_cast<double>(report.rows.size()) / 3600.0;
  j["metrics"] = {{"mu_in", column_stats(mu_in)},   {"eta_e2e", column_stats(eta)},
                  {"snr", column_stats(snr_v)},     {"mu_1", column_stats(mu1_v)},
                  {"fidelity", column_stats(fid)},  {"f_class", column_stats(fclass)}};
  j["adev"] = {{"eta_e2e", adev_section(eta, report.cadence_s)},
               {"fidelity", adev_section(fid, report.cadence_s)}};

  // how often the measured fidelity clears the classical bound
  std::size_t above = 0, comparable = 0;
  for (std::size_t i = 0; i < fid.size(); ++i) {
    if (std::isfinite(fid[i]) && std::isfinite(fclass[i])) {
      ++comparable;
      if (fid[i] > fclass[i]) ++above;
    }
  }
  j["threshold_trace"] = {{"points_compared", comparable}, {"points_above_threshold", above}};
  return j.dump(2);
}

}  // namespace qmtk
