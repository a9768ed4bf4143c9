// qmtk command-line front end. Talks to the toolkit exclusively through the
// C API in qmtk.h, the same surface foreign-language bindings use.
//
// Exit codes: 0 success, 2 usage/configuration error, 3 data error.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qmtk.h"

namespace {

int code_of(qmtk_status st) {
  switch (st) {
    case QMTK_OK:
      return 0;
    case QMTK_ERR_USAGE:
      return 2;
    case QMTK_ERR_DATA:
      return 3;
    default:
      return 4;
  }
}

int bail(qmtk_status st) {
  std::fprintf(stderr, "qmtk: error: %s\n", qmtk_last_error());
  return code_of(st);
}

struct ConfigHandle {
  qmtk_config* cfg = nullptr;
  ~ConfigHandle() { qmtk_config_free(cfg); }
};

int load_config(const std::string& path, ConfigHandle& handle) {
  const qmtk_status st =
      path.empty() ? qmtk_config_default(&handle.cfg) : qmtk_config_load(path.c_str(), &handle.cfg);
  return st == QMTK_OK ? 0 : bail(st);
}

// atomic text output: write whole file via tmp + rename is handled inside
// the library; stdout pass-through here
int emit(const std::string& out_path, const char* text) {
  if (out_path.empty()) {
    std::fputs(text, stdout);
    std::fputc('\n', stdout);
    return 0;
  }
  const std::string tmp = out_path + ".tmp";
  std::FILE* f = std::fopen(tmp.c_str(), "w");
  if (!f) {
    std::fprintf(stderr, "qmtk: error: cannot open %s\n", tmp.c_str());
    return 3;
  }
  std::fputs(text, f);
  std::fputc('\n', f);
  std::fclose(f);
  if (std::rename(tmp.c_str(), out_path.c_str()) != 0) {
    std::fprintf(stderr, "qmtk: error: cannot rename %s\n", tmp.c_str());
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon-counting simulator and characterization pipeline for "
               "pulsed optical quantum-memory runs"};
  app.require_subcommand(1);

  // ---- simulate ----
  std::string sim_config, sim_out;
  std::uint64_t sim_seed = 1;
  double sim_mu = -1.0;
  int campaign_points = 0;
  double cadence_s = 53.1, drift = 0.0;
  auto* sim = app.add_subcommand("simulate", "Generate QTT1 time-tag files");
  sim->add_option("--config", sim_config, "Experiment configuration JSON");
  sim->add_option("--out", sim_out, "Output file (or directory with --campaign)");
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--mu", sim_mu, "Override mu_in_target (0 gives a vacuum run)");
  std::string counts_csv, counts_json;
  sim->add_option("--campaign", campaign_points, "Simulate N points (signal + vacuum pairs)");
  sim->add_option("--cadence-s", cadence_s, "Campaign cadence in seconds");
  sim->add_option("--drift", drift, "Log random-walk drift amplitude per point");
  sim->add_option("--counts-csv", counts_csv,
                  "Campaign at the window-counts level: write per-point metrics CSV here "
                  "instead of tag files (fast, no --out needed)");
  sim->add_option("--counts-summary", counts_json, "Summary JSON for --counts-csv mode");

  // ---- analyze ----
  std::string an_tags, an_vacuum, an_config, an_out, an_hist;
  std::vector<double> an_windows;
  double an_n_noi = -1.0;
  std::uint64_t an_n_noi_shots = 0;
  std::int64_t hist_bin_ps = 5;
  std::vector<double> hist_span_ns;
  auto* analyze = app.add_subcommand("analyze", "Metrics from a signal + vacuum run pair");
  analyze->add_option("--tags", an_tags, "Signal-run QTT1 file")->required();
  analyze->add_option("--vacuum", an_vacuum, "Vacuum-run QTT1 file (mu_in = 0)");
  analyze->add_option("--n-noi", an_n_noi,
                      "Explicit noise count in the signal window, instead of --vacuum");
  analyze->add_option("--n-noi-shots", an_n_noi_shots,
                      "Exposure of --n-noi in shots (default: same as the signal run)");
  analyze->add_option("--config", an_config, "Experiment configuration JSON");
  analyze->add_option("--windows", an_windows,
                      "Detection windows in ns: mon_start,mon_end,sig_start,sig_end")
      ->delimiter(',')
      ->expected(4);
  analyze->add_option("--out", an_out, "Metrics JSON path (default: stdout)");
  std::uint16_t hist_channel = 1;
  analyze->add_option("--hist", an_hist, "Also write the folded signal histogram CSV here");
  analyze->add_option("--hist-channel", hist_channel, "Histogram channel (1 signal, 2 monitor)");
  analyze->add_option("--hist-bin-ps", hist_bin_ps, "Histogram bin width in ps");
  analyze->add_option("--hist-span-ns", hist_span_ns, "Histogram span in ns: start,end")
      ->delimiter(',')
      ->expected(2);

  // ---- adev ----
  std::string adev_series, adev_out;
  double tau0_s = 0.0, confidence = 0.683;
  bool normalize = false, interp = false;
  auto* adev = app.add_subcommand("adev", "Overlapping Allan deviation of a metric series");
  adev->add_option("--series", adev_series, "CSV of timestamp_s,value rows")->required();
  adev->add_option("--tau0-s", tau0_s, "Sampling cadence (else from timestamps)");
  adev->add_flag("--normalize", normalize, "Fractional deviation (divide by the mean)");
  adev->add_flag("--interpolate-gaps", interp, "Fill cadence gaps by linear interpolation");
  adev->add_option("--confidence", confidence, "Two-sided confidence level");
  adev->add_option("--out", adev_out, "Output CSV (default: stdout)");

  // ---- fit-lifetime ----
  std::string fit_points, fit_out;
  auto* fit = app.add_subcommand("fit-lifetime", "Exponential fit of a storage-time scan");
  fit->add_option("--points", fit_points, "CSV of x,y[,sigma_y] rows")->required();
  fit->add_option("--out", fit_out, "Fit report JSON (default: stdout)");

  // ---- threshold ----
  double thr_mu = 0.0, thr_eta = 0.0;
  std::string thr_out;
  auto* thr = app.add_subcommand("threshold",
                                 "Classical measure-and-prepare fidelity bound for WCS input");
  thr->add_option("--mu", thr_mu, "Mean input photon number")->required();
  thr->add_option("--eta", thr_eta, "Accepted success probability (e.g. eta_e2e)")->required();
  thr->add_option("--out", thr_out, "Write the stratum table CSV here");

  // ---- report ----
  std::string rep_dir, rep_csv, rep_json;
  auto* rep = app.add_subcommand("report", "Aggregate a simulated campaign directory");
  rep->add_option("--campaign-dir", rep_dir, "Directory with manifest.json")->required();
  rep->add_option("--out-csv", rep_csv, "Aggregated per-point CSV");
  rep->add_option("--out-json", rep_json, "Summary JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (sim->parsed()) {
    ConfigHandle cfg;
    if (int rc = load_config(sim_config, cfg)) return rc;
    if (sim_mu >= 0.0) {
      if (auto st = qmtk_config_set_mu_in(cfg.cfg, sim_mu)) return bail(st);
    }
    if (!counts_csv.empty()) {
      if (auto st = qmtk_simulate_campaign_counts(
              cfg.cfg, campaign_points, cadence_s, drift, sim_seed, counts_csv.c_str(),
              counts_json.empty() ? nullptr : counts_json.c_str()))
        return bail(st);
      std::printf("campaign (counts level): %d points -> %s\n", campaign_points,
                  counts_csv.c_str());
    } else if (campaign_points > 0) {
      if (sim_out.empty()) {
        std::fprintf(stderr, "qmtk: error: --campaign needs --out DIR (or --counts-csv)\n");
        return 2;
      }
      if (auto st = qmtk_simulate_campaign(cfg.cfg, campaign_points, cadence_s, drift, sim_seed,
                                           sim_out.c_str()))
        return bail(st);
      std::printf("campaign: %d points -> %s\n", campaign_points, sim_out.c_str());
    } else {
      if (sim_out.empty()) {
        std::fprintf(stderr, "qmtk: error: simulate needs --out PATH\n");
        return 2;
      }
      if (auto st = qmtk_simulate_run(cfg.cfg, sim_seed, sim_out.c_str())) return bail(st);
      char* json = nullptr;
      if (qmtk_config_to_json(cfg.cfg, &json) == QMTK_OK) {
        std::printf("run: seed %" PRIu64 " -> %s\nconfig:\n%s\n", sim_seed, sim_out.c_str(),
                    json);
        qmtk_string_free(json);
      }
    }
    return 0;
  }

  if (analyze->parsed()) {
    ConfigHandle cfg;
    if (int rc = load_config(an_config, cfg)) return rc;
    if (an_vacuum.empty() == (an_n_noi < 0)) {
      std::fprintf(stderr,
                   "qmtk: error: pass exactly one noise reference: --vacuum or --n-noi\n");
      return 2;
    }
    char* json = nullptr;
    const double* windows = an_windows.size() == 4 ? an_windows.data() : nullptr;
    const qmtk_status st =
        an_vacuum.empty()
            ? qmtk_analyze_with_noise(cfg.cfg, an_tags.c_str(), an_n_noi, an_n_noi_shots,
                                      windows, &json)
            : qmtk_analyze(cfg.cfg, an_tags.c_str(), an_vacuum.c_str(), windows, &json);
    if (st != QMTK_OK) return bail(st);
    const int rc = emit(an_out, json);
    qmtk_string_free(json);
    if (rc) return rc;
    if (!an_hist.empty()) {
      std::int64_t origin_ps = 0, span_ps = 0;
      if (hist_span_ns.size() == 2) {
        origin_ps = static_cast<std::int64_t>(hist_span_ns[0] * 1e3);
        span_ps = static_cast<std::int64_t>((hist_span_ns[1] - hist_span_ns[0]) * 1e3);
      }
      if (auto st = qmtk_histogram_csv(cfg.cfg, an_tags.c_str(), hist_channel, hist_bin_ps,
                                       origin_ps, span_ps, an_hist.c_str()))
        return bail(st);
    }
    return 0;
  }

  if (adev->parsed()) {
    double* values = nullptr;
    size_t n = 0;
    double tau0_from_file = 0.0;
    if (auto st = qmtk_series_read_csv(adev_series.c_str(), interp ? 1 : 0, &values, &n,
                                       &tau0_from_file))
      return bail(st);
    const double tau0 = tau0_s > 0 ? tau0_s : tau0_from_file;
    if (!(tau0 > 0)) {
      qmtk_series_free(values);
      std::fprintf(stderr, "qmtk: error: no cadence; pass --tau0-s or a timestamp column\n");
      return 2;
    }
    qmtk_adev_point* points = nullptr;
    size_t n_points = 0;
    const qmtk_status st =
        qmtk_adev_curve(values, n, tau0, normalize ? 1 : 0, confidence, &points, &n_points);
    qmtk_series_free(values);
    if (st != QMTK_OK) return bail(st);
    std::string csv = "tau_s,adev,ci_low,ci_high\n";
    char line[160];
    for (size_t i = 0; i < n_points; ++i) {
      std::snprintf(line, sizeof(line), "%.9g,%.9g,%.9g,%.9g\n", points[i].tau_s, points[i].adev,
                    points[i].ci_low, points[i].ci_high);
      csv += line;
    }
    qmtk_adev_points_free(points);
    return emit(adev_out, csv.c_str());
  }

  if (fit->parsed()) {
    qmtk_fit_result result;
    if (auto st = qmtk_fit_lifetime_csv(fit_points.c_str(), &result)) return bail(st);
    char json[512];
    std::snprintf(json, sizeof(json),
                  "{\n  \"model\": \"H*exp(-x/tau)\",\n  \"amplitude\": %.12g,\n"
                  "  \"amplitude_sd\": %.12g,\n  \"tau\": %.12g,\n  \"tau_sd\": %.12g,\n"
                  "  \"cov_amplitude_tau\": %.12g,\n  \"residual_norm\": %.12g,\n"
                  "  \"iterations\": %d,\n  \"weighted\": %s\n}",
                  result.amplitude, result.amplitude_sd, result.tau, result.tau_sd,
                  result.cov_amplitude_tau, result.residual_norm, result.iterations,
                  result.weighted ? "true" : "false");
    return emit(fit_out, json);
  }

  if (thr->parsed()) {
    double f_class = 0;
    qmtk_threshold_stratum* strata = nullptr;
    size_t n_strata = 0;
    if (auto st = qmtk_threshold_strata(thr_mu, thr_eta, &f_class, &strata, &n_strata))
      return bail(st);
    std::printf("F_class = %.6f  (mu_in = %g, eta_accept = %g)\n", f_class, thr_mu, thr_eta);
    std::printf("%4s  %-12s  %-10s  %s\n", "N", "p_N", "accepted", "F_N");
    std::string table = "n,p_n,accepted_fraction,fidelity_n\n";
    for (size_t i = 0; i < n_strata; ++i) {
      const auto& s = strata[i];
      if (s.accepted_fraction > 0 || (i > 0 && strata[i - 1].accepted_fraction > 0))
        std::printf("%4d  %-12.6g  %-10.6g  %.6f\n", s.n, s.p_n, s.accepted_fraction,
                    s.fidelity_n);
      char line[128];
      std::snprintf(line, sizeof(line), "%d,%.12g,%.12g,%.12g\n", s.n, s.p_n,
                    s.accepted_fraction, s.fidelity_n);
      table += line;
    }
    qmtk_threshold_strata_free(strata);
    if (!thr_out.empty()) return emit(thr_out, table.c_str());
    return 0;
  }

  if (rep->parsed()) {
    const std::string csv = rep_csv.empty() ? rep_dir + "/campaign.csv" : rep_csv;
    const std::string json = rep_json.empty() ? rep_dir + "/summary.json" : rep_json;
    if (auto st = qmtk_report_campaign(rep_dir.c_str(), csv.c_str(), json.c_str()))
      return bail(st);
    std::printf("report: %s\n        %s\n", csv.c_str(), json.c_str());
    return 0;
  }

  return 2;
}
