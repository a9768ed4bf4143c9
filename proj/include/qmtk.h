/* qmtk - quantum-memory characterization toolkit, C API.
 *
 * The shared library wraps the simulation and analysis pipeline behind
 * opaque handles and status codes so the CLI and foreign-language bindings
 * stay ABI-stable. Every function returns QMTK_OK on success; on failure
 * the thread-local message from qmtk_last_error() describes what went
 * wrong. Strings and arrays handed out by the library must be released
 * with the matching qmtk_*_free call.
 */

#ifndef QMTK_H
#define QMTK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QMTK_API __declspec(dllexport)
#else
#define QMTK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qmtk_status {
  QMTK_OK = 0,
  QMTK_ERR_USAGE = 2,    /* invalid configuration or arguments */
  QMTK_ERR_DATA = 3,     /* missing or malformed input data */
  QMTK_ERR_INTERNAL = 4, /* anything else */
} qmtk_status;

typedef struct qmtk_config qmtk_config; /* opaque */

QMTK_API const char* qmtk_version(void);

/* Message for the most recent failure on this thread; never NULL. */
QMTK_API const char* qmtk_last_error(void);

/* -------- configuration -------- */

QMTK_API qmtk_status qmtk_config_default(qmtk_config** out);
QMTK_API qmtk_status qmtk_config_load(const char* path, qmtk_config** out);
QMTK_API qmtk_status qmtk_config_from_json(const char* json_text, qmtk_config** out);
QMTK_API qmtk_status qmtk_config_to_json(const qmtk_config* cfg, char** json_out);
/* Override the mean input photon number (0 gives a vacuum run). */
QMTK_API qmtk_status qmtk_config_set_mu_in(qmtk_config* cfg, double mu_in);
QMTK_API void qmtk_config_free(qmtk_config* cfg);
QMTK_API void qmtk_string_free(char* s);

/* -------- simulation -------- */

QMTK_API qmtk_status qmtk_simulate_run(const qmtk_config* cfg, uint64_t seed,
                                       const char* out_path);
QMTK_API qmtk_status qmtk_simulate_campaign(const qmtk_config* cfg, int n_points,
                                            double cadence_s, double drift_amplitude,
                                            uint64_t seed, const char* out_dir);

/* Counts-level campaign: samples each point's detection-window counts from
 * the composed Poisson means (identical in distribution to folding a full
 * click-level run) and writes the same per-point CSV and summary JSON that
 * qmtk_report_campaign produces, without any tag files. Either output path
 * may be NULL. */
QMTK_API qmtk_status qmtk_simulate_campaign_counts(const qmtk_config* cfg, int n_points,
                                                   double cadence_s, double drift_amplitude,
                                                   uint64_t seed, const char* out_csv_path,
                                                   const char* out_json_path);

/* -------- analysis -------- */

/* windows_ns: {mon_start, mon_end, sig_start, sig_end} in ns, or NULL for
 * the defaults derived from the configuration. The result is a JSON
 * document with all metrics, uncertainties and input digests. */
QMTK_API qmtk_status qmtk_analyze(const qmtk_config* cfg, const char* tags_path,
                                  const char* vacuum_path, const double* windows_ns,
                                  char** metrics_json_out);

/* As qmtk_analyze, but with the noise reference as an explicit count
 * instead of a vacuum run: n_noi counts over n_noi_shots shots (0 means the
 * same exposure as the signal run). */
QMTK_API qmtk_status qmtk_analyze_with_noise(const qmtk_config* cfg, const char* tags_path,
                                             double n_noi, uint64_t n_noi_shots,
                                             const double* windows_ns,
                                             char** metrics_json_out);

/* Metrics straight from window counts (counts obtained elsewhere). */
QMTK_API qmtk_status qmtk_metrics_from_counts(const qmtk_config* cfg, double n_mon,
                                              double n_sig, double n_noi, double f_rep_hz,
                                              double t_int_s, char** metrics_json_out);

/* Folded arrival-time histogram of one channel, written as CSV
 * (bin_start_ps,count). span_ps <= 0 selects the full shot period. */
QMTK_API qmtk_status qmtk_histogram_csv(const qmtk_config* cfg, const char* tags_path,
                                        uint16_t channel, int64_t bin_width_ps,
                                        int64_t origin_ps, int64_t span_ps,
                                        const char* out_csv_path);

/* -------- lifetime fit -------- */

typedef struct qmtk_fit_result {
  double amplitude;
  double tau;
  double amplitude_sd;
  double tau_sd;
  double cov_amplitude_tau;
  double residual_norm;
  int iterations;
  int weighted;
} qmtk_fit_result;

/* sigma_y may be NULL for an unweighted fit. x and tau share one unit. */
QMTK_API qmtk_status qmtk_fit_lifetime(const double* x, const double* y,
                                       const double* sigma_y, size_t n,
                                       qmtk_fit_result* out);
QMTK_API qmtk_status qmtk_fit_lifetime_csv(const char* points_csv_path,
                                           qmtk_fit_result* out);

/* -------- stability -------- */

typedef struct qmtk_adev_point {
  double tau_s;
  double adev;
  double ci_low;
  double ci_high;
} qmtk_adev_point;

QMTK_API qmtk_status qmtk_adev_curve(const double* values, size_t n, double tau0_s,
                                     int normalize, double confidence,
                                     qmtk_adev_point** points_out, size_t* n_points_out);
QMTK_API void qmtk_adev_points_free(qmtk_adev_point* points);

/* CSV of "timestamp_s,value" rows (or one value per line with tau0_s > 0). */
QMTK_API qmtk_status qmtk_series_read_csv(const char* path, int interpolate_gaps,
                                          double** values_out, size_t* n_out,
                                          double* tau0_s_out);
QMTK_API void qmtk_series_free(double* values);

/* -------- classical threshold -------- */

QMTK_API qmtk_status qmtk_classical_threshold(double mu_in, double eta_accept,
                                              double* f_class_out);

typedef struct qmtk_threshold_stratum {
  int n;
  double p_n;
  double accepted_fraction;
  double fidelity_n;
} qmtk_threshold_stratum;

QMTK_API qmtk_status qmtk_threshold_strata(double mu_in, double eta_accept,
                                           double* f_class_out,
                                           qmtk_threshold_stratum** strata_out,
                                           size_t* n_strata_out);
QMTK_API void qmtk_threshold_strata_free(qmtk_threshold_stratum* strata);

/* -------- campaign report -------- */

/* Reads manifest.json in campaign_dir, analyzes every point and writes an
 * aggregated CSV plus a summary JSON (means, sds, ADEV curves, threshold
 * trace). Either output path may be NULL to skip it. */
QMTK_API qmtk_status qmtk_report_campaign(const char* campaign_dir, const char* out_csv_path,
                                          const char* out_json_path);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* QMTK_H */
