// Exercises the shared-library surface alone: handles, status codes,
// thread-local error strings, ownership of returned buffers.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "qmtk.h"

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

struct Cfg {
  qmtk_config* p = nullptr;
  ~Cfg() { qmtk_config_free(p); }
};

}  // namespace

TEST_CASE("version and config lifecycle") {
  CHECK(std::strlen(qmtk_version()) > 0);

  Cfg cfg;
  REQUIRE(qmtk_config_default(&cfg.p) == QMTK_OK);
  char* json = nullptr;
  REQUIRE(qmtk_config_to_json(cfg.p, &json) == QMTK_OK);
  const auto parsed = nlohmann::json::parse(json);
  CHECK(parsed["f_rep_hz"] == 31000.0);
  CHECK(parsed["signal_pulse"]["fwhm_ns"] == 10.0);
  qmtk_string_free(json);

  Cfg round;
  REQUIRE(qmtk_config_from_json(parsed.dump().c_str(), &round.p) == QMTK_OK);

  CHECK(qmtk_config_set_mu_in(cfg.p, -1.0) == QMTK_ERR_USAGE);
  CHECK(qmtk_config_set_mu_in(cfg.p, 0.0) == QMTK_OK);
}

TEST_CASE("status codes and last_error") {
  Cfg cfg;
  CHECK(qmtk_config_load("/nonexistent/config.json", &cfg.p) == QMTK_ERR_USAGE);
  CHECK(std::strlen(qmtk_last_error()) > 0);

  CHECK(qmtk_config_from_json("{\"bogus_key\": 1}", &cfg.p) == QMTK_ERR_USAGE);
  CHECK(std::string(qmtk_last_error()).find("bogus_key") != std::string::npos);

  REQUIRE(qmtk_config_default(&cfg.p) == QMTK_OK);
  char* json = nullptr;
  CHECK(qmtk_analyze(cfg.p, "/no/such.qtt1", "/no/such2.qtt1", nullptr, &json) ==
        QMTK_ERR_DATA);
}

TEST_CASE("simulate then analyze through the C surface") {
  Cfg cfg;
  REQUIRE(qmtk_config_default(&cfg.p) == QMTK_OK);
  // short run to keep the suite quick
  Cfg short_cfg;
  REQUIRE(qmtk_config_from_json(R"({"t_int_s": 0.5})", &short_cfg.p) == QMTK_OK);

  const auto tags = temp_path("capi_signal.qtt1");
  const auto vacuum = temp_path("capi_vacuum.qtt1");
  REQUIRE(qmtk_simulate_run(short_cfg.p, 2024, tags.c_str()) == QMTK_OK);
  REQUIRE(qmtk_config_set_mu_in(short_cfg.p, 0.0) == QMTK_OK);
  REQUIRE(qmtk_simulate_run(short_cfg.p, 2025, vacuum.c_str()) == QMTK_OK);

  char* json = nullptr;
  REQUIRE(qmtk_analyze(short_cfg.p, tags.c_str(), vacuum.c_str(), nullptr, &json) == QMTK_OK);
  auto parsed = nlohmann::json::parse(json);
  qmtk_string_free(json);
  CHECK(parsed["counts"]["n_mon"].get<double>() > 0);
  CHECK(parsed["metrics"]["mu_in"]["value"].get<double>() ==
        doctest::Approx(1.0).epsilon(0.15));
  CHECK(parsed["windows_ns"]["signal"][0] == 110.0);

  // windows override is echoed back
  const double windows[4] = {-40, 40, 100, 140};
  REQUIRE(qmtk_analyze(short_cfg.p, tags.c_str(), vacuum.c_str(), windows, &json) == QMTK_OK);
  parsed = nlohmann::json::parse(json);
  qmtk_string_free(json);
  CHECK(parsed["windows_ns"]["signal"][0] == 100.0);
  CHECK(parsed["windows_ns"]["signal"][1] == 140.0);

  // explicit N_noi replaces the vacuum run and gives the same metrics
  {
    char* j2 = nullptr;
    REQUIRE(qmtk_analyze(short_cfg.p, tags.c_str(), vacuum.c_str(), nullptr, &j2) == QMTK_OK);
    const auto p2 = nlohmann::json::parse(j2);
    qmtk_string_free(j2);
    const double n_noi_raw = p2["counts"]["n_noi_raw"].get<double>();
    const auto shots_vac = p2["inputs"]["vacuum"]["shots"].get<uint64_t>();
    char* j3 = nullptr;
    REQUIRE(qmtk_analyze_with_noise(short_cfg.p, tags.c_str(), n_noi_raw, shots_vac, nullptr,
                                    &j3) == QMTK_OK);
    const auto p3 = nlohmann::json::parse(j3);
    qmtk_string_free(j3);
    CHECK(p3["metrics"]["eta_e2e"]["value"].get<double>() ==
          doctest::Approx(p2["metrics"]["eta_e2e"]["value"].get<double>()));
    CHECK(p3["metrics"]["snr"]["value"].get<double>() ==
          doctest::Approx(p2["metrics"]["snr"]["value"].get<double>()));
    CHECK(p3["inputs"]["vacuum"]["path"] == "(explicit N_noi)");
  }

  // a vacuum run analyzed as the signal run flags instead of crashing
  REQUIRE(qmtk_analyze(short_cfg.p, vacuum.c_str(), vacuum.c_str(), nullptr, &json) == QMTK_OK);
  parsed = nlohmann::json::parse(json);
  qmtk_string_free(json);
  CHECK(parsed["flags"]["vacuum_input"] == true);
  CHECK(parsed["metrics"]["eta_e2e"]["value"] == 0.0);

  // histogram CSV lands on disk
  const auto hist = temp_path("capi_hist.csv");
  REQUIRE(qmtk_histogram_csv(short_cfg.p, tags.c_str(), 1, 1000, -250'000, 500'000,
                             hist.c_str()) == QMTK_OK);
  CHECK(std::filesystem::file_size(hist) > 0);

  std::filesystem::remove(tags);
  std::filesystem::remove(vacuum);
  std::filesystem::remove(hist);
}

TEST_CASE("metrics from explicit counts") {
  Cfg cfg;
  REQUIRE(qmtk_config_default(&cfg.p) == QMTK_OK);
  char* json = nullptr;
  REQUIRE(qmtk_metrics_from_counts(cfg.p, 19929, 11073 + 719, 719, 31000, 20, &json) == QMTK_OK);
  const auto parsed = nlohmann::json::parse(json);
  qmtk_string_free(json);
  CHECK(parsed["metrics"]["mu_in"]["value"].get<double>() == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(parsed["metrics"]["snr"]["value"].get<double>() == doctest::Approx(15.4).epsilon(1e-3));
}

TEST_CASE("fit, adev and threshold through the C surface") {
  const double x[5] = {0.15e-6, 0.5e-6, 1e-6, 2e-6, 4e-6};
  double y[5];
  for (int i = 0; i < 5; ++i) y[i] = 0.054 * std::exp(-x[i] / 2.4e-6);
  qmtk_fit_result fit;
  REQUIRE(qmtk_fit_lifetime(x, y, nullptr, 5, &fit) == QMTK_OK);
  CHECK(fit.tau == doctest::Approx(2.4e-6).epsilon(1e-8));
  CHECK(fit.weighted == 0);

  double series[64];
  for (int i = 0; i < 64; ++i) series[i] = (i % 2 == 0) ? 1.0 : -1.0;
  qmtk_adev_point* points = nullptr;
  size_t n_points = 0;
  REQUIRE(qmtk_adev_curve(series, 64, 53.1, 0, 0.683, &points, &n_points) == QMTK_OK);
  REQUIRE(n_points > 0);
  CHECK(points[0].tau_s == doctest::Approx(53.1));
  CHECK(points[0].adev == doctest::Approx(std::sqrt(2.0)));  // alternating +-1 at m = 1
  qmtk_adev_points_free(points);

  double f_class = 0;
  REQUIRE(qmtk_classical_threshold(1.0, 0.052, &f_class) == QMTK_OK);
  CHECK(f_class == doctest::Approx(0.813).epsilon(2e-3));
  CHECK(qmtk_classical_threshold(1.0, 1.5, &f_class) == QMTK_ERR_USAGE);

  qmtk_threshold_stratum* strata = nullptr;
  size_t n_strata = 0;
  REQUIRE(qmtk_threshold_strata(1.0, 0.052, &f_class, &strata, &n_strata) == QMTK_OK);
  REQUIRE(n_strata > 4);
  CHECK(strata[0].fidelity_n == 0.5);
  CHECK(strata[3].accepted_fraction == doctest::Approx(0.538).epsilon(2e-3));
  qmtk_threshold_strata_free(strata);
}

TEST_CASE("campaign round trip through the C surface") {
  Cfg cfg;
  REQUIRE(qmtk_config_from_json(R"({"t_int_s": 0.02})", &cfg.p) == QMTK_OK);
  const auto dir = temp_path("capi_campaign");
  std::filesystem::remove_all(dir);
  REQUIRE(qmtk_simulate_campaign(cfg.p, 3, 1.0, 0.0, 7, dir.c_str()) == QMTK_OK);

  const auto csv = dir + "/campaign.csv";
  const auto summary = dir + "/summary.json";
  REQUIRE(qmtk_report_campaign(dir.c_str(), csv.c_str(), summary.c_str()) == QMTK_OK);
  std::ifstream in(summary);
  nlohmann::json parsed;
  in >> parsed;
  CHECK(parsed["n_points"] == 3);
  CHECK(parsed["adev"]["eta_e2e"]["available"] == false);  // needs 8 points

  CHECK(qmtk_report_campaign("/no/such/dir", nullptr, nullptr) == QMTK_ERR_USAGE);
  std::filesystem::remove_all(dir);
}

TEST_CASE("counts-level campaign writes the same report shape") {
  Cfg cfg;
  REQUIRE(qmtk_config_default(&cfg.p) == QMTK_OK);
  const auto csv = temp_path("capi_counts.csv");
  const auto summary = temp_path("capi_counts.json");
  REQUIRE(qmtk_simulate_campaign_counts(cfg.p, 64, 53.1, 0.0, 9, csv.c_str(),
                                        summary.c_str()) == QMTK_OK);
  std::ifstream in(summary);
  nlohmann::json parsed;
  in >> parsed;
  CHECK(parsed["n_points"] == 64);
  CHECK(parsed["adev"]["eta_e2e"]["available"] == true);
  CHECK(parsed["metrics"]["mu_in"]["mean"].get<double>() == doctest::Approx(1.0).epsilon(0.01));
  CHECK(parsed["metrics"]["f_class"]["mean"].get<double>() ==
        doctest::Approx(0.816).epsilon(0.02));
  CHECK(parsed["threshold_trace"]["points_above_threshold"] == 64);

  std::ifstream csv_in(csv);
  std::string header;
  std::getline(csv_in, header);
  CHECK(header == "t_offset_s,mu_in,eta_e2e,snr,mu_1,fidelity,f_class");

  std::filesystem::remove(csv);
  std::filesystem::remove(summary);
}
