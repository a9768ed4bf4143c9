#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qmtk/metrics.hpp"

// Campaign aggregation: per-point metrics plus the classical threshold at
// each point's measured operating point, the stability summary on top.
// Rows come either from analyzing the (signal, vacuum) file pairs listed in
// a campaign manifest or directly from a counts-level campaign series.

namespace qmtk {

struct CampaignRow {
  int index = 0;
  double t_offset_s = 0;
  MetricsResult metrics;
  double f_class = 0;  // NaN when the point is flagged
};

struct CampaignReport {
  ExperimentConfig cfg;
  double cadence_s = 0;
  std::vector<CampaignRow> rows;
};

CampaignReport report_campaign(const std::string& campaign_dir);

// Attaches the per-point classical threshold (eta_accept = measured
// eta_e2e) to already-computed metrics.
CampaignRow make_campaign_row(int index, double t_offset_s, const MetricsResult& metrics);

// CSV columns: t_offset_s,mu_in,eta_e2e,snr,mu_1,fidelity,f_class
void report_to_csv(const CampaignReport& report, std::ostream& out);

// Means, sample sds, ADEV curves for eta_e2e and fidelity, threshold trace
// statistics. ADEV sections are null below 8 points.
std::string report_summary_json(const CampaignReport& report);

}  // namespace qmtk
