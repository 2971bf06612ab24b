#include "risisac/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace risisac {

using json = nlohmann::ordered_json;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << kSweepHeader << "\n";
  for (const auto& r : rows)
    out << r.scheme << "," << format_number(r.axis_value) << "," << r.seed << "," << format_number(r.power_w)
        << "," << r.iterations << "," << r.status << "," << format_number(r.min_se_margin) << ","
        << format_number(r.min_snr_margin_db) << "\n";
}

void write_heatmap_csv(const std::vector<HeatmapCell>& cells, std::ostream& out) {
  out << kHeatmapHeader << "\n";
  for (const auto& c : cells)
    out << format_number(c.x) << "," << format_number(c.y) << "," << format_number(c.snr_db) << "\n";
}

void write_convergence_csv(const std::vector<RunReport>& runs, std::ostream& out) {
  out << kConvergenceHeader << "\n";
  for (std::size_t i = 0; i < runs.size(); ++i)
    for (std::size_t n = 0; n < runs[i].power_history.size(); ++n)
      out << i << "," << n + 1 << "," << format_number(runs[i].power_history[n]) << "\n";
}

namespace {

json num(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

json complex_array(const CVec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back({v(i).real(), v(i).imag()});
  return arr;
}

json kkt_json(const KktResiduals& k) {
  return {{"primal_feasibility", num(k.primal_feasibility)},
          {"dual_feasibility", num(k.dual_feasibility)},
          {"complementarity", num(k.complementarity)},
          {"psd_violation", num(k.psd_violation)}};
}

}  // namespace

std::string run_report_json(const RunReport& r, const std::string& generated_at) {
  json doc;
  doc["format"] = "risisac-run/1";
  doc["scheme"] = to_string(r.scheme);
  doc["seed"] = r.seed;
  doc["config_digest"] = r.config_digest;
  doc["stop_reason"] = to_string(r.stop);
  doc["status"] = r.status();
  doc["iterations"] = r.iterations;
  json hist = json::array();
  for (double p : r.power_history) hist.push_back(num(p));
  doc["power_history_w"] = hist;

  if (r.feasible()) {
    json m;
    m["total_power_w"] = num(r.metrics.total_power_w);
    json se = json::array();
    for (double x : r.metrics.se_bps_hz) se.push_back(num(x));
    m["se_bps_hz"] = se;
    json snr = json::array();
    for (double x : r.metrics.sensing_snr) snr.push_back(num(x));
    m["sensing_snr"] = snr;
    m["min_se_margin"] = num(r.metrics.min_se_margin);
    m["min_snr_margin_db"] = num(r.metrics.min_snr_margin_db);
    doc["metrics"] = m;
    json ws = json::array();
    for (const auto& w : r.w.w) ws.push_back(complex_array(w));
    doc["beamformers"] = ws;
  }
  doc["phases"] = complex_array(r.v.v);

  json recs = json::array();
  for (const auto& rec : r.records) {
    json j;
    j["iteration"] = rec.iteration;
    j["power_w"] = num(rec.power_w);
    j["beamform"] = {{"status", to_string(rec.beamform_status)},
                     {"sdp_objective", num(rec.beamform.sdp_objective)},
                     {"final_power", num(rec.beamform.final_power)},
                     {"extraction_ratios", rec.beamform.extraction_ratios},
                     {"used_randomization", rec.beamform.used_randomization},
                     {"candidates_tried", rec.beamform.candidates_tried},
                     {"sdp_iterations", rec.beamform.sdp_iterations},
                     {"kkt", kkt_json(rec.beamform.kkt)},
                     {"kept_previous", rec.kept_previous_w},
                     {"message", rec.beamform.message}};
    if (rec.phase_status) {
      j["phases"] = {{"status", to_string(*rec.phase_status)},
                     {"sdp_slack", num(rec.phases.sdp_slack)},
                     {"rank_ratio", num(rec.phases.rank_ratio)},
                     {"used_randomization", rec.phases.used_randomization},
                     {"candidates", rec.phases.candidates},
                     {"chosen_margin", num(rec.phases.chosen_margin)},
                     {"incumbent_margin", num(rec.incumbent_margin)},
                     {"accepted", rec.phases_accepted},
                     {"sdp_iterations", rec.phases.sdp_iterations},
                     {"kkt", kkt_json(rec.phases.kkt)},
                     {"message", rec.phases.message}};
    }
    recs.push_back(j);
  }
  doc["records"] = recs;
  doc["metadata"] = {{"generated_at", generated_at}};
  return doc.dump(2) + "\n";
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace risisac
