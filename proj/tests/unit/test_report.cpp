#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "risisac/report.hpp"

using namespace risisac;
using json = nlohmann::json;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(FormatNumber, ShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(3.0), "3");
  EXPECT_EQ(format_number(-2.5e-13), "-2.5e-13");
  const double x = 1.0 / 3.0;
  EXPECT_EQ(std::stod(format_number(x)), x);
}

TEST(FormatNumber, NonFiniteSpelledOut) {
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
}

TEST(Csv, SweepHeaderAndRow) {
  SweepRow r;
  r.scheme = "no-ris";
  r.axis_value = 10;
  r.seed = 7;
  r.power_w = 12.5;
  r.iterations = 1;
  r.status = "ok";
  r.min_se_margin = 0;
  r.min_snr_margin_db = std::numeric_limits<double>::quiet_NaN();
  std::ostringstream out;
  write_sweep_csv({r}, out);
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "scheme,axis_value,seed,power_w,iterations,status,min_se_margin,min_snr_margin_db");
  EXPECT_EQ(lines[1], "no-ris,10,7,12.5,1,ok,0,nan");
}

TEST(Csv, HeatmapRows) {
  std::ostringstream out;
  write_heatmap_csv({{0, 5, 1.25, false}, {45, 85, -std::numeric_limits<double>::infinity(), true}}, out);
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "x,y,snr_db");
  EXPECT_EQ(lines[1], "0,5,1.25");
  EXPECT_EQ(lines[2], "45,85,-inf");
}

TEST(Csv, ConvergenceIterationsAreOneBased) {
  RunReport a, b;
  a.power_history = {3, 2};
  b.power_history = {4};
  std::ostringstream out;
  write_convergence_csv({a, b}, out);
  EXPECT_EQ(out.str(), "init,iteration,power_w\n0,1,3\n0,2,2\n1,1,4\n");
}

TEST(RunReportJson, CarriesHistoryMetricsAndPhases) {
  const ScenarioConfig cfg = desk_preset();
  const Trial t = make_trial(cfg, 0);
  AoOptions opts;
  opts.max_iter = 2;
  const RunReport r = run_scheme(cfg, t, Scheme::Proposed, opts);
  const json doc = json::parse(run_report_json(r, "2026-01-01T00:00:00Z"));
  EXPECT_EQ(doc["format"], "risisac-run/1");
  EXPECT_EQ(doc["scheme"], "proposed");
  EXPECT_EQ(doc["iterations"], r.iterations);
  ASSERT_EQ(doc["power_history_w"].size(), r.power_history.size());
  EXPECT_EQ(doc["power_history_w"].back().get<double>(), r.final_power());
  EXPECT_EQ(doc["metrics"]["se_bps_hz"].size(), static_cast<std::size_t>(cfg.num_users()));
  EXPECT_EQ(doc["metrics"]["sensing_snr"].size(), static_cast<std::size_t>(cfg.region.num_points()));
  EXPECT_EQ(doc["beamformers"].size(), static_cast<std::size_t>(cfg.num_users() + 1));
  EXPECT_EQ(doc["phases"].size(), static_cast<std::size_t>(cfg.num_ris_elements()));
  EXPECT_EQ(doc["records"].size(), r.records.size());
  EXPECT_EQ(doc["metadata"]["generated_at"], "2026-01-01T00:00:00Z");
  const double re = doc["phases"][0][0], im = doc["phases"][0][1];
  EXPECT_EQ(cd(re, im), r.v.v(0));
}

TEST(RunReportJson, DeterministicApartFromTimestamp) {
  const ScenarioConfig cfg = desk_preset();
  const Trial t = make_trial(cfg, 1);
  const RunReport r = run_baseline(cfg, t, Scheme::NoRis, {});
  json a = json::parse(run_report_json(r, "a"));
  json b = json::parse(run_report_json(run_baseline(cfg, make_trial(cfg, 1), Scheme::NoRis, {}), "b"));
  a.erase("metadata");
  b.erase("metadata");
  EXPECT_EQ(a, b);
}

TEST(RunReportJson, InfeasibleRunOmitsBeamformers) {
  RunReport r;
  r.stop = StopReason::InfeasibleFirstStep;
  r.v = PhaseShifts::zero_phase(2);
  const json doc = json::parse(run_report_json(r));
  EXPECT_EQ(doc["status"], "infeasible");
  EXPECT_FALSE(doc.contains("beamformers"));
  EXPECT_FALSE(doc.contains("metrics"));
}

TEST(RunReportJson, NonFiniteDiagnosticsBecomeStrings) {
  RunReport r;
  r.stop = StopReason::Converged;
  r.power_history = {0.0};
  r.metrics.min_se_margin = std::numeric_limits<double>::infinity();
  IterationRecord rec;
  rec.phase_status = StepStatus::Ok;
  rec.phases.chosen_margin = std::numeric_limits<double>::infinity();
  r.records.push_back(rec);
  const json doc = json::parse(run_report_json(r));
  EXPECT_EQ(doc["metrics"]["min_se_margin"], "inf");
  EXPECT_EQ(doc["records"][0]["phases"]["chosen_margin"], "inf");
}

TEST(WriteTextFile, CreatesParentDirectories) {
  const auto dir = std::filesystem::temp_directory_path() / "risisac_report_test";
  std::filesystem::remove_all(dir);
  const auto path = dir / "a" / "b" / "out.txt";
  write_text_file(path, "hello\n");
  std::ifstream in(path);
  std::string s;
  std::getline(in, s);
  EXPECT_EQ(s, "hello");
  std::filesystem::remove_all(dir);
}
