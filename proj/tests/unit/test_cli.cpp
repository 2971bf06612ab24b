#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "risisac/channel.hpp"
#include "risisac/driver.hpp"
#include "risisac/report.hpp"
#include "risisac_cli/cli.hpp"

using namespace risisac;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "ris_isac");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string s;
  std::getline(in, s);
  return s;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string s; std::getline(in, s);) ++n;
  return n;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("risisac_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST(ParseSeeds, RangesListsAndSingles) {
  EXPECT_EQ(cli::parse_seeds("3"), (std::vector<std::uint64_t>{3}));
  EXPECT_EQ(cli::parse_seeds("0..3"), (std::vector<std::uint64_t>{0, 1, 2, 3}));
  EXPECT_EQ(cli::parse_seeds("1,4..5,9"), (std::vector<std::uint64_t>{1, 4, 5, 9}));
  EXPECT_EQ(cli::parse_seeds("0..19").size(), 20u);
}

TEST(ParseSeeds, RejectsMalformedInput) {
  EXPECT_THROW(cli::parse_seeds(""), std::invalid_argument);
  EXPECT_THROW(cli::parse_seeds("5..3"), std::invalid_argument);
  EXPECT_THROW(cli::parse_seeds("x"), std::invalid_argument);
  EXPECT_THROW(cli::parse_seeds("-1"), std::invalid_argument);
}

TEST(ParseValues, CommaList) {
  EXPECT_EQ(cli::parse_values("5,10,15"), (std::vector<double>{5, 10, 15}));
  EXPECT_EQ(cli::parse_values("2.5"), (std::vector<double>{2.5}));
  EXPECT_THROW(cli::parse_values("5,abc"), std::invalid_argument);
}

TEST(OutputDir, EnvironmentOverridesDefault) {
  unsetenv("RIS_ISAC_OUTPUT_DIR");
  EXPECT_EQ(cli::default_output_dir(), fs::path("out"));
  setenv("RIS_ISAC_OUTPUT_DIR", "/tmp/elsewhere", 1);
  EXPECT_EQ(cli::default_output_dir(), fs::path("/tmp/elsewhere"));
  unsetenv("RIS_ISAC_OUTPUT_DIR");
}

TEST(Usage, HelpExitsZero) { EXPECT_EQ(invoke({"--help"}).code, cli::kOk); }

TEST(Usage, ErrorsExitTwo) {
  EXPECT_EQ(invoke({}).code, cli::kUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"run", "--bogus"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"run", "--scheme", "best"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"run", "--preset", "huge"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"sweep"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"run", "--scenario", "/nonexistent/scenario.json"}).code, cli::kUsage);
  EXPECT_EQ(invoke({"run", "--seeds", "4..1"}).code, cli::kUsage);
}

TEST_F(CliTest, MalformedScenarioExitsTwo) {
  fs::create_directories(dir_);
  const auto path = dir_ / "bad.json";
  write_text_file(path, "{\"num_users\": 3, \"unknown_key\": 1}");
  const Result r = invoke({"run", "--scenario", path.string(), "--output-dir", (dir_ / "o").string()});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("error"), std::string::npos);
}

TEST_F(CliTest, ScenarioFileMatchesPreset) {
  fs::create_directories(dir_);
  const auto path = dir_ / "desk.json";
  write_text_file(path, serialize_scenario(desk_preset()));
  const auto a = invoke({"run", "--scenario", path.string(), "--scheme", "no-ris", "--output-dir",
                         (dir_ / "a").string()});
  const auto b = invoke({"run", "--scheme", "no-ris", "--output-dir", (dir_ / "b").string()});
  ASSERT_EQ(a.code, cli::kOk) << a.err;
  ASSERT_EQ(b.code, cli::kOk) << b.err;
  EXPECT_EQ(slurp(dir_ / "a" / "run.csv"), slurp(dir_ / "b" / "run.csv"));
}

TEST_F(CliTest, InfeasibleRunExitsOne) {
  const Result r = invoke({"run", "--r-req", "40", "--output-dir", dir_.string()});
  EXPECT_EQ(r.code, cli::kInfeasible);
  const auto csv = slurp(dir_ / "run.csv");
  EXPECT_NE(csv.find(",infeasible,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "run_proposed_seed0.json"));
}

TEST_F(CliTest, RunWritesReportsAndDumps) {
  const Result r = invoke({"run", "--scheme", "no-ris,random-phase", "--seeds", "0,1", "--dump-channels",
                           "--dump-sdpa", "--output-dir", dir_.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(first_line(dir_ / "run.csv"), kSweepHeader);
  EXPECT_EQ(line_count(dir_ / "run.csv"), 5u);
  for (const char* f : {"run_no-ris_seed0.json", "run_random-phase_seed1.json", "channels_seed1.json",
                        "beamforming_seed0.dat-s"})
    EXPECT_TRUE(fs::exists(dir_ / f)) << f;
  const ChannelSet dumped = read_channel_dump(dir_ / "channels_seed1.json");
  const Trial t = make_trial(desk_preset(), 1);
  EXPECT_EQ(dumped.h_bs_user[0][0], t.channels.h_bs_user[0][0]);
  EXPECT_EQ(dumped.h_ris_target.back(), t.channels.h_ris_target.back());
}

TEST_F(CliTest, RerunIsByteIdentical) {
  const auto args = [&](const std::string& sub) {
    return std::vector<std::string>{"sweep", "--axis", "gamma_req", "--values", "5,10", "--scheme", "no-ris",
                                    "--seeds", "0..1", "--output-dir", (dir_ / sub).string()};
  };
  ASSERT_EQ(invoke(args("a")).code, cli::kOk);
  ASSERT_EQ(invoke(args("b")).code, cli::kOk);
  const auto a = slurp(dir_ / "a" / "sweep_gamma_req.csv");
  EXPECT_EQ(a, slurp(dir_ / "b" / "sweep_gamma_req.csv"));
  EXPECT_EQ(first_line(dir_ / "a" / "sweep_gamma_req.csv"), kSweepHeader);
  EXPECT_EQ(line_count(dir_ / "a" / "sweep_gamma_req.csv"), 5u);
}

TEST_F(CliTest, EnvironmentSelectsOutputDirectory) {
  setenv("RIS_ISAC_OUTPUT_DIR", dir_.c_str(), 1);
  const Result r = invoke({"run", "--scheme", "no-ris"});
  unsetenv("RIS_ISAC_OUTPUT_DIR");
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_TRUE(fs::exists(dir_ / "run.csv"));
}

TEST_F(CliTest, HeatmapAndConvergenceFiles) {
  Result r = invoke({"heatmap", "--scheme", "random-phase", "--step", "20", "--output-dir", dir_.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(first_line(dir_ / "heatmap.csv"), kHeatmapHeader);
  // The lattice is anchored at the region corner (45, 85): x in {5, ..., 165},
  // y in {5, ..., 185}. Of the 2x2 grid only (45, 85) falls on it; three are appended.
  EXPECT_EQ(line_count(dir_ / "heatmap.csv"), 1u + 9u * 10u + 3u);
  r = invoke({"convergence", "--inits", "2", "--max-iter", "2", "--output-dir", dir_.string()});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(first_line(dir_ / "convergence.csv"), kConvergenceHeader);
  EXPECT_EQ(line_count(dir_ / "convergence.csv"), 5u);
}

TEST(Validate, BuiltInChecksPass) {
  const Result r = invoke({"validate"});
  EXPECT_EQ(r.code, cli::kOk) << r.out;
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}
