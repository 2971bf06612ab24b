#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace risisac::cli {

enum ExitCode : int { kOk = 0, kInfeasible = 1, kUsage = 2, kNumericalFailure = 3 };

struct CommandSpec {
  std::string subcommand;  ///< run, sweep, heatmap, convergence, validate
  std::optional<std::filesystem::path> scenario;
  std::string preset = "desk";
  std::filesystem::path output_dir;
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::string> schemes;
  std::string axis = "gamma_req";
  std::vector<double> values;
  std::optional<double> r_req;
  std::optional<double> gamma_req_db;
  double epsilon = 1e-3;
  int max_iter = 20;
  double altitude = 60.0;
  double step_m = 5.0;
  int inits = 2;
  int threads = 0;
  bool dump_channels = false;
  bool dump_sdpa = false;
};

/// "0..19", "3", "1,4,9" or any comma list of those.
std::vector<std::uint64_t> parse_seeds(const std::string& text);
std::vector<double> parse_values(const std::string& text);

/// Default output directory: $RIS_ISAC_OUTPUT_DIR if set, else ./out.
std::filesystem::path default_output_dir();

/// Runs one command. Diagnostics go to `err`, progress lines to `out`.
int execute(const CommandSpec& spec, std::ostream& out, std::ostream& err);

/// Parses argv into a CommandSpec and executes it. Parse failures map to
/// kUsage; --help exits with kOk.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace risisac::cli
