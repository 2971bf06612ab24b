#include "risisac_cli/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "risisac/driver.hpp"
#include "risisac/report.hpp"
#include "risisac/validation.hpp"

namespace risisac::cli {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep))
    if (!cur.empty()) parts.push_back(cur);
  return parts;
}

std::uint64_t parse_u64(const std::string& s) {
  std::size_t pos = 0;
  if (s.empty() || s[0] == '-') throw std::invalid_argument("bad seed: " + s);
  const unsigned long long v = std::stoull(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("bad seed: " + s);
  return v;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream os;
  os << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

ScenarioConfig load_config(const CommandSpec& spec) {
  ScenarioConfig cfg = spec.scenario ? load_scenario_file(*spec.scenario) : preset(spec.preset);
  if (spec.r_req) cfg.r_req_bps_hz = *spec.r_req;
  if (spec.gamma_req_db) cfg.gamma_req_db = *spec.gamma_req_db;
  validate(cfg);
  return cfg;
}

AoOptions ao_options(const CommandSpec& spec) {
  if (!(spec.epsilon > 0.0)) throw std::invalid_argument("--epsilon must be positive");
  if (spec.max_iter < 1) throw std::invalid_argument("--max-iter must be at least 1");
  AoOptions o;
  o.epsilon = spec.epsilon;
  o.max_iter = spec.max_iter;
  return o;
}

std::vector<Scheme> schemes_of(const CommandSpec& spec, std::vector<Scheme> fallback) {
  if (spec.schemes.empty()) return fallback;
  std::vector<Scheme> out;
  for (const auto& s : spec.schemes) out.push_back(scheme_from_string(s));
  return out;
}

int exit_for(const RunReport& r) {
  if (r.stop == StopReason::NumericalFailure) return kNumericalFailure;
  if (!r.feasible()) return kInfeasible;
  return kOk;
}

void save(const std::filesystem::path& path, const std::string& content, std::ostream& out) {
  write_text_file(path, content);
  out << "wrote " << path.string() << "\n";
}

int cmd_run(const CommandSpec& spec, const ScenarioConfig& cfg, std::ostream& out) {
  const AoOptions opts = ao_options(spec);
  const auto schemes = schemes_of(spec, {Scheme::Proposed});
  std::vector<SweepRow> rows;
  int code = kOk;
  const std::string stamp = timestamp();
  for (std::uint64_t seed : spec.seeds) {
    const Trial trial = make_trial(cfg, seed);
    if (spec.dump_channels) {
      const auto path = spec.output_dir / ("channels_seed" + std::to_string(seed) + ".json");
      write_channel_dump(trial.channels, path);
      out << "wrote " << path.string() << "\n";
    }
    if (spec.dump_sdpa) {
      const BeamformingData d = beamforming_data(trial.channels, initial_phases(cfg, trial, 0), cfg);
      std::ostringstream sdpa;
      write_sdpa(embed_real(assemble_beamforming_sdp(d)), sdpa);
      save(spec.output_dir / ("beamforming_seed" + std::to_string(seed) + ".dat-s"), sdpa.str(), out);
    }
    for (Scheme s : schemes) {
      const RunReport r = run_scheme(cfg, trial, s, opts);
      rows.push_back(summarize(r, cfg.r_req_bps_hz));
      save(spec.output_dir / ("run_" + to_string(s) + "_seed" + std::to_string(seed) + ".json"),
           run_report_json(r, stamp), out);
      out << to_string(s) << " seed " << seed << ": " << r.status() << ", power "
          << format_number(r.final_power()) << " W after " << r.iterations << " iteration(s)\n";
      code = std::max(code, exit_for(r));
    }
  }
  std::ostringstream csv;
  write_sweep_csv(rows, csv);
  save(spec.output_dir / "run.csv", csv.str(), out);
  return code;
}

int cmd_sweep(const CommandSpec& spec, const ScenarioConfig& cfg, std::ostream& out) {
  if (spec.values.empty()) throw std::invalid_argument("--values is required for sweep");
  const SweepAxis axis = sweep_axis_from_string(spec.axis);
  const auto rows = sweep(cfg, axis, spec.values, spec.seeds, schemes_of(spec, all_schemes()), ao_options(spec),
                          spec.threads);
  std::ostringstream csv;
  write_sweep_csv(rows, csv);
  save(spec.output_dir / ("sweep_" + to_string(axis) + ".csv"), csv.str(), out);
  int failed = 0;
  for (const auto& r : rows)
    if (r.status == "infeasible" || r.status == "numerical-failure") ++failed;
  out << rows.size() << " rows, " << failed << " infeasible or failed cell(s)\n";
  return kOk;
}

int cmd_heatmap(const CommandSpec& spec, const ScenarioConfig& cfg, std::ostream& out) {
  const std::uint64_t seed = spec.seeds.front();
  const Trial trial = make_trial(cfg, seed);
  const Scheme scheme = schemes_of(spec, {Scheme::Proposed}).front();
  const RunReport r = run_scheme(cfg, trial, scheme, ao_options(spec));
  save(spec.output_dir / ("heatmap_run_seed" + std::to_string(seed) + ".json"), run_report_json(r, timestamp()),
       out);
  if (!r.feasible()) {
    out << "run is " << r.status() << "; no heatmap written\n";
    return exit_for(r);
  }
  HeatmapOptions h;
  h.altitude = spec.altitude;
  h.step_m = spec.step_m;
  const ChannelSet& ch = scheme == Scheme::NoRis ? without_ris(trial.channels) : trial.channels;
  const auto cells = snr_heatmap(cfg, ch, r.w, r.v, h);
  std::ostringstream csv;
  write_heatmap_csv(cells, csv);
  save(spec.output_dir / "heatmap.csv", csv.str(), out);
  return kOk;
}

int cmd_convergence(const CommandSpec& spec, const ScenarioConfig& cfg, std::ostream& out) {
  if (spec.inits < 1) throw std::invalid_argument("--inits must be at least 1");
  const Trial trial = make_trial(cfg, spec.seeds.front());
  const auto runs = convergence_study(cfg, trial, spec.inits, ao_options(spec));
  std::ostringstream csv;
  write_convergence_csv(runs, csv);
  save(spec.output_dir / "convergence.csv", csv.str(), out);
  int code = kOk;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out << "init " << i << ": " << runs[i].status() << ", " << runs[i].iterations << " iteration(s), power "
        << format_number(runs[i].final_power()) << " W\n";
    code = std::max(code, exit_for(runs[i]));
  }
  return code;
}

int cmd_validate(const CommandSpec& spec, const ScenarioConfig& cfg, std::ostream& out) {
  const auto results = run_validation_suite(cfg, static_cast<int>(spec.seeds.size()));
  bool ok = true;
  for (const auto& r : results) {
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n";
    ok = ok && r.passed;
  }
  return ok ? kOk : kNumericalFailure;
}

}  // namespace

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split(text, ',')) {
    const auto dots = part.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_u64(part));
      continue;
    }
    const std::uint64_t lo = parse_u64(part.substr(0, dots));
    const std::uint64_t hi = parse_u64(part.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("empty seed range: " + part);
    for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw std::invalid_argument("no seeds given");
  return out;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) {
    std::size_t pos = 0;
    const double v = std::stod(part, &pos);
    if (pos != part.size()) throw std::invalid_argument("bad value: " + part);
    out.push_back(v);
  }
  return out;
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("RIS_ISAC_OUTPUT_DIR"); env && *env) return env;
  return "out";
}

int execute(const CommandSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    const ScenarioConfig cfg = load_config(spec);
    if (spec.subcommand != "validate") std::filesystem::create_directories(spec.output_dir);
    if (spec.subcommand == "run") return cmd_run(spec, cfg, out);
    if (spec.subcommand == "sweep") return cmd_sweep(spec, cfg, out);
    if (spec.subcommand == "heatmap") return cmd_heatmap(spec, cfg, out);
    if (spec.subcommand == "convergence") return cmd_convergence(spec, cfg, out);
    if (spec.subcommand == "validate") return cmd_validate(spec, cfg, out);
    err << "error: unknown subcommand '" << spec.subcommand << "'\n";
    return kUsage;
  } catch (const ScenarioError& e) {
    err << "error: scenario field '" << e.field() << "': " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumericalFailure;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Joint beamforming and RIS phase design for multi-BS sensing and communication"};
  app.require_subcommand(1);

  CommandSpec spec;
  spec.output_dir = default_output_dir();
  std::string seeds_text = "0";
  std::string values_text;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--scenario", spec.scenario, "Scenario JSON file")->check(CLI::ExistingFile);
    sub->add_option("--preset", spec.preset, "Built-in scenario when no file is given")
        ->check(CLI::IsMember({"table1", "desk"}));
    sub->add_option("--output-dir", spec.output_dir, "Directory for emitted files");
    sub->add_option("--seeds,--seed", seeds_text, "Seed list, e.g. 0..19 or 1,4,9");
    sub->add_option("--r-req", spec.r_req, "Required spectral efficiency (bps/Hz)");
    sub->add_option("--gamma-req", spec.gamma_req_db, "Required sensing SNR (dB)");
    sub->add_option("--epsilon", spec.epsilon, "Fractional power decrease that stops the loop");
    sub->add_option("--max-iter", spec.max_iter, "Iteration cap");
  };
  auto scheme_opt = [&](CLI::App* sub) {
    sub->add_option("--scheme", spec.schemes, "proposed, no-ris or random-phase (repeatable)")
        ->check(CLI::IsMember({"proposed", "no-ris", "random-phase"}))
        ->delimiter(',');
  };

  CLI::App* run_cmd = app.add_subcommand("run", "Run one or more schemes and write reports");
  common(run_cmd);
  scheme_opt(run_cmd);
  run_cmd->add_flag("--dump-channels", spec.dump_channels, "Write the realized channels as JSON");
  run_cmd->add_flag("--dump-sdpa", spec.dump_sdpa, "Write the first beamforming SDP in SDPA format");

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Threshold sweep over seeds and schemes");
  common(sweep_cmd);
  scheme_opt(sweep_cmd);
  sweep_cmd->add_option("--axis", spec.axis, "r_req or gamma_req")->check(CLI::IsMember({"r_req", "gamma_req"}));
  sweep_cmd->add_option("--values", values_text, "Ascending comma list of axis values")->required();
  sweep_cmd->add_option("--threads", spec.threads, "Worker threads (0 = all cores)");

  CLI::App* heat_cmd = app.add_subcommand("heatmap", "Sensing SNR field of a solved run");
  common(heat_cmd);
  scheme_opt(heat_cmd);
  heat_cmd->add_option("--altitude", spec.altitude, "Evaluation altitude (m)");
  heat_cmd->add_option("--step", spec.step_m, "Lattice step (m)");

  CLI::App* conv_cmd = app.add_subcommand("convergence", "Power per iteration from several initial phases");
  common(conv_cmd);
  conv_cmd->add_option("--inits", spec.inits, "Number of initial phase draws");

  CLI::App* val_cmd = app.add_subcommand("validate", "Run the built-in property checks");
  common(val_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  spec.subcommand = app.get_subcommands().front()->get_name();
  try {
    spec.seeds = parse_seeds(seeds_text);
    if (!values_text.empty()) spec.values = parse_values(values_text);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return execute(spec, out, err);
}

}  // namespace risisac::cli
