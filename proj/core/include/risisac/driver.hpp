#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "risisac/beamform.hpp"
#include "risisac/channel.hpp"
#include "risisac/ris.hpp"
#include "risisac/scenario.hpp"

namespace risisac {

enum class Scheme { Proposed, NoRis, RandomPhase };
std::string to_string(Scheme s);
Scheme scheme_from_string(std::string_view name);
std::vector<Scheme> all_schemes();

enum class StopReason { Converged, MaxIterations, InfeasibleFirstStep, NumericalFailure, SingleStep };
std::string to_string(StopReason r);

struct IterationRecord {
  int iteration = 0;
  double power_w = 0.0;
  StepStatus beamform_status = StepStatus::Ok;
  BeamformDiagnostics beamform;
  bool kept_previous_w = false;
  std::optional<StepStatus> phase_status;  ///< unset when the loop stopped before the RIS step
  PhaseDiagnostics phases;
  double incumbent_margin = 0.0;
  bool phases_accepted = false;
};

struct RunReport {
  Scheme scheme = Scheme::Proposed;
  std::vector<double> power_history;
  BeamformerSet w;
  PhaseShifts v;
  Metrics metrics;
  int iterations = 0;
  StopReason stop = StopReason::NumericalFailure;
  std::vector<IterationRecord> records;
  std::uint64_t seed = 0;
  std::string config_digest;

  bool feasible() const {
    return stop == StopReason::Converged || stop == StopReason::MaxIterations ||
           stop == StopReason::SingleStep;
  }
  /// Short status used in CSV rows: converged, max-iterations, ok,
  /// infeasible or numerical-failure.
  std::string status() const;
  double final_power() const { return power_history.empty() ? 0.0 : power_history.back(); }
};

struct AoOptions {
  double epsilon = 1e-3;
  int max_iter = 20;
  BeamformOptions beamform;
  PhaseOptions phases;
};

/// Alternating optimization. Each iteration solves the beamformers for the
/// current phases, then the phases for the current beamformers. A phase
/// update is accepted only if it does not shrink the constraint margin of the
/// incumbent beamformers; a beamformer update is accepted only if it does not
/// raise the power. Both rules together make the power sequence monotone.
RunReport alternating_optimize(const ScenarioConfig& cfg, const ChannelSet& channels,
                               const PhaseShifts& initial_phases, const AoOptions& opts,
                               std::uint64_t seed = 0);

/// One beamforming solve with the RIS removed or with the given phases.
RunReport run_single_step(const ScenarioConfig& cfg, const ChannelSet& channels, const PhaseShifts& v,
                          Scheme scheme, const AoOptions& opts, std::uint64_t seed = 0);

/// Everything random about one experiment: child seed, channels, initial phases.
struct Trial {
  std::uint64_t seed = 0;        ///< seed index as given by the user
  std::uint64_t child_seed = 0;  ///< derived from (config seed, seed index)
  std::vector<Vec3> grid;
  ChannelSet channels;
};

Trial make_trial(const ScenarioConfig& cfg, std::uint64_t seed);

/// Initial phases for initialization number `init` of a trial. init 0 is the
/// draw shared by the proposed scheme and the random-phase baseline.
PhaseShifts initial_phases(const ScenarioConfig& cfg, const Trial& trial, int init = 0);

RunReport run_scheme(const ScenarioConfig& cfg, const Trial& trial, Scheme scheme, const AoOptions& opts);

/// no-ris zeroes every RIS path; random-phase uses initial_phases(..., 0).
RunReport run_baseline(const ScenarioConfig& cfg, const Trial& trial, Scheme kind, const AoOptions& opts);

enum class SweepAxis { RReq, GammaReq };
std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(std::string_view name);

/// Copy of cfg with the axis threshold set to value (bps/Hz or dB).
ScenarioConfig with_axis_value(const ScenarioConfig& cfg, SweepAxis axis, double value);

struct SweepRow {
  std::string scheme;
  double axis_value = 0.0;
  std::uint64_t seed = 0;
  double power_w = 0.0;
  int iterations = 0;
  std::string status;
  double min_se_margin = 0.0;
  double min_snr_margin_db = 0.0;
};

SweepRow summarize(const RunReport& r, double axis_value);

/// Rows ordered by axis value, then seed, then scheme. Channels depend only on
/// the seed, so every axis value sees the same realizations. Cells run on
/// `threads` workers (0 = hardware concurrency).
std::vector<SweepRow> sweep(const ScenarioConfig& cfg, SweepAxis axis, const std::vector<double>& values,
                            const std::vector<std::uint64_t>& seeds, const std::vector<Scheme>& schemes,
                            const AoOptions& opts, int threads = 0);

struct HeatmapOptions {
  double altitude = 60.0;
  double step_m = 5.0;
  /// Evaluation window; defaults to the user area when unset.
  std::optional<std::array<double, 4>> window;  ///< x_min, x_max, y_min, y_max
  /// Lattice points that coincide with a constraint grid point use the
  /// realized (fading) channels instead of the LOS-only ones.
  bool use_realized_at_grid = true;
};

struct HeatmapCell {
  double x = 0.0;
  double y = 0.0;
  double snr_db = 0.0;
  bool grid_point = false;
};

/// Sensing SNR (trace form) on a lattice aligned with the region corner.
/// Constraint points that fall off the lattice are appended at the end.
std::vector<HeatmapCell> snr_heatmap(const ScenarioConfig& cfg, const ChannelSet& channels,
                                     const BeamformerSet& w, const PhaseShifts& v,
                                     const HeatmapOptions& opts);

/// Sensing SNR at one point with LOS-only target channels.
double los_sensing_snr(const ScenarioConfig& cfg, const ChannelSet& channels, const BeamformerSet& w,
                       const PhaseShifts& v, const Vec3& point);

/// Proposed scheme from `inits` distinct initial phase draws on one trial.
std::vector<RunReport> convergence_study(const ScenarioConfig& cfg, const Trial& trial, int inits,
                                         const AoOptions& opts);

}  // namespace risisac
