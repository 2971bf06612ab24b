#include "risisac/driver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace risisac {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Proposed:
      return "proposed";
    case Scheme::NoRis:
      return "no-ris";
    case Scheme::RandomPhase:
      return "random-phase";
  }
  return "unknown";
}

Scheme scheme_from_string(std::string_view name) {
  if (name == "proposed") return Scheme::Proposed;
  if (name == "no-ris") return Scheme::NoRis;
  if (name == "random-phase") return Scheme::RandomPhase;
  throw std::invalid_argument("unknown scheme: " + std::string(name));
}

std::vector<Scheme> all_schemes() { return {Scheme::Proposed, Scheme::NoRis, Scheme::RandomPhase}; }

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Converged:
      return "converged";
    case StopReason::MaxIterations:
      return "max-iterations";
    case StopReason::InfeasibleFirstStep:
      return "infeasible-first-step";
    case StopReason::NumericalFailure:
      return "numerical-failure";
    case StopReason::SingleStep:
      return "single-step";
  }
  return "unknown";
}

std::string RunReport::status() const {
  switch (stop) {
    case StopReason::Converged:
      return "converged";
    case StopReason::MaxIterations:
      return "max-iterations";
    case StopReason::SingleStep:
      return "ok";
    case StopReason::InfeasibleFirstStep:
      return "infeasible";
    case StopReason::NumericalFailure:
      return "numerical-failure";
  }
  return "unknown";
}

namespace {

StopReason failure_reason(StepStatus s) {
  return s == StepStatus::NumericalFailure ? StopReason::NumericalFailure
                                           : StopReason::InfeasibleFirstStep;
}

void finish(RunReport& r, const ScenarioConfig& cfg, const ChannelSet& channels) {
  r.iterations = static_cast<int>(r.power_history.size());
  r.config_digest = config_digest(cfg);
  if (r.feasible()) r.metrics = evaluate_metrics(r.w, channels, r.v, cfg);
}

}  // namespace

RunReport alternating_optimize(const ScenarioConfig& cfg, const ChannelSet& channels,
                               const PhaseShifts& initial_phases, const AoOptions& opts,
                               std::uint64_t seed) {
  if (!(opts.epsilon > 0.0)) throw std::invalid_argument("alternating_optimize: epsilon must be positive");
  if (initial_phases.size() != channels.m_elements)
    throw std::invalid_argument("alternating_optimize: phase vector length must equal M");

  RunReport rep;
  rep.scheme = Scheme::Proposed;
  rep.seed = seed;
  rep.v = initial_phases;
  Rng bf_rng = make_rng(seed, Stream::Beamforming);
  Rng ph_rng = make_rng(seed, Stream::Phases);

  bool have_w = false;
  double prev_power = 0.0;
  rep.stop = StopReason::MaxIterations;

  for (int n = 1; n <= opts.max_iter; ++n) {
    IterationRecord rec;
    rec.iteration = n;
    const BeamformingData data = beamforming_data(channels, rep.v, cfg);
    BeamformResult bf = solve_beamformers(data, opts.beamform, bf_rng);
    rec.beamform_status = bf.status;
    rec.beamform = bf.diag;

    if (bf.status != StepStatus::Ok) {
      if (!have_w) {
        rep.stop = failure_reason(bf.status);
        rep.records.push_back(std::move(rec));
        finish(rep, cfg, channels);
        return rep;
      }
      // The accepted phases keep the incumbent feasible, so carry it over.
      rec.kept_previous_w = true;
    } else if (have_w && bf.w.total_power() > prev_power) {
      rec.kept_previous_w = true;
    } else {
      rep.w = std::move(bf.w);
      have_w = true;
    }

    const double power = rep.w.total_power();
    rec.power_w = power;
    rep.power_history.push_back(power);

    bool converged = power == 0.0;
    if (n > 1 && prev_power > 0.0) converged = converged || (prev_power - power) / prev_power <= opts.epsilon;
    if (converged) {
      rep.stop = StopReason::Converged;
      rep.records.push_back(std::move(rec));
      break;
    }

    const PhaseProblemData pd = phase_problem_data(channels, rep.w, cfg);
    rec.incumbent_margin = min_margin(pd, rep.v);
    PhaseResult ph = solve_phases(pd, opts.phases, ph_rng);
    rec.phase_status = ph.status;
    rec.phases = ph.diag;
    if (ph.status == StepStatus::Ok && ph.diag.chosen_margin >= rec.incumbent_margin) {
      rep.v = std::move(ph.v);
      rec.phases_accepted = true;
    }
    rep.records.push_back(std::move(rec));
    prev_power = power;
  }

  finish(rep, cfg, channels);
  return rep;
}

RunReport run_single_step(const ScenarioConfig& cfg, const ChannelSet& channels, const PhaseShifts& v,
                          Scheme scheme, const AoOptions& opts, std::uint64_t seed) {
  RunReport rep;
  rep.scheme = scheme;
  rep.seed = seed;
  rep.v = v;
  Rng bf_rng = make_rng(seed, Stream::Beamforming);
  const BeamformingData data = beamforming_data(channels, v, cfg);
  BeamformResult bf = solve_beamformers(data, opts.beamform, bf_rng);
  IterationRecord rec;
  rec.iteration = 1;
  rec.beamform_status = bf.status;
  rec.beamform = bf.diag;
  if (bf.status == StepStatus::Ok) {
    rep.w = std::move(bf.w);
    rec.power_w = rep.w.total_power();
    rep.power_history.push_back(rec.power_w);
    rep.stop = StopReason::SingleStep;
  } else {
    rep.stop = failure_reason(bf.status);
  }
  rep.records.push_back(std::move(rec));
  finish(rep, cfg, channels);
  return rep;
}

Trial make_trial(const ScenarioConfig& cfg, std::uint64_t seed) {
  Trial t;
  t.seed = seed;
  t.child_seed = derive_seed(cfg.rng_seed, seed);
  t.grid = discretize_region(cfg.region);
  Rng rng = make_rng(t.child_seed, Stream::Channels);
  t.channels = realize_channels(cfg, t.grid, rng);
  return t;
}

PhaseShifts initial_phases(const ScenarioConfig& cfg, const Trial& trial, int init) {
  Rng rng = make_rng(derive_seed(trial.child_seed, static_cast<std::uint64_t>(init)), Stream::InitialPhases);
  return PhaseShifts::random(cfg.num_ris_elements(), rng);
}

RunReport run_baseline(const ScenarioConfig& cfg, const Trial& trial, Scheme kind, const AoOptions& opts) {
  switch (kind) {
    case Scheme::NoRis: {
      RunReport r = run_single_step(cfg, without_ris(trial.channels), PhaseShifts::zero_phase(cfg.num_ris_elements()),
                                    Scheme::NoRis, opts, trial.child_seed);
      r.seed = trial.seed;
      return r;
    }
    case Scheme::RandomPhase: {
      RunReport r = run_single_step(cfg, trial.channels, initial_phases(cfg, trial, 0), Scheme::RandomPhase, opts,
                                    trial.child_seed);
      r.seed = trial.seed;
      return r;
    }
    case Scheme::Proposed:
      break;
  }
  throw std::invalid_argument("run_baseline: not a baseline scheme");
}

RunReport run_scheme(const ScenarioConfig& cfg, const Trial& trial, Scheme scheme, const AoOptions& opts) {
  if (scheme != Scheme::Proposed) return run_baseline(cfg, trial, scheme, opts);
  RunReport r = alternating_optimize(cfg, trial.channels, initial_phases(cfg, trial, 0), opts, trial.child_seed);
  r.seed = trial.seed;
  return r;
}

std::string to_string(SweepAxis a) { return a == SweepAxis::RReq ? "r_req" : "gamma_req"; }

SweepAxis sweep_axis_from_string(std::string_view name) {
  if (name == "r_req") return SweepAxis::RReq;
  if (name == "gamma_req") return SweepAxis::GammaReq;
  throw std::invalid_argument("unknown sweep axis: " + std::string(name));
}

ScenarioConfig with_axis_value(const ScenarioConfig& cfg, SweepAxis axis, double value) {
  ScenarioConfig out = cfg;
  if (axis == SweepAxis::RReq)
    out.r_req_bps_hz = value;
  else
    out.gamma_req_db = value;
  return out;
}

SweepRow summarize(const RunReport& r, double axis_value) {
  SweepRow row;
  row.scheme = to_string(r.scheme);
  row.axis_value = axis_value;
  row.seed = r.seed;
  row.iterations = r.iterations;
  row.status = r.status();
  if (r.feasible()) {
    row.power_w = r.final_power();
    row.min_se_margin = r.metrics.min_se_margin;
    row.min_snr_margin_db = r.metrics.min_snr_margin_db;
  } else {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.power_w = nan;
    row.min_se_margin = nan;
    row.min_snr_margin_db = nan;
  }
  return row;
}

std::vector<SweepRow> sweep(const ScenarioConfig& cfg, SweepAxis axis, const std::vector<double>& values,
                            const std::vector<std::uint64_t>& seeds, const std::vector<Scheme>& schemes,
                            const AoOptions& opts, int threads) {
  if (!std::is_sorted(values.begin(), values.end()))
    throw std::invalid_argument("sweep: axis values must be sorted ascending");

  const std::size_t cells = values.size() * seeds.size();
  const std::size_t per_cell = schemes.size();
  std::vector<SweepRow> rows(cells * per_cell);

  // Channels depend only on the seed; realize each once.
  std::vector<Trial> trials(seeds.size());
  for (std::size_t s = 0; s < seeds.size(); ++s) trials[s] = make_trial(cfg, seeds[s]);

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t c = next++; c < cells; c = next++) {
      const std::size_t vi = c / seeds.size();
      const std::size_t si = c % seeds.size();
      const ScenarioConfig cell_cfg = with_axis_value(cfg, axis, values[vi]);
      for (std::size_t k = 0; k < per_cell; ++k)
        rows[c * per_cell + k] = summarize(run_scheme(cell_cfg, trials[si], schemes[k], opts), values[vi]);
    }
  };

  unsigned n = threads > 0 ? static_cast<unsigned>(threads) : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(cells, 1)));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

double los_sensing_snr(const ScenarioConfig& cfg, const ChannelSet& channels, const BeamformerSet& w,
                       const PhaseShifts& v, const Vec3& point) {
  const TargetChannels tc = los_target_channels(cfg, point);
  const CVec a = echo_transmit_vector(tc.h_bs_target, tc.h_ris_target, channels.g_bs_ris, v);
  const CMat h = tc.h_target_rx * a.adjoint();
  double echo = 0.0;
  for (const auto& wk : w.w) echo += (h * wk).squaredNorm();
  return echo / noise_power_watts(cfg).sensing_w;
}

namespace {

double realized_snr(const ScenarioConfig& cfg, const ChannelSet& channels, const BeamformerSet& w,
                    const PhaseShifts& v, int l) {
  const CMat h = echo_matrix(channels, v, l);
  double echo = 0.0;
  for (const auto& wk : w.w) echo += (h * wk).squaredNorm();
  return echo / noise_power_watts(cfg).sensing_w;
}

double to_db(double snr) {
  return snr > 0.0 ? linear_to_db(snr) : -std::numeric_limits<double>::infinity();
}

// First lattice coordinate >= lo on the lattice anchored at `anchor`.
double lattice_start(double lo, double anchor, double step) {
  return anchor + std::ceil((lo - anchor) / step - 1e-9) * step;
}

}  // namespace

std::vector<HeatmapCell> snr_heatmap(const ScenarioConfig& cfg, const ChannelSet& channels,
                                     const BeamformerSet& w, const PhaseShifts& v,
                                     const HeatmapOptions& opts) {
  if (!(opts.step_m > 0.0)) throw std::invalid_argument("snr_heatmap: step must be positive");
  const auto win = opts.window.value_or(std::array<double, 4>{cfg.user_area.x_min, cfg.user_area.x_max,
                                                              cfg.user_area.y_min, cfg.user_area.y_max});
  const double ax = cfg.region.center_xy.x() - 0.5 * cfg.region.width_x;
  const double ay = cfg.region.center_xy.y() - 0.5 * cfg.region.width_y;
  const double x0 = lattice_start(win[0], ax, opts.step_m);
  const double y0 = lattice_start(win[2], ay, opts.step_m);

  std::vector<bool> covered(channels.points.size(), false);
  auto match = [&](const Vec3& p) -> int {
    if (!opts.use_realized_at_grid) return -1;
    for (std::size_t l = 0; l < channels.points.size(); ++l)
      if ((channels.points[l] - p).norm() <= 1e-6) return static_cast<int>(l);
    return -1;
  };

  std::vector<HeatmapCell> out;
  for (int iy = 0;; ++iy) {
    const double y = y0 + iy * opts.step_m;
    if (y > win[3] + 1e-9) break;
    for (int ix = 0;; ++ix) {
      const double x = x0 + ix * opts.step_m;
      if (x > win[1] + 1e-9) break;
      const Vec3 p(x, y, opts.altitude);
      HeatmapCell cell{x, y, 0.0, false};
      const int l = match(p);
      if (l >= 0) {
        covered[l] = true;
        cell.grid_point = true;
        cell.snr_db = to_db(realized_snr(cfg, channels, w, v, l));
      } else {
        cell.snr_db = to_db(los_sensing_snr(cfg, channels, w, v, p));
      }
      out.push_back(cell);
    }
  }
  if (opts.use_realized_at_grid) {
    for (std::size_t l = 0; l < channels.points.size(); ++l) {
      const Vec3& p = channels.points[l];
      if (covered[l] || std::abs(p.z() - opts.altitude) > 1e-6) continue;
      out.push_back({p.x(), p.y(), to_db(realized_snr(cfg, channels, w, v, static_cast<int>(l))), true});
    }
  }
  return out;
}

std::vector<RunReport> convergence_study(const ScenarioConfig& cfg, const Trial& trial, int inits,
                                         const AoOptions& opts) {
  std::vector<RunReport> out;
  for (int i = 0; i < inits; ++i) {
    // init 0 reproduces run_scheme(Proposed) exactly.
    const std::uint64_t seed =
        i == 0 ? trial.child_seed : derive_seed(trial.child_seed, static_cast<std::uint64_t>(i));
    RunReport r = alternating_optimize(cfg, trial.channels, initial_phases(cfg, trial, i), opts, seed);
    r.seed = trial.seed;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace risisac
