#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "risisac/driver.hpp"

using namespace risisac;

namespace {

bool satisfies(const ScenarioConfig& cfg, const Trial& t, const RunReport& r) {
  const ChannelSet ch = r.scheme == Scheme::NoRis ? without_ris(t.channels) : t.channels;
  const BeamformingData d = beamforming_data(ch, r.v, cfg);
  return meets_thresholds(evaluate_metrics(d, r.w), d);
}

}  // namespace

TEST(Schemes, NamesRoundTrip) {
  for (Scheme s : all_schemes()) EXPECT_EQ(scheme_from_string(to_string(s)), s);
  EXPECT_EQ(to_string(Scheme::NoRis), "no-ris");
  EXPECT_THROW(scheme_from_string("best"), std::invalid_argument);
  EXPECT_EQ(sweep_axis_from_string("r_req"), SweepAxis::RReq);
  EXPECT_EQ(sweep_axis_from_string("gamma_req"), SweepAxis::GammaReq);
  EXPECT_THROW(sweep_axis_from_string("power"), std::invalid_argument);
}

TEST(Schemes, AxisValueOverridesThreshold) {
  const ScenarioConfig cfg = desk_preset();
  EXPECT_EQ(with_axis_value(cfg, SweepAxis::RReq, 3.5).r_req_bps_hz, 3.5);
  EXPECT_EQ(with_axis_value(cfg, SweepAxis::GammaReq, 12.0).gamma_req_db, 12.0);
  EXPECT_EQ(with_axis_value(cfg, SweepAxis::GammaReq, 12.0).r_req_bps_hz, cfg.r_req_bps_hz);
}

TEST(Alternating, NoConstraintsConvergesAtZeroPower) {
  ScenarioConfig cfg = desk_preset();
  cfg.user_positions.clear();
  Rng rng(0);
  const ChannelSet ch = realize_channels(cfg, {}, rng);
  const RunReport r = alternating_optimize(cfg, ch, PhaseShifts::zero_phase(cfg.num_ris_elements()), {});
  EXPECT_EQ(r.final_power(), 0.0);
  EXPECT_EQ(r.stop, StopReason::Converged);
  EXPECT_EQ(r.iterations, 1);
}

TEST(Alternating, PowerIsMonotoneAndFinalSetFeasible) {
  const ScenarioConfig cfg = desk_preset();
  for (std::uint64_t s = 0; s < 2; ++s) {
    const Trial t = make_trial(cfg, s);
    const RunReport r = run_scheme(cfg, t, Scheme::Proposed, {});
    ASSERT_TRUE(r.feasible()) << to_string(r.stop);
    ASSERT_EQ(static_cast<int>(r.power_history.size()), r.iterations);
    for (std::size_t i = 1; i < r.power_history.size(); ++i)
      EXPECT_LE(r.power_history[i], r.power_history[i - 1]);
    EXPECT_TRUE(satisfies(cfg, t, r));
    EXPECT_NEAR(r.metrics.total_power_w / r.final_power(), 1.0, 1e-12);
    EXPECT_LE(r.v.modulus_error(), 1e-12);
  }
}

TEST(Alternating, StopsAtIterationCap) {
  const ScenarioConfig cfg = desk_preset();
  const Trial t = make_trial(cfg, 0);
  AoOptions opts;
  opts.max_iter = 1;
  const RunReport r = run_scheme(cfg, t, Scheme::Proposed, opts);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.stop, StopReason::MaxIterations);
}

TEST(Alternating, UnreachableRateFailsFirstStep) {
  ScenarioConfig cfg = desk_preset();
  cfg.r_req_bps_hz = 40.0;
  const Trial t = make_trial(cfg, 0);
  const RunReport r = run_scheme(cfg, t, Scheme::Proposed, {});
  EXPECT_FALSE(r.feasible());
  EXPECT_EQ(r.stop, StopReason::InfeasibleFirstStep);
  EXPECT_EQ(r.status(), "infeasible");
  const SweepRow row = summarize(r, 40.0);
  EXPECT_TRUE(std::isnan(row.power_w));
  EXPECT_TRUE(std::isnan(row.min_se_margin));
  EXPECT_TRUE(std::isnan(row.min_snr_margin_db));
}

TEST(Baselines, NoRisEqualsDirectBeamformingSolve) {
  const ScenarioConfig cfg = desk_preset();
  const Trial t = make_trial(cfg, 1);
  const RunReport r = run_baseline(cfg, t, Scheme::NoRis, {});
  ASSERT_EQ(r.stop, StopReason::SingleStep);
  EXPECT_EQ(r.status(), "ok");
  const BeamformingData d =
      beamforming_data(without_ris(t.channels), PhaseShifts::zero_phase(cfg.num_ris_elements()), cfg);
  Rng rng(0);
  const BeamformResult b = solve_beamformers(d, {}, rng);
  ASSERT_EQ(b.status, StepStatus::Ok);
  EXPECT_NEAR(r.final_power() / b.w.total_power(), 1.0, 1e-9);
  EXPECT_TRUE(satisfies(cfg, t, r));
}

TEST(Baselines, RandomPhaseIsDeterministicAndSharesFirstStep) {
  const ScenarioConfig cfg = desk_preset();
  const Trial t = make_trial(cfg, 2);
  const RunReport a = run_baseline(cfg, t, Scheme::RandomPhase, {});
  const RunReport b = run_baseline(cfg, make_trial(cfg, 2), Scheme::RandomPhase, {});
  ASSERT_TRUE(a.feasible());
  EXPECT_EQ(a.final_power(), b.final_power());
  EXPECT_EQ(a.v.v, initial_phases(cfg, t).v);
  const RunReport p = run_scheme(cfg, t, Scheme::Proposed, {});
  ASSERT_FALSE(p.power_history.empty());
  EXPECT_NEAR(p.power_history.front() / a.final_power(), 1.0, 1e-9);
  EXPECT_LE(p.final_power(), a.final_power());
}

TEST(Trials, SeedsChangeFadingButNotUsers) {
  const ScenarioConfig cfg = desk_preset();
  const Trial a = make_trial(cfg, 0), b = make_trial(cfg, 1);
  EXPECT_NE(a.child_seed, b.child_seed);
  EXPECT_NE(a.channels.h_bs_user[0][0], b.channels.h_bs_user[0][0]);
  EXPECT_EQ(a.grid, b.grid);
  EXPECT_NE(initial_phases(cfg, a).v, initial_phases(cfg, b).v);
  EXPECT_NE(initial_phases(cfg, a, 0).v, initial_phases(cfg, a, 1).v);
}

TEST(Sweep, RowShapeAndOrder) {
  const ScenarioConfig cfg = desk_preset();
  const auto rows = sweep(cfg, SweepAxis::GammaReq, {10.0}, {0}, all_schemes(), {}, 1);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].scheme, "proposed");
  EXPECT_EQ(rows[1].scheme, "no-ris");
  EXPECT_EQ(rows[2].scheme, "random-phase");
  for (const auto& r : rows) {
    EXPECT_EQ(r.axis_value, 10.0);
    EXPECT_EQ(r.seed, 0u);
  }
}

TEST(Sweep, ThreadCountDoesNotChangeResults) {
  const ScenarioConfig cfg = desk_preset();
  const std::vector<Scheme> schemes{Scheme::NoRis, Scheme::RandomPhase};
  const auto serial = sweep(cfg, SweepAxis::RReq, {4.0, 6.0}, {0, 1}, schemes, {}, 1);
  const auto parallel = sweep(cfg, SweepAxis::RReq, {4.0, 6.0}, {0, 1}, schemes, {}, 4);
  ASSERT_EQ(serial.size(), 8u);
  ASSERT_EQ(parallel.size(), 8u);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].scheme, parallel[i].scheme);
    EXPECT_EQ(serial[i].axis_value, parallel[i].axis_value);
    EXPECT_EQ(serial[i].seed, parallel[i].seed);
    EXPECT_EQ(serial[i].power_w, parallel[i].power_w);
  }
  EXPECT_EQ(serial[0].axis_value, 4.0);
  EXPECT_EQ(serial[4].axis_value, 6.0);
  EXPECT_EQ(serial[2].seed, 1u);
}

TEST(Sweep, SingleStepPowerGrowsWithSensingThreshold) {
  // With fixed phases the problem is a convex relaxation, so a tighter
  // threshold can never lower the optimum.
  const ScenarioConfig cfg = desk_preset();
  const auto rows = sweep(cfg, SweepAxis::GammaReq, {5.0, 10.0, 15.0}, {0}, {Scheme::NoRis}, {}, 1);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_LT(rows[0].power_w, rows[1].power_w);
  EXPECT_LT(rows[1].power_w, rows[2].power_w);
}

TEST(Heatmap, ZeroBeamformersGiveMinusInfinity) {
  const ScenarioConfig cfg = desk_preset();
  const Trial t = make_trial(cfg, 0);
  const auto cells = snr_heatmap(cfg, t.channels, BeamformerSet::zeros(cfg.num_users() + 1, t.channels.stacked_dim()),
                                 initial_phases(cfg, t), {});
  ASSERT_FALSE(cells.empty());
  for (const auto& c : cells) EXPECT_EQ(c.snr_db, -std::numeric_limits<double>::infinity());
}

TEST(Heatmap, LatticeCoversUserAreaAndGrid) {
  const ScenarioConfig cfg = desk_preset();
  const Trial t = make_trial(cfg, 0);
  const RunReport r = run_scheme(cfg, t, Scheme::Proposed, {});
  ASSERT_TRUE(r.feasible());
  const auto cells = snr_heatmap(cfg, t.channels, r.w, r.v, {});
  int grid = 0;
  for (const auto& c : cells) {
    EXPECT_GE(c.x, cfg.user_area.x_min);
    EXPECT_LE(c.x, cfg.user_area.x_max);
    EXPECT_GE(c.y, cfg.user_area.y_min);
    EXPECT_LE(c.y, cfg.user_area.y_max);
    if (!c.grid_point) continue;
    ++grid;
    EXPECT_GE(c.snr_db, cfg.gamma_req_db - 1e-6);
  }
  EXPECT_EQ(grid, cfg.region.num_points());
  // x in {0, 5, ..., 170}, y in {0, 5, ..., 200}.
  EXPECT_EQ(cells.size(), 35u * 41u);
}

TEST(Heatmap, OffGridCellsMatchLosRecomputation) {
  const ScenarioConfig cfg = desk_preset();
  const Trial t = make_trial(cfg, 1);
  Rng rng(5);
  BeamformerSet w;
  for (int k = 0; k <= cfg.num_users(); ++k) w.w.push_back(complex_normal_vector(t.channels.stacked_dim(), rng));
  const PhaseShifts v = initial_phases(cfg, t);
  HeatmapOptions opts;
  opts.step_m = 20.0;
  for (const auto& c : snr_heatmap(cfg, t.channels, w, v, opts)) {
    if (c.grid_point) continue;
    const double want = 10.0 * std::log10(los_sensing_snr(cfg, t.channels, w, v, Vec3(c.x, c.y, opts.altitude)));
    EXPECT_NEAR(c.snr_db, want, 1e-10 * std::abs(want));
  }
}

TEST(Heatmap, GridCellsUseRealizedChannels) {
  const ScenarioConfig cfg = desk_preset();
  const Trial t = make_trial(cfg, 1);
  const RunReport r = run_baseline(cfg, t, Scheme::RandomPhase, {});
  ASSERT_TRUE(r.feasible());
  const Metrics m = evaluate_metrics(r.w, t.channels, r.v, cfg);
  const auto cells = snr_heatmap(cfg, t.channels, r.w, r.v, {});
  for (const auto& c : cells) {
    if (!c.grid_point) continue;
    int l = -1;
    for (int i = 0; i < t.channels.num_points; ++i)
      if (std::abs(t.channels.points[i].x() - c.x) < 1e-6 && std::abs(t.channels.points[i].y() - c.y) < 1e-6) l = i;
    ASSERT_GE(l, 0);
    EXPECT_NEAR(c.snr_db, 10.0 * std::log10(m.sensing_snr[l]), 1e-9);
  }
}

TEST(Heatmap, RejectsNonPositiveStep) {
  const ScenarioConfig cfg = desk_preset();
  const Trial t = make_trial(cfg, 0);
  HeatmapOptions opts;
  opts.step_m = 0.0;
  EXPECT_THROW(snr_heatmap(cfg, t.channels, BeamformerSet::zeros(cfg.num_users() + 1, t.channels.stacked_dim()),
                           initial_phases(cfg, t), opts),
               std::invalid_argument);
}

TEST(Convergence, InitZeroMatchesProposedRun) {
  const ScenarioConfig cfg = desk_preset();
  const Trial t = make_trial(cfg, 3);
  const auto runs = convergence_study(cfg, t, 2, {});
  ASSERT_EQ(runs.size(), 2u);
  const RunReport p = run_scheme(cfg, t, Scheme::Proposed, {});
  EXPECT_EQ(runs[0].power_history, p.power_history);
  for (const auto& r : runs) {
    EXPECT_TRUE(r.feasible());
    EXPECT_EQ(r.seed, 3u);
  }
  EXPECT_NE(runs[0].power_history.front(), runs[1].power_history.front());
}
