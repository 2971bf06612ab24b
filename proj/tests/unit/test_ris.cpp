#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "risisac/driver.hpp"
#include "risisac/ris.hpp"

using namespace risisac;

namespace {

double quad(const CMat& a, const CVec& x) { return x.dot(a * x).real(); }

struct DeskCase {
  ScenarioConfig cfg;
  Trial trial;
  BeamformerSet w;
};

DeskCase desk_case(std::uint64_t seed) {
  DeskCase c{desk_preset(), {}, {}};
  c.trial = make_trial(c.cfg, seed);
  const PhaseShifts v0 = initial_phases(c.cfg, c.trial);
  const BeamformingData d = beamforming_data(c.trial.channels, v0, c.cfg);
  Rng rng(seed);
  c.w = solve_beamformers(d, {}, rng).w;
  return c;
}

// One RIS element, one sensing row with value |conj(b0) v + conj(b1)|^2 / floor.
PhaseProblemData scalar_sensing(cd b0, cd b1, double floor) {
  PhaseProblemData d;
  d.m = 1;
  CVec b(2);
  b << b0, b1;
  d.u = {b * b.adjoint()};
  d.sensing_noise_w = floor;
  d.gamma_req_linear = 1.0;
  return d;
}

double brute_force_best_margin(const PhaseProblemData& d, int samples) {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    RVec phi(1);
    phi(0) = 2.0 * std::numbers::pi * i / samples;
    best = std::max(best, min_margin(d, PhaseShifts::from_angles(phi)));
  }
  return best;
}

}  // namespace

TEST(PhaseData, LiftedQuadraticsMatchDirectEvaluation) {
  const DeskCase c = desk_case(0);
  Rng rng(11);
  const PhaseShifts v = PhaseShifts::random(c.cfg.num_ris_elements(), rng);
  const PhaseProblemData d = phase_problem_data(c.trial.channels, c.w, c.cfg);
  const CVec x = lift(v);
  for (int k = 0; k < d.num_users(); ++k) {
    const CVec g = effective_user_channel(c.trial.channels, v, k);
    for (int i = 0; i < c.w.num_streams(); ++i) {
      const double want = std::norm(g.dot(c.w.w[i]));
      EXPECT_NEAR(quad(d.f[k][i], x), want, 1e-9 * (want + d.f[k][i].norm() * x.squaredNorm()));
    }
  }
  for (int l = 0; l < d.num_points(); ++l) {
    const CMat h = echo_matrix(c.trial.channels, v, l);
    double want = 0.0;
    for (const auto& wi : c.w.w) want += (h * wi).squaredNorm();
    EXPECT_NEAR(quad(d.u[l], x) / want, 1.0, 1e-9);
  }
}

TEST(PhaseData, RowValuesMatchBeamformingMetrics) {
  const DeskCase c = desk_case(1);
  Rng rng(12);
  const PhaseShifts v = PhaseShifts::random(c.cfg.num_ris_elements(), rng);
  const PhaseProblemData d = phase_problem_data(c.trial.channels, c.w, c.cfg);
  const Metrics m = evaluate_metrics(c.w, c.trial.channels, v, c.cfg);
  const auto rows = phase_row_values(d, v);
  ASSERT_EQ(static_cast<int>(rows.size()), d.num_rows());
  for (int l = 0; l < d.num_points(); ++l)
    EXPECT_NEAR(rows[d.num_users() + l] / (m.sensing_snr[l] / c.cfg.gamma_req_linear()), 1.0, 1e-9);
}

TEST(PhaseData, MatricesArePsd) {
  const DeskCase c = desk_case(2);
  const PhaseProblemData d = phase_problem_data(c.trial.channels, c.w, c.cfg);
  auto min_eig = [](const CMat& a) {
    Eigen::SelfAdjointEigenSolver<CMat> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0) / std::max(1e-300, es.eigenvalues().cwiseAbs().maxCoeff());
  };
  for (const auto& row : d.f)
    for (const auto& f : row) EXPECT_GE(min_eig(f), -1e-10);
  for (const auto& u : d.u) EXPECT_GE(min_eig(u), -1e-10);
}

TEST(PhaseData, WrongStreamCountThrows) {
  const DeskCase c = desk_case(0);
  BeamformerSet w = c.w;
  w.w.pop_back();
  EXPECT_THROW(phase_problem_data(c.trial.channels, w, c.cfg), std::invalid_argument);
}

TEST(AssemblePhaseSdp, Table1Structure) {
  const ScenarioConfig cfg = table1_preset();
  const Trial t = make_trial(cfg, 0);
  const int streams = cfg.num_users() + 1;
  const PhaseProblemData d =
      phase_problem_data(t.channels, BeamformerSet::zeros(streams, t.channels.stacked_dim()), cfg);
  const HermitianSDP feas = assemble_phase_sdp(d, PhaseMode::Feasibility);
  ASSERT_EQ(feas.variables.size(), 1u);
  EXPECT_EQ(feas.variables[0].dim, 65);
  EXPECT_EQ(feas.fixed_entries.size(), 65u);
  EXPECT_EQ(feas.constraints.size(), 26u);
  const HermitianSDP slack = assemble_phase_sdp(d, PhaseMode::MaxSlack);
  ASSERT_EQ(slack.variables.size(), 2u);
  EXPECT_EQ(slack.variables[1].dim, 1);
  EXPECT_EQ(slack.sense, Sense::Maximize);
}

TEST(RecoverPhases, RoundTripThroughLift) {
  Rng rng(3);
  const PhaseShifts v = PhaseShifts::random(8, rng);
  EXPECT_LE((recover_phases(lift(v)).v - v.v).norm(), 1e-14);
}

TEST(RecoverPhases, GlobalPhaseAndScaleInvariant) {
  Rng rng(4);
  const PhaseShifts v = PhaseShifts::random(8, rng);
  const CVec x = lift(v) * std::polar(3.7, 1.234);
  EXPECT_LE((recover_phases(x).v - v.v).norm(), 1e-13);
}

TEST(RecoverPhases, NonUnitEntriesAreProjected) {
  CVec x(3);
  x << cd(2.0, 0.0), cd(0.0, 0.1), cd(0.0, 5.0);
  const PhaseShifts v = recover_phases(x);
  EXPECT_LE(v.modulus_error(), 1e-15);
  EXPECT_NEAR(std::arg(v.v(0)), -std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(std::arg(v.v(1)), 0.0, 1e-15);
}

TEST(RecoverPhases, VanishingLastEntryThrows) {
  CVec x(3);
  x << 1.0, 1.0, 1e-12;
  EXPECT_THROW(recover_phases(x), std::invalid_argument);
}

TEST(RecoverPhases, RankOneMatrixRoundTrip) {
  Rng rng(5);
  const PhaseShifts v = PhaseShifts::random(6, rng);
  const CVec x = lift(v);
  const RankOneResult r = extract_rank_one(x * x.adjoint());
  ASSERT_TRUE(r.rank_one);
  EXPECT_LE((recover_phases(r.vector).v - v.v).norm(), 1e-12);
}

TEST(MinMargin, NoRowsIsInfinite) {
  PhaseProblemData d;
  d.m = 2;
  EXPECT_EQ(min_margin(d, PhaseShifts::zero_phase(2)), std::numeric_limits<double>::infinity());
}

TEST(SolvePhases, ScalarSensingMatchesClosedFormAndBruteForce) {
  const cd b0 = std::polar(0.8, 0.3), b1 = std::polar(1.3, -2.0);
  const PhaseProblemData d = scalar_sensing(b0, b1, 2.0);
  const double closed = std::pow(std::abs(b0) + std::abs(b1), 2) / 2.0 - 1.0;
  EXPECT_NEAR(brute_force_best_margin(d, 10000), closed, 1e-6);
  Rng rng(0);
  const PhaseResult r = solve_phases(d, {}, rng);
  ASSERT_EQ(r.status, StepStatus::Ok);
  EXPECT_NEAR(r.diag.chosen_margin, closed, 1e-6);
  EXPECT_NEAR(r.diag.sdp_slack, closed, 1e-6);
  // Optimal phase aligns the RIS path with the direct path.
  EXPECT_NEAR(std::remainder(std::arg(std::conj(b0) * r.v.v(0)) - std::arg(std::conj(b1)), 2 * std::numbers::pi),
              0.0, 1e-4);
}

TEST(SolvePhases, RandomScalarInstancesMatchBruteForce) {
  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    PhaseProblemData d;
    d.m = 1;
    // Sum of two rank-one forms: the relaxation is no longer tight by construction.
    const CVec a = complex_normal_vector(2, rng), b = complex_normal_vector(2, rng);
    d.u = {a * a.adjoint() + b * b.adjoint()};
    d.sensing_noise_w = 0.5 * quad(d.u[0], CVec::Ones(2));
    const double oracle = brute_force_best_margin(d, 10000);
    if (oracle < 0) continue;
    const PhaseResult r = solve_phases(d, {}, rng);
    ASSERT_EQ(r.status, StepStatus::Ok);
    EXPECT_NEAR(r.diag.chosen_margin, oracle, 1e-3 * std::max(1.0, std::abs(oracle)));
  }
}

TEST(SolvePhases, UnreachableThresholdIsInfeasible) {
  // max |b0 v + b1|^2 = 4 < floor 10.
  const PhaseProblemData d = scalar_sensing(1.0, 1.0, 10.0);
  Rng rng(0);
  EXPECT_EQ(solve_phases(d, {}, rng).status, StepStatus::Infeasible);
  PhaseOptions feas;
  feas.mode = PhaseMode::Feasibility;
  EXPECT_EQ(solve_phases(d, feas, rng).status, StepStatus::Infeasible);
}

TEST(SolvePhases, FeasibilityModeReturnsFeasiblePhases) {
  const PhaseProblemData d = scalar_sensing(1.0, 1.0, 3.0);
  PhaseOptions opts;
  opts.mode = PhaseMode::Feasibility;
  Rng rng(0);
  const PhaseResult r = solve_phases(d, opts, rng);
  ASSERT_EQ(r.status, StepStatus::Ok);
  EXPECT_GE(min_margin(d, r.v), -1e-9);
}

TEST(SolvePhases, DeskMarginIsNonNegativeAndConsistent) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const DeskCase c = desk_case(s);
    const PhaseProblemData d = phase_problem_data(c.trial.channels, c.w, c.cfg);
    Rng rng(s);
    const PhaseResult r = solve_phases(d, {}, rng);
    ASSERT_EQ(r.status, StepStatus::Ok) << r.diag.message;
    EXPECT_GE(r.diag.chosen_margin, -1e-9);
    EXPECT_DOUBLE_EQ(r.diag.chosen_margin, min_margin(d, r.v));
    EXPECT_LE(r.v.modulus_error(), 1e-12);
    // The relaxation bounds every extracted candidate.
    EXPECT_LE(r.diag.chosen_margin, r.diag.sdp_slack + 1e-6 * std::max(1.0, r.diag.sdp_slack));
  }
}

TEST(SolvePhases, RandomizationNeverWorseThanPrincipalEigenvector) {
  const DeskCase c = desk_case(3);
  const PhaseProblemData d = phase_problem_data(c.trial.channels, c.w, c.cfg);
  PhaseOptions evd_only;
  evd_only.ratio_tol = 1.0;
  PhaseOptions randomized;
  randomized.ratio_tol = 0.0;
  randomized.randomization_count = 50;
  Rng a(1), b(1);
  const PhaseResult r0 = solve_phases(d, evd_only, a);
  const PhaseResult r1 = solve_phases(d, randomized, b);
  EXPECT_FALSE(r0.diag.used_randomization);
  EXPECT_EQ(r0.diag.candidates, 1);
  EXPECT_TRUE(r1.diag.used_randomization);
  EXPECT_EQ(r1.diag.candidates, 51);
  EXPECT_GE(r1.diag.chosen_margin, r0.diag.chosen_margin);
}

TEST(SolvePhases, NoRowsKeepsZeroPhase) {
  PhaseProblemData d;
  d.m = 4;
  Rng rng(0);
  const PhaseResult r = solve_phases(d, {}, rng);
  EXPECT_EQ(r.status, StepStatus::Ok);
  EXPECT_EQ(r.v.v, PhaseShifts::zero_phase(4).v);
}
