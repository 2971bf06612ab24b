#include "risisac/validation.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "risisac/driver.hpp"
#include "risisac/ris.hpp"

namespace risisac {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

CheckResult guarded(const std::string& name, const std::function<CheckResult()>& body) {
  try {
    CheckResult r = body();
    r.name = name;
    return r;
  } catch (const std::exception& e) {
    return {name, false, std::string("exception: ") + e.what()};
  }
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

CMat random_hermitian(int n, Rng& rng) {
  CMat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = complex_normal(rng);
  return 0.5 * (a + a.adjoint());
}

}  // namespace

std::vector<CheckResult> run_validation_suite(const ScenarioConfig& cfg, int seeds) {
  std::vector<CheckResult> out;

  out.push_back(guarded("noise-power", [] {
    ScenarioConfig c = desk_preset();
    c.noise_density_dbm_per_hz = -174.0;
    c.bandwidth_hz = 100e6;
    const double got = noise_power_watts(c).sensing_w;
    const double want = std::pow(10.0, (-174.0 + 80.0 - 30.0) / 10.0);
    return CheckResult{"", rel(got, want) <= 1e-12, "sigma^2 = " + fmt(got) + " W"};
  }));

  out.push_back(guarded("steering-unit-modulus", [] {
    ArrayGeometry g{8, 4, 0.05, 0.05, 0.1};
    const CVec a = steering_vector(g, kPi / 4, kPi / 3);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(std::abs(a(i)) - 1.0));
    return CheckResult{"", worst <= 1e-12 && std::abs(a.norm() - std::sqrt(32.0)) <= 1e-12,
                       "max modulus error " + fmt(worst)};
  }));

  out.push_back(guarded("embed-round-trip", [] {
    Rng rng(7);
    double worst = 0.0;
    for (int t = 0; t < 10; ++t) {
      const CMat x = random_hermitian(5, rng);
      worst = std::max(worst, (unembed_symmetric(embed_hermitian(x)) - x).norm());
    }
    return CheckResult{"", worst <= 1e-13, "max |delta|_F " + fmt(worst)};
  }));

  out.push_back(guarded("sdp-analytic-oracle", [] {
    HermitianSDP p;
    const int w = p.add_variable("W", 2);
    p.add_objective_term(w, CMat::Identity(2, 2));
    CMat g = CMat::Zero(2, 2);
    g(0, 0) = 2.0;
    g(1, 1) = 1.0;
    HermitianSDP::Constraint c;
    c.terms.push_back({w, g});
    c.rhs = 2.0;
    p.add_constraint(c);
    const SDPSolution s = solve_sdp(p);
    return CheckResult{"", s.status == SolveStatus::Optimal && std::abs(s.objective - 1.0) <= 1e-7 &&
                               s.kkt.max() <= 1e-8,
                       "objective " + fmt(s.objective) + ", kkt " + fmt(s.kkt.max())};
  }));

  out.push_back(guarded("sdp-infeasible", [] {
    HermitianSDP p;
    const int w = p.add_variable("W", 2);
    p.add_objective_term(w, CMat::Identity(2, 2));
    HermitianSDP::Constraint c;
    c.terms.push_back({w, -CMat::Identity(2, 2)});
    c.rhs = 1.0;
    p.add_constraint(c);
    const SDPSolution s = solve_sdp(p);
    return CheckResult{"", s.status == SolveStatus::Infeasible, to_string(s.status)};
  }));

  out.push_back(guarded("matched-filter-power", [] {
    Rng rng(11);
    BeamformingData d;
    d.dim = 4;
    d.user_channels = {complex_normal_vector(4, rng)};
    d.r_req_bps_hz = 3.0;
    d.spe_target = 7.0;
    d.user_noise_w = {1e-3};
    d.sensing_noise_w = 1e-3;
    const double want = 7.0 * 1e-3 / d.user_channels[0].squaredNorm();
    Rng r2(1);
    const BeamformResult res = solve_beamformers(d, {}, r2);
    const double got = res.w.total_power();
    return CheckResult{"", res.status == StepStatus::Ok && rel(got, want) <= 1e-6,
                       "power " + fmt(got) + " vs " + fmt(want)};
  }));

  out.push_back(guarded("sensing-only-power", [] {
    Rng rng(13);
    BeamformingData d;
    d.dim = 4;
    const CMat h = complex_normal_vector(3, rng) * complex_normal_vector(4, rng).adjoint();
    d.echo_matrices = {h};
    d.gamma_req_linear = 10.0;
    d.sensing_noise_w = 1e-2;
    Eigen::SelfAdjointEigenSolver<CMat> es(h.adjoint() * h, Eigen::EigenvaluesOnly);
    const double want = 1e-2 * 10.0 / es.eigenvalues().maxCoeff();
    Rng r2(1);
    const BeamformResult res = solve_beamformers(d, {}, r2);
    const double got = res.w.total_power();
    return CheckResult{"", res.status == StepStatus::Ok && rel(got, want) <= 1e-6,
                       "power " + fmt(got) + " vs " + fmt(want)};
  }));

  out.push_back(guarded("scenario-round-trip", [&] {
    const ScenarioConfig again = load_scenario(serialize_scenario(cfg));
    return CheckResult{"", again == cfg, again == cfg ? "equal" : "differs after reload"};
  }));

  std::vector<Trial> trials;
  for (int s = 0; s < seeds; ++s) trials.push_back(make_trial(cfg, static_cast<std::uint64_t>(s)));

  out.push_back(guarded("lifted-quadratic-identity", [&] {
    double worst = 0.0;
    for (const Trial& t : trials) {
      Rng rng(t.child_seed);
      BeamformerSet w;
      for (int k = 0; k <= cfg.num_users(); ++k) w.w.push_back(complex_normal_vector(t.channels.stacked_dim(), rng));
      const PhaseShifts v = PhaseShifts::random(cfg.num_ris_elements(), rng);
      const PhaseProblemData pd = phase_problem_data(t.channels, w, cfg);
      const CVec x = lift(v);
      for (int k = 0; k < cfg.num_users(); ++k) {
        const CVec g = effective_user_channel(t.channels, v, k);
        for (int i = 0; i <= cfg.num_users(); ++i) {
          const double direct = std::norm(g.dot(w.w[i]));
          worst = std::max(worst, rel(x.dot(pd.f[k][i] * x).real(), direct));
        }
      }
    }
    return CheckResult{"", worst <= 1e-10, "max relative error " + fmt(worst)};
  }));

  AoOptions opts;
  std::vector<RunReport> runs;
  for (const Trial& t : trials) runs.push_back(run_scheme(cfg, t, Scheme::Proposed, opts));

  out.push_back(guarded("ao-monotone", [&] {
    double worst = 0.0;
    for (const auto& r : runs)
      for (std::size_t n = 1; n < r.power_history.size(); ++n)
        worst = std::max(worst, (r.power_history[n] - r.power_history[n - 1]) / r.power_history[n - 1]);
    return CheckResult{"", worst <= 10 * opts.beamform.solver.tol, "largest relative increase " + fmt(worst)};
  }));

  out.push_back(guarded("ao-feasible", [&] {
    int bad = 0;
    int feasible = 0;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (!runs[i].feasible()) continue;
      ++feasible;
      const BeamformingData d = beamforming_data(trials[i].channels, runs[i].v, cfg);
      if (!meets_thresholds(evaluate_metrics(d, runs[i].w), d)) ++bad;
    }
    return CheckResult{"", bad == 0 && feasible > 0,
                       std::to_string(feasible) + " feasible runs, " + std::to_string(bad) + " violate thresholds"};
  }));

  out.push_back(guarded("heatmap-covers-region", [&] {
    int violations = 0;
    int checked = 0;
    const double floor_db = cfg.gamma_req_db + linear_to_db(1.0 - 1e-4);
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (!runs[i].feasible()) continue;
      HeatmapOptions h;
      h.altitude = cfg.region.altitude;
      for (const auto& c : snr_heatmap(cfg, trials[i].channels, runs[i].w, runs[i].v, h)) {
        if (!c.grid_point) continue;
        ++checked;
        if (c.snr_db < floor_db) ++violations;
      }
    }
    return CheckResult{"", violations == 0 && checked > 0,
                       std::to_string(checked) + " grid cells, " + std::to_string(violations) + " below threshold"};
  }));

  return out;
}

}  // namespace risisac
