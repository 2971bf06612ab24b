#include <benchmark/benchmark.h>

#include "risisac/driver.hpp"

using namespace risisac;

namespace {

void BM_BeamformingStepDesk(benchmark::State& state) {
  const ScenarioConfig cfg = desk_preset();
  const Trial trial = make_trial(cfg, 0);
  const BeamformingData data = beamforming_data(trial.channels, initial_phases(cfg, trial), cfg);
  Rng rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_beamformers(data, {}, rng));
}
BENCHMARK(BM_BeamformingStepDesk)->Unit(benchmark::kMillisecond);

void BM_PhaseStepDesk(benchmark::State& state) {
  const ScenarioConfig cfg = desk_preset();
  const Trial trial = make_trial(cfg, 0);
  const PhaseShifts v = initial_phases(cfg, trial);
  Rng rng(1);
  const BeamformResult bf = solve_beamformers(beamforming_data(trial.channels, v, cfg), {}, rng);
  const PhaseProblemData pd = phase_problem_data(trial.channels, bf.w, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(solve_phases(pd, {}, rng));
}
BENCHMARK(BM_PhaseStepDesk)->Unit(benchmark::kMillisecond);

void BM_AlternatingDesk(benchmark::State& state) {
  const ScenarioConfig cfg = desk_preset();
  const Trial trial = make_trial(cfg, 0);
  for (auto _ : state) benchmark::DoNotOptimize(run_scheme(cfg, trial, Scheme::Proposed, {}));
}
BENCHMARK(BM_AlternatingDesk)->Unit(benchmark::kMillisecond);

// Scales the number of users with a single BS, no RIS and no sensing rows.
void BM_BeamformingUsers(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  Rng rng(3);
  BeamformingData d;
  d.dim = 8;
  for (int i = 0; i < k; ++i) d.user_channels.push_back(complex_normal_vector(8, rng));
  d.r_req_bps_hz = 1.0;
  d.spe_target = 1.0;
  d.user_noise_w.assign(k, 1e-2);
  for (auto _ : state) benchmark::DoNotOptimize(solve_beamformers(d, {}, rng));
}
BENCHMARK(BM_BeamformingUsers)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
