#pragma once

#include <string>
#include <vector>

#include "risisac/beamform.hpp"
#include "risisac/channel.hpp"
#include "risisac/scenario.hpp"
#include "risisac/sdp.hpp"

namespace risisac {

/// Quadratic forms of the phase subproblem in the lifted variable
/// v~ = [v; 1]. For unit-modulus v and V = v~ v~^H:
///   tr(f[k][i] V) = |g_k(v)^H w_i|^2,   tr(u[l] V) = ||H_0(o_l) w||^2 summed over streams.
struct PhaseProblemData {
  std::vector<std::vector<CMat>> f;  ///< f[k-1][i], user k = 1..K, stream i = 0..K
  std::vector<CMat> u;               ///< s_l U_{o_l}, one per grid point
  double spe_target = 1.0;
  double gamma_req_linear = 1.0;
  double sensing_noise_w = 1.0;
  std::vector<double> user_noise_w;
  bool sensing_interference_at_users = false;
  int m = 0;  ///< RIS elements; matrices are (m+1) x (m+1)

  int num_users() const { return static_cast<int>(f.size()); }
  int num_points() const { return static_cast<int>(u.size()); }
  int num_rows() const { return num_users() + num_points(); }
};

/// Builds every F and U matrix from raw channels and the fixed beamformers.
/// Throws std::logic_error if any matrix fails the PSD sanity check.
PhaseProblemData phase_problem_data(const ChannelSet& channels, const BeamformerSet& w,
                                    const ScenarioConfig& cfg);

enum class PhaseMode { Feasibility, MaxSlack };

/// One (m+1) PSD variable V with unit diagonal. Rows are normalized to unit
/// right-hand side. MaxSlack adds a 1x1 variable t >= 0, maximized, with each
/// row tightened to value >= 1 + t, so t is the common relative margin.
HermitianSDP assemble_phase_sdp(const PhaseProblemData& data, PhaseMode mode);

/// [v; 1]
CVec lift(const PhaseShifts& v);

/// v_m = exp(j (arg v~_m - arg v~_{M+1})). Throws std::invalid_argument when
/// the last entry is below 1e-9 relative to max |v~_m|.
PhaseShifts recover_phases(const CVec& lifted);

/// Normalized row values (SE rows first, then sensing rows) at phases v.
std::vector<double> phase_row_values(const PhaseProblemData& data, const PhaseShifts& v);

/// min over rows of (value - 1): the relative constraint margin. +inf when
/// there are no rows.
double min_margin(const PhaseProblemData& data, const PhaseShifts& v);

struct PhaseOptions {
  SolverOptions solver;
  PhaseMode mode = PhaseMode::MaxSlack;
  double ratio_tol = 1e-4;
  int randomization_count = 200;
  const SdpBackend* backend = nullptr;
};

struct PhaseDiagnostics {
  double sdp_slack = 0.0;  ///< t at the relaxation optimum (MaxSlack only)
  double rank_ratio = 0.0;
  bool used_randomization = false;
  int candidates = 0;
  double chosen_margin = 0.0;
  int sdp_iterations = 0;
  KktResiduals kkt;
  std::string message;
};

struct PhaseResult {
  StepStatus status = StepStatus::NumericalFailure;
  PhaseShifts v;
  PhaseDiagnostics diag;
};

/// Solves the relaxation, then extracts phases by EVD when V is numerically
/// rank one and by Gaussian randomization otherwise. Candidates are ranked by
/// min_margin; failure is reported when the best one is still negative.
PhaseResult solve_phases(const PhaseProblemData& data, const PhaseOptions& opts, Rng& rng);

}  // namespace risisac
