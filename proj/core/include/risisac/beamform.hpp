#pragma once

#include <optional>
#include <string>
#include <vector>

#include "risisac/channel.hpp"
#include "risisac/scenario.hpp"
#include "risisac/sdp.hpp"

namespace risisac {

/// w[0] is the dedicated sensing beam, w[1..K] serve the users. Each vector
/// stacks the per-BS beamformers in BS order (length N * J).
struct BeamformerSet {
  std::vector<CVec> w;

  int num_streams() const { return static_cast<int>(w.size()); }
  double total_power() const;
  /// Per-BS slice omega_{j,k} of length n.
  CVec slice(int k, int j, int n) const { return w.at(k).segment(j * n, n); }

  static BeamformerSet zeros(int streams, int dim);
};

struct Metrics {
  double total_power_w = 0.0;
  std::vector<double> se_bps_hz;          ///< per user
  std::vector<double> sensing_snr;        ///< linear, per grid point
  double min_se_margin = 0.0;             ///< min_k R_k - R_req (+inf if K = 0)
  double min_snr_margin_db = 0.0;         ///< min_l 10 log10(gamma_l / gamma_req)
};

/// Everything the transmit-beamforming subproblem needs for fixed phases.
struct BeamformingData {
  std::vector<CVec> user_channels;  ///< g_k, k = 1..K stored at index k-1
  std::vector<CMat> echo_matrices;  ///< H_0(o_l), N x NJ
  double spe_target = 1.0;          ///< S = 2^R_req - 1
  double r_req_bps_hz = 1.0;
  double gamma_req_linear = 1.0;
  double sensing_noise_w = 1.0;
  std::vector<double> user_noise_w;
  bool sensing_interference_at_users = false;
  int dim = 0;  ///< N * J

  int num_users() const { return static_cast<int>(user_channels.size()); }
  int num_points() const { return static_cast<int>(echo_matrices.size()); }
};

BeamformingData beamforming_data(const ChannelSet& channels, const PhaseShifts& v,
                                 const ScenarioConfig& cfg);

/// Semidefinite relaxation of the power-minimization problem with one PSD
/// variable per stream (W0 = sensing). Rows are scaled to unit right-hand
/// side: SE rows read tr(G_k W_k)/(S s_k) - sum_i tr(G_k W_i)/s_k >= 1 and
/// sensing rows read tr(H W H^H)/(s^2 gamma) >= 1.
HermitianSDP assemble_beamforming_sdp(const BeamformingData& data);

/// Smallest c > 0 such that c * w satisfies every constraint, or nullopt if
/// no scaling can (some SINR is interference-limited below S or some echo is
/// zero).
std::optional<double> feasibility_scale(const BeamformingData& data, const BeamformerSet& w);

Metrics evaluate_metrics(const BeamformingData& data, const BeamformerSet& w,
                         bool coherent_sensing = false);
Metrics evaluate_metrics(const BeamformerSet& w, const ChannelSet& channels, const PhaseShifts& v,
                         const ScenarioConfig& cfg, bool coherent_sensing = false);

/// True when every SE is within `se_tol` of R_req and every sensing SNR is at
/// least gamma_req (1 - snr_rel_tol).
bool meets_thresholds(const Metrics& m, const BeamformingData& data, double se_tol = 1e-4,
                      double snr_rel_tol = 1e-4);

struct BeamformOptions {
  SolverOptions solver;
  double ratio_tol = 1e-4;
  int randomization_budget = 200;
  const SdpBackend* backend = nullptr;  ///< nullptr selects default_backend()
};

enum class StepStatus { Ok, Infeasible, NumericalFailure, NoFeasibleCandidate };
std::string to_string(StepStatus s);

struct BeamformDiagnostics {
  double sdp_objective = 0.0;  ///< relaxation lower bound
  std::vector<double> extraction_ratios;
  bool used_randomization = false;
  int candidates_tried = 0;
  double final_power = 0.0;
  int sdp_iterations = 0;
  KktResiduals kkt;
  std::string message;
};

struct BeamformResult {
  StepStatus status = StepStatus::NumericalFailure;
  BeamformerSet w;
  BeamformDiagnostics diag;
};

/// Solves the relaxation, extracts principal eigenvectors, and falls back to
/// Gaussian randomization when some W_k is not numerically rank one. The
/// returned set is always rescaled to exact feasibility.
BeamformResult solve_beamformers(const BeamformingData& data, const BeamformOptions& opts, Rng& rng);

}  // namespace risisac
