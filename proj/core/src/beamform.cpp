#include "risisac/beamform.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace risisac {

double BeamformerSet::total_power() const {
  double p = 0.0;
  for (const auto& wk : w) p += wk.squaredNorm();
  return p;
}

BeamformerSet BeamformerSet::zeros(int streams, int dim) {
  BeamformerSet s;
  s.w.assign(streams, CVec::Zero(dim));
  return s;
}

std::string to_string(StepStatus s) {
  switch (s) {
    case StepStatus::Ok:
      return "ok";
    case StepStatus::Infeasible:
      return "infeasible";
    case StepStatus::NumericalFailure:
      return "numerical-failure";
    case StepStatus::NoFeasibleCandidate:
      return "no-feasible-candidate";
  }
  return "unknown";
}

BeamformingData beamforming_data(const ChannelSet& channels, const PhaseShifts& v,
                                 const ScenarioConfig& cfg) {
  BeamformingData d;
  d.dim = channels.stacked_dim();
  for (int k = 0; k < channels.num_users; ++k)
    d.user_channels.push_back(effective_user_channel(channels, v, k));
  for (int l = 0; l < channels.num_points; ++l) d.echo_matrices.push_back(echo_matrix(channels, v, l));
  d.spe_target = cfg.spe_target();
  d.r_req_bps_hz = cfg.r_req_bps_hz;
  d.gamma_req_linear = cfg.gamma_req_linear();
  const NoisePowers noise = noise_power_watts(cfg);
  d.sensing_noise_w = noise.sensing_w;
  d.user_noise_w = noise.user_w;
  d.sensing_interference_at_users = cfg.sensing_interference_at_users;
  return d;
}

HermitianSDP assemble_beamforming_sdp(const BeamformingData& data) {
  const int users = data.num_users();
  if (static_cast<int>(data.user_noise_w.size()) != users)
    throw std::invalid_argument("assemble_beamforming_sdp: one noise power per user is required");
  if (!(data.spe_target > 0.0)) throw std::invalid_argument("assemble_beamforming_sdp: S must be positive");
  if (!(data.gamma_req_linear > 0.0))
    throw std::invalid_argument("assemble_beamforming_sdp: gamma_req must be positive");
  for (const auto& g : data.user_channels)
    if (g.size() != data.dim) throw std::invalid_argument("assemble_beamforming_sdp: user channel dimension mismatch");
  for (const auto& h : data.echo_matrices)
    if (h.cols() != data.dim) throw std::invalid_argument("assemble_beamforming_sdp: echo matrix dimension mismatch");

  HermitianSDP p;
  p.sense = Sense::Minimize;
  for (int k = 0; k <= users; ++k) {
    const int var = p.add_variable("W" + std::to_string(k), data.dim);
    p.add_objective_term(var, CMat::Identity(data.dim, data.dim));
  }

  const double s = data.spe_target;
  for (int k = 1; k <= users; ++k) {
    const CVec& g = data.user_channels[k - 1];
    const CMat gk = g * g.adjoint();
    const double noise = data.user_noise_w[k - 1];
    HermitianSDP::Constraint c;
    c.label = "se[" + std::to_string(k) + "]";
    c.relation = Relation::GreaterEqual;
    c.rhs = 1.0;
    c.terms.push_back({k, gk / (s * noise)});
    for (int i = 1; i <= users; ++i)
      if (i != k) c.terms.push_back({i, -gk / noise});
    if (data.sensing_interference_at_users) c.terms.push_back({0, -gk / noise});
    p.add_constraint(std::move(c));
  }

  const double sensing_floor = data.sensing_noise_w * data.gamma_req_linear;
  for (int l = 0; l < data.num_points(); ++l) {
    const CMat& h = data.echo_matrices[l];
    CMat q = h.adjoint() * h / sensing_floor;
    q = 0.5 * (q + q.adjoint());
    HermitianSDP::Constraint c;
    c.label = "snr[" + std::to_string(l) + "]";
    c.relation = Relation::GreaterEqual;
    c.rhs = 1.0;
    for (int k = 0; k <= users; ++k) c.terms.push_back({k, q});
    p.add_constraint(std::move(c));
  }
  return p;
}

std::optional<double> feasibility_scale(const BeamformingData& data, const BeamformerSet& w) {
  const int users = data.num_users();
  const double s = data.spe_target;
  double c2 = 0.0;
  for (int k = 1; k <= users; ++k) {
    const CVec& g = data.user_channels[k - 1];
    const double desired = std::norm(g.dot(w.w[k]));
    double interference = 0.0;
    for (int i = 1; i <= users; ++i)
      if (i != k) interference += std::norm(g.dot(w.w[i]));
    if (data.sensing_interference_at_users) interference += std::norm(g.dot(w.w[0]));
    const double excess = desired - s * interference;
    if (!(excess > 0.0)) return std::nullopt;
    c2 = std::max(c2, s * data.user_noise_w[k - 1] / excess);
  }
  const double floor = data.sensing_noise_w * data.gamma_req_linear;
  for (const auto& h : data.echo_matrices) {
    double echo = 0.0;
    for (const auto& wk : w.w) echo += (h * wk).squaredNorm();
    if (!(echo > 0.0)) return std::nullopt;
    c2 = std::max(c2, floor / echo);
  }
  return std::sqrt(c2 * (1.0 + 1e-12));
}

Metrics evaluate_metrics(const BeamformingData& data, const BeamformerSet& w, bool coherent_sensing) {
  Metrics m;
  m.total_power_w = w.total_power();
  const int users = data.num_users();
  m.min_se_margin = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= users; ++k) {
    const CVec& g = data.user_channels[k - 1];
    const double desired = std::norm(g.dot(w.w[k]));
    double interference = 0.0;
    for (int i = 1; i <= users; ++i)
      if (i != k) interference += std::norm(g.dot(w.w[i]));
    if (data.sensing_interference_at_users) interference += std::norm(g.dot(w.w[0]));
    const double se = std::log2(1.0 + desired / (interference + data.user_noise_w[k - 1]));
    m.se_bps_hz.push_back(se);
    m.min_se_margin = std::min(m.min_se_margin, se - data.r_req_bps_hz);
  }
  m.min_snr_margin_db = std::numeric_limits<double>::infinity();
  for (const auto& h : data.echo_matrices) {
    double echo = 0.0;
    if (coherent_sensing) {
      CVec sum = CVec::Zero(h.rows());
      for (const auto& wk : w.w) sum += h * wk;
      echo = sum.squaredNorm();
    } else {
      for (const auto& wk : w.w) echo += (h * wk).squaredNorm();
    }
    const double snr = echo / data.sensing_noise_w;
    m.sensing_snr.push_back(snr);
    m.min_snr_margin_db = std::min(m.min_snr_margin_db,
                                   snr > 0.0 ? linear_to_db(snr / data.gamma_req_linear)
                                             : -std::numeric_limits<double>::infinity());
  }
  return m;
}

Metrics evaluate_metrics(const BeamformerSet& w, const ChannelSet& channels, const PhaseShifts& v,
                         const ScenarioConfig& cfg, bool coherent_sensing) {
  return evaluate_metrics(beamforming_data(channels, v, cfg), w, coherent_sensing);
}

bool meets_thresholds(const Metrics& m, const BeamformingData& data, double se_tol, double snr_rel_tol) {
  for (double se : m.se_bps_hz)
    if (se < data.r_req_bps_hz - se_tol) return false;
  for (double snr : m.sensing_snr)
    if (snr < data.gamma_req_linear * (1.0 - snr_rel_tol)) return false;
  return true;
}

namespace {

struct StreamFactor {
  bool fixed = true;  // principal vector used as-is in every candidate
  CVec principal;
  CMat factor;        // U Lambda^{1/2}, for Gaussian draws
};

}  // namespace

BeamformResult solve_beamformers(const BeamformingData& data, const BeamformOptions& opts, Rng& rng) {
  BeamformResult res;
  const int streams = data.num_users() + 1;
  if (data.num_users() == 0 && data.num_points() == 0) {
    res.status = StepStatus::Ok;
    res.w = BeamformerSet::zeros(streams, data.dim);
    res.diag.extraction_ratios.assign(streams, 0.0);
    res.diag.message = "no constraints";
    return res;
  }

  const HermitianSDP problem = assemble_beamforming_sdp(data);
  const SdpBackend& backend = opts.backend ? *opts.backend : default_backend();
  const SDPSolution sol = solve_sdp(problem, opts.solver, backend);
  res.diag.sdp_iterations = sol.iterations;
  res.diag.kkt = sol.kkt;
  res.diag.message = sol.diagnostic;
  if (sol.status == SolveStatus::Infeasible) {
    res.status = StepStatus::Infeasible;
    return res;
  }
  if (sol.status != SolveStatus::Optimal) {
    res.status = StepStatus::NumericalFailure;
    return res;
  }
  res.diag.sdp_objective = sol.objective;

  double total_trace = 0.0;
  for (const auto& x : sol.x) total_trace += x.trace().real();

  std::vector<StreamFactor> factors(streams);
  bool all_rank_one = true;
  for (int k = 0; k < streams; ++k) {
    const CMat& x = sol.x[k];
    if (x.trace().real() <= 1e-9 * total_trace) {
      factors[k].principal = CVec::Zero(data.dim);
      res.diag.extraction_ratios.push_back(0.0);
      continue;
    }
    RankOneResult r;
    try {
      r = extract_rank_one(x, opts.ratio_tol);
    } catch (const std::invalid_argument& e) {
      res.status = StepStatus::NumericalFailure;
      res.diag.message = e.what();
      return res;
    }
    res.diag.extraction_ratios.push_back(r.ratio);
    factors[k].principal = r.vector;
    if (!r.rank_one) {
      all_rank_one = false;
      factors[k].fixed = false;
      Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (x + x.adjoint()));
      const RVec lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      factors[k].factor = es.eigenvectors() * lam.asDiagonal();
    }
  }

  BeamformerSet principal;
  for (const auto& f : factors) principal.w.push_back(f.principal);

  std::optional<BeamformerSet> best;
  double best_power = std::numeric_limits<double>::infinity();
  auto consider = [&](BeamformerSet cand) {
    ++res.diag.candidates_tried;
    const auto c = feasibility_scale(data, cand);
    if (!c) return;
    for (auto& wk : cand.w) wk *= *c;
    const double p = cand.total_power();
    if (p < best_power) {
      best_power = p;
      best = std::move(cand);
    }
  };

  consider(principal);
  if (!all_rank_one) {
    res.diag.used_randomization = true;
    for (int draw = 0; draw < opts.randomization_budget; ++draw) {
      BeamformerSet cand;
      for (const auto& f : factors) {
        if (f.fixed)
          cand.w.push_back(f.principal);
        else
          cand.w.push_back(f.factor * complex_normal_vector(f.factor.cols(), rng));
      }
      consider(std::move(cand));
    }
  }

  if (!best) {
    res.status = StepStatus::NoFeasibleCandidate;
    res.diag.message = "no randomization candidate could be scaled to feasibility";
    return res;
  }
  res.status = StepStatus::Ok;
  res.w = std::move(*best);
  res.diag.final_power = best_power;
  return res;
}

}  // namespace risisac
