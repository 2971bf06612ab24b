#include "risisac/ris.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace risisac {

namespace {

// b with |g^H w|^2 = |b^T v~|^2, i.e. b = C w for C = [diag(h_R^H) G; h^H]
// evaluated per BS block and summed.
CVec lifted_response(const std::vector<CVec>& h_direct, const CVec& h_ris,
                     const std::vector<CMat>& g_bs_ris, const CVec& w, int n) {
  const int num_bs = static_cast<int>(h_direct.size());
  const int m = static_cast<int>(h_ris.size());
  CVec gw = CVec::Zero(m);
  cd direct = 0.0;
  for (int j = 0; j < num_bs; ++j) {
    const auto wj = w.segment(j * n, n);
    if (m > 0) gw += g_bs_ris[j] * wj;
    direct += h_direct[j].dot(wj);
  }
  CVec b(m + 1);
  b.head(m) = h_ris.conjugate().cwiseProduct(gw);
  b(m) = direct;
  return b;
}

// F = conj(b) conj(b)^H so that v~^H F v~ = |b^T v~|^2.
CMat quadratic_form(const CVec& b) {
  const CVec c = b.conjugate();
  return c * c.adjoint();
}

void check_psd(const CMat& a, const char* what) {
  if (a.size() == 0) return;
  Eigen::SelfAdjointEigenSolver<CMat> es(a, Eigen::EigenvaluesOnly);
  const double top = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
  if (es.eigenvalues()(0) < -1e-10 * top) throw std::logic_error(std::string(what) + " is not PSD");
}

double quad(const CMat& a, const CVec& x) { return x.dot(a * x).real(); }

}  // namespace

PhaseProblemData phase_problem_data(const ChannelSet& channels, const BeamformerSet& w,
                                    const ScenarioConfig& cfg) {
  PhaseProblemData d;
  d.m = channels.m_elements;
  d.spe_target = cfg.spe_target();
  d.gamma_req_linear = cfg.gamma_req_linear();
  const NoisePowers noise = noise_power_watts(cfg);
  d.sensing_noise_w = noise.sensing_w;
  d.user_noise_w = noise.user_w;
  d.sensing_interference_at_users = cfg.sensing_interference_at_users;

  const int n = channels.n_antennas;
  const int streams = w.num_streams();
  if (streams != channels.num_users + 1)
    throw std::invalid_argument("phase_problem_data: need one beamformer per user plus the sensing beam");

  for (int k = 0; k < channels.num_users; ++k) {
    std::vector<CVec> direct(channels.num_bs);
    for (int j = 0; j < channels.num_bs; ++j) direct[j] = channels.h_bs_user[j][k];
    std::vector<CMat> row;
    for (int i = 0; i < streams; ++i)
      row.push_back(quadratic_form(
          lifted_response(direct, channels.h_ris_user[k], channels.g_bs_ris, w.w[i], n)));
    d.f.push_back(std::move(row));
  }

  for (int l = 0; l < channels.num_points; ++l) {
    std::vector<CVec> direct(channels.num_bs);
    for (int j = 0; j < channels.num_bs; ++j) direct[j] = channels.h_bs_target[j][l];
    CMat u = CMat::Zero(d.m + 1, d.m + 1);
    for (int i = 0; i < streams; ++i)
      u += quadratic_form(lifted_response(direct, channels.h_ris_target[l], channels.g_bs_ris, w.w[i], n));
    const double s = channels.h_target_rx[l].squaredNorm();
    check_psd(u, "U_o");
    d.u.push_back(s * u);
  }
  return d;
}

HermitianSDP assemble_phase_sdp(const PhaseProblemData& data, PhaseMode mode) {
  const int dim = data.m + 1;
  HermitianSDP p;
  p.sense = mode == PhaseMode::MaxSlack ? Sense::Maximize : Sense::Minimize;
  const int v = p.add_variable("V", dim);
  p.pin_diagonal(v, 1.0);
  int t = -1;
  if (mode == PhaseMode::MaxSlack) {
    t = p.add_variable("t", 1);
    p.add_objective_term(t, CMat::Identity(1, 1));
  }
  auto tighten = [&](HermitianSDP::Constraint& c) {
    if (t >= 0) c.terms.push_back({t, -CMat::Identity(1, 1)});
  };

  const double s = data.spe_target;
  for (int k = 0; k < data.num_users(); ++k) {
    const double noise = data.user_noise_w.at(k);
    HermitianSDP::Constraint c;
    c.label = "se[" + std::to_string(k + 1) + "]";
    c.rhs = 1.0;
    CMat a = data.f[k][k + 1] / (s * noise);
    for (int i = 1; i <= data.num_users(); ++i)
      if (i != k + 1) a -= data.f[k][i] / noise;
    if (data.sensing_interference_at_users) a -= data.f[k][0] / noise;
    c.terms.push_back({v, 0.5 * (a + a.adjoint())});
    tighten(c);
    p.add_constraint(std::move(c));
  }
  const double floor = data.sensing_noise_w * data.gamma_req_linear;
  for (int l = 0; l < data.num_points(); ++l) {
    HermitianSDP::Constraint c;
    c.label = "snr[" + std::to_string(l) + "]";
    c.rhs = 1.0;
    const CMat a = data.u[l] / floor;
    c.terms.push_back({v, 0.5 * (a + a.adjoint())});
    tighten(c);
    p.add_constraint(std::move(c));
  }
  return p;
}

CVec lift(const PhaseShifts& v) {
  CVec out(v.size() + 1);
  out.head(v.size()) = v.v;
  out(v.size()) = 1.0;
  return out;
}

PhaseShifts recover_phases(const CVec& lifted) {
  if (lifted.size() == 0) throw std::invalid_argument("recover_phases: empty vector");
  const Eigen::Index m = lifted.size() - 1;
  const double scale = lifted.cwiseAbs().maxCoeff();
  if (!(std::abs(lifted(m)) >= 1e-9 * scale) || scale == 0.0)
    throw std::invalid_argument("recover_phases: last entry is zero");
  const double ref = std::arg(lifted(m));
  PhaseShifts out;
  out.v.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) out.v(i) = std::polar(1.0, std::arg(lifted(i)) - ref);
  return out;
}

std::vector<double> phase_row_values(const PhaseProblemData& data, const PhaseShifts& v) {
  const CVec x = lift(v);
  std::vector<double> rows;
  const double s = data.spe_target;
  for (int k = 0; k < data.num_users(); ++k) {
    const double noise = data.user_noise_w.at(k);
    double val = quad(data.f[k][k + 1], x) / (s * noise);
    for (int i = 1; i <= data.num_users(); ++i)
      if (i != k + 1) val -= quad(data.f[k][i], x) / noise;
    if (data.sensing_interference_at_users) val -= quad(data.f[k][0], x) / noise;
    rows.push_back(val);
  }
  const double floor = data.sensing_noise_w * data.gamma_req_linear;
  for (const auto& u : data.u) rows.push_back(quad(u, x) / floor);
  return rows;
}

double min_margin(const PhaseProblemData& data, const PhaseShifts& v) {
  double best = std::numeric_limits<double>::infinity();
  for (double r : phase_row_values(data, v)) best = std::min(best, r - 1.0);
  return best;
}

PhaseResult solve_phases(const PhaseProblemData& data, const PhaseOptions& opts, Rng& rng) {
  PhaseResult res;
  if (data.num_rows() == 0) {
    res.status = StepStatus::Ok;
    res.v = PhaseShifts::zero_phase(data.m);
    res.diag.chosen_margin = std::numeric_limits<double>::infinity();
    res.diag.message = "no constraints";
    return res;
  }

  const HermitianSDP problem = assemble_phase_sdp(data, opts.mode);
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
  if (opts.mode == PhaseMode::MaxSlack) res.diag.sdp_slack = sol.x[1](0, 0).real();

  RankOneResult r;
  try {
    r = extract_rank_one(sol.x[0], opts.ratio_tol);
  } catch (const std::invalid_argument& e) {
    res.status = StepStatus::NumericalFailure;
    res.diag.message = e.what();
    return res;
  }
  res.diag.rank_ratio = r.ratio;

  double best = -std::numeric_limits<double>::infinity();
  auto consider = [&](const CVec& cand) {
    ++res.diag.candidates;
    PhaseShifts v;
    try {
      v = recover_phases(cand);
    } catch (const std::invalid_argument&) {
      return;
    }
    const double margin = min_margin(data, v);
    if (margin > best) {
      best = margin;
      res.v = std::move(v);
    }
  };

  consider(r.vector);
  if (!r.rank_one) {
    res.diag.used_randomization = true;
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (sol.x[0] + sol.x[0].adjoint()));
    const CMat factor = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    for (int i = 0; i < opts.randomization_count; ++i)
      consider(factor * complex_normal_vector(factor.cols(), rng));
  }

  res.diag.chosen_margin = best;
  if (!(best >= -1e-9)) {
    res.status = StepStatus::NoFeasibleCandidate;
    res.diag.message = "best phase candidate violates a constraint";
    return res;
  }
  res.status = StepStatus::Ok;
  return res;
}

}  // namespace risisac
