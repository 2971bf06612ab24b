#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "risisac/sdp.hpp"

namespace risisac {

namespace {

// Standard equality form after row/objective scaling:
//   min <C, X> + c_lp^T x   s.t.  <A_i, X> + a_i^T x = b_i,  X >= 0, x >= 0.
struct BlockTerm {
  int row;
  RMat coeff;
};

struct StandardForm {
  std::vector<int> dims;
  int n_lp = 0;
  std::vector<RMat> c;
  RVec c_lp;
  RVec b;
  std::vector<std::vector<BlockTerm>> by_block;                 // block -> terms
  std::vector<std::vector<std::pair<int, double>>> lp_by_var;   // lp var -> (row, coeff)
  RVec row_scale;   // original row i = scaled row i / row_scale(i)
  double c_scale = 1.0;
  double x_scale = 1.0;
  int m = 0;
  int total_dim = 0;
};

StandardForm build_standard_form(const RealSDP& p) {
  StandardForm f;
  f.dims = p.block_dims;
  f.m = static_cast<int>(p.rows.size());
  const double sign = p.sense == Sense::Minimize ? 1.0 : -1.0;

  for (int d : f.dims) f.c.push_back(RMat::Zero(d, d));
  for (const auto& t : p.objective) f.c[t.block] += sign * t.coeff;
  f.by_block.resize(f.dims.size());

  // Row norms including the slack coefficient so every scaled row has unit norm.
  f.row_scale = RVec::Ones(f.m);
  f.b = RVec::Zero(f.m);
  for (int i = 0; i < f.m; ++i) {
    const auto& r = p.rows[i];
    double sq = r.relation == Relation::Equal ? 0.0 : 1.0;
    for (const auto& t : r.terms) sq += t.coeff.squaredNorm();
    const double nrm = std::sqrt(sq);
    f.row_scale(i) = nrm > 0.0 ? 1.0 / nrm : 1.0;
  }
  for (int i = 0; i < f.m; ++i) {
    const auto& r = p.rows[i];
    const double s = f.row_scale(i);
    for (const auto& t : r.terms) f.by_block[t.block].push_back({i, s * t.coeff});
    if (r.relation != Relation::Equal) {
      const double coeff = r.relation == Relation::GreaterEqual ? -1.0 : 1.0;
      f.lp_by_var.push_back({{i, s * coeff}});
    }
    f.b(i) = s * r.rhs;
  }
  f.n_lp = static_cast<int>(f.lp_by_var.size());
  f.c_lp = RVec::Zero(f.n_lp);

  // Merge duplicate (row, block) terms.
  for (auto& terms : f.by_block) {
    std::sort(terms.begin(), terms.end(), [](const BlockTerm& a, const BlockTerm& b) { return a.row < b.row; });
    std::vector<BlockTerm> merged;
    for (auto& t : terms) {
      if (!merged.empty() && merged.back().row == t.row)
        merged.back().coeff += t.coeff;
      else
        merged.push_back(std::move(t));
    }
    terms = std::move(merged);
  }

  double c_norm = 0.0;
  for (const auto& cb : f.c) c_norm += cb.squaredNorm();
  c_norm = std::sqrt(c_norm);
  f.c_scale = std::max(1.0, c_norm);
  for (auto& cb : f.c) cb /= f.c_scale;

  f.x_scale = std::max(1.0, f.b.cwiseAbs().maxCoeff() * (f.m > 0 ? 1.0 : 0.0));
  if (f.m > 0) f.b /= f.x_scale;

  f.total_dim = f.n_lp;
  for (int d : f.dims) f.total_dim += d;
  return f;
}

struct Iterate {
  std::vector<RMat> x;
  RVec x_lp;
  RVec y;
  std::vector<RMat> z;
  RVec z_lp;
};

RVec apply_a(const StandardForm& f, const std::vector<RMat>& x, const RVec& x_lp) {
  RVec out = RVec::Zero(f.m);
  for (std::size_t b = 0; b < f.dims.size(); ++b)
    for (const auto& t : f.by_block[b]) out(t.row) += t.coeff.cwiseProduct(x[b]).sum();
  for (int v = 0; v < f.n_lp; ++v)
    for (const auto& [row, a] : f.lp_by_var[v]) out(row) += a * x_lp(v);
  return out;
}

void apply_at(const StandardForm& f, const RVec& y, std::vector<RMat>& s, RVec& s_lp) {
  s.resize(f.dims.size());
  for (std::size_t b = 0; b < f.dims.size(); ++b) {
    s[b] = RMat::Zero(f.dims[b], f.dims[b]);
    for (const auto& t : f.by_block[b]) s[b] += y(t.row) * t.coeff;
  }
  s_lp = RVec::Zero(f.n_lp);
  for (int v = 0; v < f.n_lp; ++v)
    for (const auto& [row, a] : f.lp_by_var[v]) s_lp(v) += a * y(row);
}

double inner(const std::vector<RMat>& a, const std::vector<RMat>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].cwiseProduct(b[i]).sum();
  return s;
}

double frob(const std::vector<RMat>& a, const RVec& a_lp) {
  double s = a_lp.squaredNorm();
  for (const auto& m : a) s += m.squaredNorm();
  return std::sqrt(s);
}

// Largest alpha with X + alpha D >= 0 (infinity if unbounded), or -1 if X is
// not numerically positive definite.
double max_step(const RMat& x, const RMat& d) {
  if (x.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::LLT<RMat> llt(x);
  if (llt.info() != Eigen::Success) return -1.0;
  const auto l = llt.matrixL();
  RMat tmp = l.solve(d);
  RMat m = l.solve(tmp.transpose()).transpose();
  m = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<RMat> es(m, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

double max_step_lp(const RVec& x, const RVec& d) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (d(i) < 0.0) a = std::min(a, -x(i) / d(i));
  return a;
}

struct Direction {
  std::vector<RMat> dx;
  RVec dx_lp;
  RVec dy;
  std::vector<RMat> dz;
  RVec dz_lp;
};

}  // namespace

RealSolution InteriorPointBackend::solve(const RealSDP& p, const SolverOptions& opts) const {
  const StandardForm f = build_standard_form(p);
  const int nb = static_cast<int>(f.dims.size());
  const int m = f.m;
  const double n = std::max(1, f.total_dim);
  const double target = 0.1 * opts.tol;
  const double infeas_tol = 1e-9;

  // Initial point.
  double max_a = 0.0;
  double xi = std::max(10.0, std::sqrt(n));
  {
    std::vector<double> row_norm(m, 0.0);
    for (int b = 0; b < nb; ++b)
      for (const auto& t : f.by_block[b]) row_norm[t.row] += t.coeff.squaredNorm();
    for (int v = 0; v < f.n_lp; ++v)
      for (const auto& [row, a] : f.lp_by_var[v]) row_norm[row] += a * a;
    for (int i = 0; i < m; ++i) {
      const double an = std::sqrt(row_norm[i]);
      max_a = std::max(max_a, an);
      xi = std::max(xi, std::sqrt(n) * (1.0 + std::abs(f.b(i))) / (1.0 + an));
    }
  }
  double c_norm = 0.0;
  for (const auto& cb : f.c) c_norm += cb.squaredNorm();
  c_norm = std::sqrt(c_norm + f.c_lp.squaredNorm());
  const double eta = std::max({10.0, std::sqrt(n), max_a, c_norm});

  Iterate it;
  for (int d : f.dims) {
    it.x.push_back(xi * RMat::Identity(d, d));
    it.z.push_back(eta * RMat::Identity(d, d));
  }
  it.x_lp = RVec::Constant(f.n_lp, xi);
  it.z_lp = RVec::Constant(f.n_lp, eta);
  it.y = RVec::Zero(m);

  const double b_norm = f.b.norm();

  RealSolution out;
  Iterate best = it;
  double best_score = std::numeric_limits<double>::infinity();
  double best_p = 0, best_d = 0, best_g = 0;
  std::string message = "iteration limit reached";
  SolveStatus status = SolveStatus::NumericalFailure;
  int stall = 0;

  int iter = 0;
  for (; iter <= opts.max_iterations; ++iter) {
    // Residuals.
    const RVec rp = f.b - apply_a(f, it.x, it.x_lp);
    std::vector<RMat> aty;
    RVec aty_lp;
    apply_at(f, it.y, aty, aty_lp);
    std::vector<RMat> rd(nb);
    for (int b = 0; b < nb; ++b) rd[b] = f.c[b] - it.z[b] - aty[b];
    const RVec rd_lp = f.c_lp - it.z_lp - aty_lp;

    const double pobj = inner(f.c, it.x) + f.c_lp.dot(it.x_lp);
    const double dobj = f.b.dot(it.y);
    const double relp = rp.norm() / (1.0 + b_norm);
    const double reld = frob(rd, rd_lp) / (1.0 + c_norm);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double xz = inner(it.x, it.z) + it.x_lp.dot(it.z_lp);
    const double mu = xz / n;

    if (opts.verbose)
      std::cerr << "ipm " << iter << " pobj=" << pobj << " dobj=" << dobj << " relp=" << relp
                << " reld=" << reld << " gap=" << gap << " mu=" << mu << "\n";

    const double score = std::max({relp, reld, gap});
    if (score < best_score) {
      best_score = score;
      best = it;
      best_p = relp;
      best_d = reld;
      best_g = gap;
    }
    if (relp <= target && reld <= target && gap <= target) {
      status = SolveStatus::Optimal;
      message = "converged";
      break;
    }

    // Farkas certificate of primal infeasibility: b^T y > 0, A^* y <= 0.
    if (m > 0 && dobj > 0.0 && relp > target) {
      const RVec yn = it.y / dobj;
      std::vector<RMat> s;
      RVec s_lp;
      apply_at(f, yn, s, s_lp);
      const double tol = infeas_tol * std::max(1.0, yn.cwiseAbs().sum());
      bool certificate = s_lp.size() == 0 || s_lp.maxCoeff() <= tol;
      for (int b = 0; b < nb && certificate; ++b) {
        const RMat shifted = tol * RMat::Identity(f.dims[b], f.dims[b]) - s[b];
        Eigen::LLT<RMat> llt(shifted);
        certificate = llt.info() == Eigen::Success;
      }
      if (certificate) {
        status = SolveStatus::Infeasible;
        message = "primal infeasible (Farkas certificate)";
        out.farkas = RVec(m);
        for (int i = 0; i < m; ++i) out.farkas(i) = yn(i) * f.row_scale(i);
        break;
      }
    }

    if (iter == opts.max_iterations) break;

    // Z^{-1} per block.
    std::vector<RMat> zinv(nb);
    bool z_ok = true;
    for (int b = 0; b < nb; ++b) {
      Eigen::LLT<RMat> llt(it.z[b]);
      if (llt.info() != Eigen::Success) {
        z_ok = false;
        break;
      }
      zinv[b] = llt.solve(RMat::Identity(f.dims[b], f.dims[b]));
      zinv[b] = 0.5 * (zinv[b] + zinv[b].transpose());
    }
    if (!z_ok) {
      message = "dual slack lost positive definiteness";
      break;
    }

    // Schur complement M_ij = tr(A_i Z^-1 A_j X) + sum a_i a_j x / z.
    RMat schur = RMat::Zero(m, m);
    for (int b = 0; b < nb; ++b) {
      const auto& terms = f.by_block[b];
      for (std::size_t ti = 0; ti < terms.size(); ++ti) {
        const RMat pm = zinv[b] * terms[ti].coeff * it.x[b];
        for (std::size_t tj = ti; tj < terms.size(); ++tj) {
          const double v = terms[tj].coeff.cwiseProduct(pm).sum();
          schur(terms[ti].row, terms[tj].row) += v;
          if (tj != ti) schur(terms[tj].row, terms[ti].row) += v;
        }
      }
    }
    const RVec lp_ratio = it.x_lp.cwiseQuotient(it.z_lp);
    for (int v = 0; v < f.n_lp; ++v)
      for (const auto& [ri, ai] : f.lp_by_var[v])
        for (const auto& [rj, aj] : f.lp_by_var[v]) schur(ri, rj) += ai * aj * lp_ratio(v);
    schur = 0.5 * (schur + schur.transpose());

    Eigen::LLT<RMat> schur_llt(schur);
    Eigen::FullPivLU<RMat> schur_lu;
    const bool use_llt = schur_llt.info() == Eigen::Success;
    if (!use_llt) schur_lu.compute(schur);

    auto solve_schur = [&](const RVec& rhs) -> RVec {
      if (m == 0) return RVec();
      return use_llt ? RVec(schur_llt.solve(rhs)) : RVec(schur_lu.solve(rhs));
    };

    // Search direction for a target T (block) / t (lp):
    //   dX = T - Z^-1 dZ X (symmetrized), dZ = Rd - A^* dy.
    auto direction = [&](const std::vector<RMat>& t, const RVec& t_lp) {
      Direction d;
      RVec rhs = rp;
      for (int b = 0; b < nb; ++b) {
        const RMat q = t[b] - zinv[b] * rd[b] * it.x[b];
        for (const auto& term : f.by_block[b]) rhs(term.row) -= term.coeff.cwiseProduct(q).sum();
      }
      for (int v = 0; v < f.n_lp; ++v) {
        const double q = t_lp(v) - lp_ratio(v) * rd_lp(v);
        for (const auto& [row, a] : f.lp_by_var[v]) rhs(row) -= a * q;
      }
      d.dy = solve_schur(rhs);
      if (m == 0) d.dy = RVec::Zero(0);
      std::vector<RMat> atdy;
      RVec atdy_lp;
      apply_at(f, d.dy, atdy, atdy_lp);
      d.dz.resize(nb);
      d.dx.resize(nb);
      for (int b = 0; b < nb; ++b) {
        d.dz[b] = rd[b] - atdy[b];
        RMat dx = t[b] - zinv[b] * d.dz[b] * it.x[b];
        d.dx[b] = 0.5 * (dx + dx.transpose());
      }
      d.dz_lp = rd_lp - atdy_lp;
      d.dx_lp = t_lp - lp_ratio.cwiseProduct(d.dz_lp);
      return d;
    };

    auto step_lengths = [&](const Direction& d, double& ap, double& ad) {
      ap = max_step_lp(it.x_lp, d.dx_lp);
      ad = max_step_lp(it.z_lp, d.dz_lp);
      for (int b = 0; b < nb; ++b) {
        const double sx = max_step(it.x[b], d.dx[b]);
        const double sz = max_step(it.z[b], d.dz[b]);
        ap = std::min(ap, sx < 0 ? 0.0 : sx);
        ad = std::min(ad, sz < 0 ? 0.0 : sz);
      }
    };

    // Predictor.
    std::vector<RMat> t_aff(nb);
    for (int b = 0; b < nb; ++b) t_aff[b] = -it.x[b];
    const RVec t_aff_lp = -it.x_lp;
    const Direction aff = direction(t_aff, t_aff_lp);
    double ap_aff = 0.0, ad_aff = 0.0;
    step_lengths(aff, ap_aff, ad_aff);
    ap_aff = std::min(1.0, ap_aff);
    ad_aff = std::min(1.0, ad_aff);

    double mu_aff = 0.0;
    for (int b = 0; b < nb; ++b)
      mu_aff += (it.x[b] + ap_aff * aff.dx[b]).cwiseProduct(it.z[b] + ad_aff * aff.dz[b]).sum();
    mu_aff += (it.x_lp + ap_aff * aff.dx_lp).dot(it.z_lp + ad_aff * aff.dz_lp);
    mu_aff /= n;
    double sigma = mu > 0.0 ? std::pow(std::max(mu_aff, 0.0) / mu, 3.0) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);
    // Keep some centering while far from feasibility.
    if (std::max(relp, reld) > 1e-2) sigma = std::max(sigma, 0.1);

    // Corrector.
    std::vector<RMat> t_cor(nb);
    for (int b = 0; b < nb; ++b)
      t_cor[b] = sigma * mu * zinv[b] - it.x[b] - zinv[b] * aff.dz[b] * aff.dx[b];
    RVec t_cor_lp(f.n_lp);
    for (int v = 0; v < f.n_lp; ++v)
      t_cor_lp(v) = sigma * mu / it.z_lp(v) - it.x_lp(v) - aff.dx_lp(v) * aff.dz_lp(v) / it.z_lp(v);
    const Direction dir = direction(t_cor, t_cor_lp);

    double ap = 0.0, ad = 0.0;
    step_lengths(dir, ap, ad);
    const double gamma = 0.9 + 0.09 * std::min(ap_aff, ad_aff);
    ap = std::min(1.0, gamma * ap);
    ad = std::min(1.0, gamma * ad);

    if (ap < 1e-10 && ad < 1e-10) {
      if (++stall >= 3) {
        message = "step length collapsed";
        break;
      }
    } else {
      stall = 0;
    }

    for (int b = 0; b < nb; ++b) {
      it.x[b] += ap * dir.dx[b];
      it.z[b] += ad * dir.dz[b];
      it.x[b] = 0.5 * (it.x[b] + it.x[b].transpose());
      it.z[b] = 0.5 * (it.z[b] + it.z[b].transpose());
    }
    it.x_lp += ap * dir.dx_lp;
    it.z_lp += ad * dir.dz_lp;
    it.y += ad * dir.dy;

    if (!it.x_lp.allFinite() || !it.y.allFinite()) {
      message = "non-finite iterate";
      break;
    }
  }

  const Iterate& fin = status == SolveStatus::NumericalFailure ? best : it;
  out.status = status;
  out.iterations = iter;
  out.message = message;
  if (status != SolveStatus::Infeasible) {
    out.x.resize(nb);
    for (int b = 0; b < nb; ++b) out.x[b] = f.x_scale * fin.x[b];
    out.y = RVec(m);
    for (int i = 0; i < m; ++i) out.y(i) = f.c_scale * f.row_scale(i) * fin.y(i);
    double pobj = 0.0;
    for (const auto& t : p.objective) pobj += t.coeff.cwiseProduct(out.x[t.block]).sum();
    out.primal_objective = pobj;
    double dobj = 0.0;
    for (int i = 0; i < m; ++i) dobj += p.rows[i].rhs * out.y(i);
    out.dual_objective = p.sense == Sense::Minimize ? dobj : -dobj;
  }
  if (status == SolveStatus::Optimal) {
    std::ostringstream s;
    s << "converged";
    out.message = s.str();
  }
  out.primal_residual = status == SolveStatus::NumericalFailure ? best_p : 0.0;
  out.dual_residual = status == SolveStatus::NumericalFailure ? best_d : 0.0;
  out.gap = status == SolveStatus::NumericalFailure ? best_g : 0.0;
  if (status == SolveStatus::NumericalFailure) {
    std::ostringstream s;
    s << message << " (best relp=" << best_p << " reld=" << best_d << " gap=" << best_g << ")";
    out.message = s.str();
  }
  return out;
}

const SdpBackend& default_backend() {
  static const InteriorPointBackend backend;
  return backend;
}

}  // namespace risisac
