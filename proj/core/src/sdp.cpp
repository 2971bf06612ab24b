#include "risisac/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace risisac {

int HermitianSDP::add_variable(std::string name, int dim) {
  if (dim < 1) throw std::invalid_argument("add_variable: dimension must be >= 1");
  variables.push_back({std::move(name), dim});
  return static_cast<int>(variables.size()) - 1;
}

void HermitianSDP::add_objective_term(int var, CMat coeff) {
  objective.push_back({var, std::move(coeff)});
}

int HermitianSDP::add_constraint(Constraint c) {
  constraints.push_back(std::move(c));
  return static_cast<int>(constraints.size()) - 1;
}

void HermitianSDP::pin_diagonal(int var, double value) {
  const int n = variables.at(var).dim;
  for (int i = 0; i < n; ++i) fixed_entries.push_back({var, i, i, cd(value, 0.0)});
}

void HermitianSDP::fix_entry(int var, int row, int col, cd value) {
  fixed_entries.push_back({var, row, col, value});
}

std::vector<HermitianSDP::Constraint> HermitianSDP::expanded_constraints() const {
  std::vector<Constraint> out = constraints;
  for (const auto& f : fixed_entries) {
    const int n = variables.at(f.var).dim;
    if (f.row == f.col) {
      CMat a = CMat::Zero(n, n);
      a(f.row, f.row) = 1.0;
      out.push_back({{{f.var, std::move(a)}}, Relation::Equal, f.value.real(),
                     variables[f.var].name + "[" + std::to_string(f.row) + "," +
                         std::to_string(f.col) + "]"});
      continue;
    }
    // tr(A X) = Re X_rc for A = (e_r e_c^H + e_c e_r^H) / 2,
    // tr(A X) = Im X_rc for A = (i e_r e_c^H - i e_c e_r^H) / 2.
    const std::string tag = variables[f.var].name + "[" + std::to_string(f.row) + "," +
                            std::to_string(f.col) + "]";
    CMat re = CMat::Zero(n, n);
    re(f.row, f.col) = 0.5;
    re(f.col, f.row) = 0.5;
    CMat im = CMat::Zero(n, n);
    im(f.row, f.col) = cd(0.0, 0.5);
    im(f.col, f.row) = cd(0.0, -0.5);
    out.push_back({{{f.var, std::move(re)}}, Relation::Equal, f.value.real(), tag + ".re"});
    out.push_back({{{f.var, std::move(im)}}, Relation::Equal, f.value.imag(), tag + ".im"});
  }
  return out;
}

namespace {

void check_hermitian(const CMat& a, int dim, double tol, const std::string& where) {
  if (a.rows() != dim || a.cols() != dim)
    throw std::invalid_argument(where + ": coefficient has wrong dimensions");
  if (!a.allFinite()) throw std::invalid_argument(where + ": non-finite coefficient");
  const double scale = std::max(1.0, a.norm());
  if ((a - a.adjoint()).norm() > tol * scale)
    throw std::invalid_argument(where + ": coefficient is not Hermitian");
}

double trace_product(const CMat& a, const CMat& x) {
  // Re tr(A X) for Hermitian A, X without forming the product.
  return (a.transpose().cwiseProduct(x)).sum().real();
}

}  // namespace

void HermitianSDP::validate(double hermitian_tol) const {
  const int nv = static_cast<int>(variables.size());
  auto check_var = [&](int var, const std::string& where) {
    if (var < 0 || var >= nv) throw std::invalid_argument(where + ": unknown variable index");
  };
  for (const auto& t : objective) {
    check_var(t.var, "objective");
    check_hermitian(t.coeff, variables[t.var].dim, hermitian_tol, "objective");
  }
  for (std::size_t c = 0; c < constraints.size(); ++c) {
    const auto where = "constraint " + std::to_string(c) + " (" + constraints[c].label + ")";
    if (!std::isfinite(constraints[c].rhs)) throw std::invalid_argument(where + ": non-finite rhs");
    for (const auto& t : constraints[c].terms) {
      check_var(t.var, where);
      check_hermitian(t.coeff, variables[t.var].dim, hermitian_tol, where);
    }
  }
  for (const auto& f : fixed_entries) {
    check_var(f.var, "fixed entry");
    const int n = variables[f.var].dim;
    if (f.row < 0 || f.col < 0 || f.row >= n || f.col >= n)
      throw std::invalid_argument("fixed entry: index out of range");
    if (f.row == f.col && f.value.imag() != 0.0)
      throw std::invalid_argument("fixed entry: diagonal values must be real");
  }
}

double HermitianSDP::objective_value(const std::vector<CMat>& x) const {
  double v = 0.0;
  for (const auto& t : objective) v += trace_product(t.coeff, x.at(t.var));
  return v;
}

double HermitianSDP::constraint_value(const Constraint& c, const std::vector<CMat>& x) {
  double v = 0.0;
  for (const auto& t : c.terms) v += trace_product(t.coeff, x.at(t.var));
  return v;
}

RMat embed_hermitian(const CMat& x) {
  const Eigen::Index n = x.rows();
  RMat out(2 * n, 2 * n);
  out.topLeftCorner(n, n) = x.real();
  out.topRightCorner(n, n) = -x.imag();
  out.bottomLeftCorner(n, n) = x.imag();
  out.bottomRightCorner(n, n) = x.real();
  return out;
}

CMat unembed_symmetric(const RMat& y) {
  const Eigen::Index n = y.rows() / 2;
  const RMat re = 0.5 * (y.topLeftCorner(n, n) + y.bottomRightCorner(n, n));
  const RMat im = 0.5 * (y.bottomLeftCorner(n, n) - y.topRightCorner(n, n));
  CMat out(n, n);
  out.real() = re;
  out.imag() = im;
  return out;
}

RealSDP embed_real(const HermitianSDP& p) {
  p.validate();
  RealSDP out;
  out.sense = p.sense;
  for (const auto& v : p.variables) out.block_dims.push_back(2 * v.dim);
  for (const auto& t : p.objective) out.objective.push_back({t.var, embed_hermitian(t.coeff)});
  for (const auto& c : p.expanded_constraints()) {
    RealSDP::Row row;
    row.relation = c.relation;
    row.rhs = 2.0 * c.rhs;
    for (const auto& t : c.terms) row.terms.push_back({t.var, embed_hermitian(t.coeff)});
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal:
      return "optimal";
    case SolveStatus::Infeasible:
      return "infeasible";
    case SolveStatus::NumericalFailure:
      return "numerical-failure";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max({primal_feasibility, dual_feasibility, complementarity, psd_violation});
}

namespace {

double min_eigenvalue(const CMat& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eigenvalue(const CMat& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(a.rows() - 1);
}

// Sum_c y_c A_c per variable block.
std::vector<CMat> adjoint_map(const HermitianSDP& p,
                              const std::vector<HermitianSDP::Constraint>& rows,
                              const std::vector<double>& y) {
  std::vector<CMat> out;
  for (const auto& v : p.variables) out.push_back(CMat::Zero(v.dim, v.dim));
  for (std::size_t c = 0; c < rows.size(); ++c)
    for (const auto& t : rows[c].terms) out[t.var] += y[c] * t.coeff;
  return out;
}

}  // namespace

KktResiduals certify(const HermitianSDP& p, const std::vector<CMat>& x, const std::vector<double>& y) {
  const auto rows = p.expanded_constraints();
  if (y.size() != rows.size()) throw std::invalid_argument("certify: dual vector has wrong size");
  const double sign = p.sense == Sense::Minimize ? 1.0 : -1.0;
  KktResiduals r;

  double dual_obj = 0.0;
  double y_inf = 0.0;
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const double val = HermitianSDP::constraint_value(rows[c], x);
    const double b = rows[c].rhs;
    double viol = 0.0;
    double sign_viol = 0.0;
    switch (rows[c].relation) {
      case Relation::GreaterEqual:
        viol = std::max(0.0, b - val);
        sign_viol = std::max(0.0, -y[c]);
        break;
      case Relation::LessEqual:
        viol = std::max(0.0, val - b);
        sign_viol = std::max(0.0, y[c]);
        break;
      case Relation::Equal:
        viol = std::abs(val - b);
        break;
    }
    r.primal_feasibility = std::max(r.primal_feasibility, viol / (1.0 + std::abs(b)));
    r.dual_feasibility = std::max(r.dual_feasibility, sign_viol);
    dual_obj += b * y[c];
    y_inf = std::max(y_inf, std::abs(y[c]));
  }
  r.dual_feasibility /= (1.0 + y_inf);

  std::vector<CMat> z = adjoint_map(p, rows, y);
  std::vector<double> c_norm(p.variables.size(), 0.0);
  for (auto& zi : z) zi = -zi;
  {
    std::vector<CMat> c_blocks;
    for (const auto& v : p.variables) c_blocks.push_back(CMat::Zero(v.dim, v.dim));
    for (const auto& t : p.objective) c_blocks[t.var] += sign * t.coeff;
    for (std::size_t i = 0; i < z.size(); ++i) {
      z[i] += c_blocks[i];
      c_norm[i] = c_blocks[i].norm();
    }
  }
  for (std::size_t i = 0; i < z.size(); ++i) {
    const CMat zh = 0.5 * (z[i] + z[i].adjoint());
    r.dual_feasibility =
        std::max(r.dual_feasibility, std::max(0.0, -min_eigenvalue(zh)) / (1.0 + c_norm[i]));
    const CMat xh = 0.5 * (x[i] + x[i].adjoint());
    r.psd_violation =
        std::max(r.psd_violation, std::max(0.0, -min_eigenvalue(xh)) / (1.0 + xh.norm()));
  }

  const double primal_obj = sign * p.objective_value(x);
  r.complementarity =
      std::abs(primal_obj - dual_obj) / (1.0 + std::abs(primal_obj) + std::abs(dual_obj));
  return r;
}

bool certify_infeasible(const HermitianSDP& p, const std::vector<double>& y, double tol) {
  const auto rows = p.expanded_constraints();
  if (y.size() != rows.size()) return false;
  double by = 0.0;
  double scale = 0.0;
  for (std::size_t c = 0; c < rows.size(); ++c) {
    by += rows[c].rhs * y[c];
    double a_norm = 0.0;
    for (const auto& t : rows[c].terms) a_norm += t.coeff.norm();
    scale += std::abs(y[c]) * a_norm;
  }
  if (!(by > 0.0)) return false;
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const double yn = y[c] / by;
    if (rows[c].relation == Relation::GreaterEqual && yn < -tol) return false;
    if (rows[c].relation == Relation::LessEqual && yn > tol) return false;
  }
  const auto s = adjoint_map(p, rows, y);
  for (const auto& si : s) {
    if (max_eigenvalue(0.5 * (si + si.adjoint())) > tol * std::max(by, scale)) return false;
  }
  return true;
}

SDPSolution solve_sdp(const HermitianSDP& p, const SolverOptions& opts, const SdpBackend& backend) {
  p.validate();
  const RealSDP real = embed_real(p);
  const RealSolution rs = backend.solve(real, opts);

  SDPSolution sol;
  sol.iterations = rs.iterations;
  const auto rows = p.expanded_constraints();

  if (rs.status == SolveStatus::Infeasible) {
    sol.farkas.assign(rs.farkas.data(), rs.farkas.data() + rs.farkas.size());
    if (certify_infeasible(p, sol.farkas, 1e-6)) {
      sol.status = SolveStatus::Infeasible;
      sol.diagnostic = backend.name() + ": infeasibility certificate verified";
    } else {
      sol.status = SolveStatus::NumericalFailure;
      sol.diagnostic = backend.name() + ": reported infeasible but the certificate did not verify";
    }
    return sol;
  }

  if (rs.x.size() != p.variables.size()) {
    sol.status = SolveStatus::NumericalFailure;
    sol.diagnostic = backend.name() + ": " + rs.message;
    return sol;
  }

  for (const auto& xr : rs.x) {
    CMat xc = unembed_symmetric(xr);
    sol.x.push_back(0.5 * (xc + xc.adjoint()));
  }
  sol.duals.assign(rs.y.data(), rs.y.data() + rs.y.size());
  sol.objective = p.objective_value(sol.x);
  for (const auto& c : rows) {
    const double val = HermitianSDP::constraint_value(c, sol.x);
    sol.slacks.push_back(c.relation == Relation::LessEqual ? c.rhs - val : val - c.rhs);
  }
  sol.kkt = certify(p, sol.x, sol.duals);

  std::ostringstream diag;
  diag << backend.name() << ": " << rs.message << " after " << rs.iterations
       << " iterations; kkt primal=" << sol.kkt.primal_feasibility
       << " dual=" << sol.kkt.dual_feasibility << " gap=" << sol.kkt.complementarity
       << " psd=" << sol.kkt.psd_violation;
  sol.diagnostic = diag.str();
  sol.status = sol.kkt.max() <= opts.tol ? SolveStatus::Optimal : SolveStatus::NumericalFailure;
  return sol;
}

CMat hermitian_part(const CMat& x, double reject_rel) {
  const CMat h = 0.5 * (x + x.adjoint());
  const double anti = (0.5 * (x - x.adjoint())).norm();
  if (anti > reject_rel * std::max(x.norm(), 1e-300) && anti > 0.0)
    throw std::invalid_argument("hermitian_part: matrix is not Hermitian within tolerance");
  return h;
}

RankOneResult extract_rank_one(const CMat& x, double ratio_tol, double psd_tol) {
  const CMat h = 0.5 * (x + x.adjoint());
  RankOneResult r;
  const Eigen::Index n = h.rows();
  if (n == 0) {
    r.rank_one = true;
    return r;
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(h);
  const auto& ev = es.eigenvalues();
  r.lambda1 = ev(n - 1);
  r.lambda2 = n > 1 ? ev(n - 2) : 0.0;
  if (ev(0) < -psd_tol * std::max(1.0, r.lambda1))
    throw std::invalid_argument("extract_rank_one: matrix is not positive semidefinite");
  if (r.lambda1 <= 0.0) {
    r.vector = CVec::Zero(n);
    r.ratio = 0.0;
    r.rank_one = true;
    return r;
  }
  r.ratio = std::max(r.lambda2, 0.0) / r.lambda1;
  r.vector = std::sqrt(r.lambda1) * es.eigenvectors().col(n - 1);
  r.rank_one = r.ratio <= ratio_tol;
  return r;
}

void write_sdpa(const RealSDP& p, std::ostream& out) {
  // SDPA dual form: max <F0, Y> s.t. <Fi, Y> = ci, Y >= 0; F0 = -C for min.
  int num_slacks = 0;
  std::vector<int> slack_index(p.rows.size(), -1);
  for (std::size_t i = 0; i < p.rows.size(); ++i)
    if (p.rows[i].relation != Relation::Equal) slack_index[i] = ++num_slacks;
  const int nblocks = static_cast<int>(p.block_dims.size()) + (num_slacks > 0 ? 1 : 0);
  const double obj_sign = p.sense == Sense::Minimize ? -1.0 : 1.0;

  out << std::setprecision(17);
  out << "\"risisac real-embedded SDP\"\n";
  out << p.rows.size() << "\n" << nblocks << "\n";
  for (int d : p.block_dims) out << d << " ";
  if (num_slacks > 0) out << -num_slacks;
  out << "\n";
  for (const auto& r : p.rows) out << r.rhs << " ";
  out << "\n";
  auto emit = [&](int mat, int block, const RMat& a, double scale) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = i; j < a.cols(); ++j)
        if (a(i, j) != 0.0)
          out << mat << " " << block + 1 << " " << i + 1 << " " << j + 1 << " " << scale * a(i, j)
              << "\n";
  };
  for (const auto& t : p.objective) emit(0, t.block, t.coeff, obj_sign);
  for (std::size_t i = 0; i < p.rows.size(); ++i) {
    for (const auto& t : p.rows[i].terms) emit(static_cast<int>(i) + 1, t.block, t.coeff, 1.0);
    if (slack_index[i] > 0) {
      const double s = p.rows[i].relation == Relation::GreaterEqual ? -1.0 : 1.0;
      out << i + 1 << " " << p.block_dims.size() + 1 << " " << slack_index[i] << " "
          << slack_index[i] << " " << s << "\n";
    }
  }
}

}  // namespace risisac
