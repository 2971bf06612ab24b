#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "risisac/types.hpp"

namespace risisac {

enum class Relation { GreaterEqual, Equal, LessEqual };
enum class Sense { Minimize, Maximize };

/// Complex Hermitian semidefinite program over a list of PSD matrix variables:
///
///   min/max  sum_i tr(C_i X_i)
///   s.t.     sum_i tr(A_ci X_i)  (>= | = | <=)  b_c
///            X_i fixed entries
///            X_i >= 0
///
/// All data matrices must be Hermitian. Fixed entries are lowered to equality
/// rows by `expanded_constraints`.
struct HermitianSDP {
  struct Variable {
    std::string name;
    int dim = 0;
  };
  struct Term {
    int var = 0;
    CMat coeff;
  };
  struct Constraint {
    std::vector<Term> terms;
    Relation relation = Relation::GreaterEqual;
    double rhs = 0.0;
    std::string label;
  };
  struct FixedEntry {
    int var = 0;
    int row = 0;
    int col = 0;
    cd value;
  };

  Sense sense = Sense::Minimize;
  std::vector<Variable> variables;
  std::vector<Term> objective;
  std::vector<Constraint> constraints;
  std::vector<FixedEntry> fixed_entries;

  int add_variable(std::string name, int dim);
  void add_objective_term(int var, CMat coeff);
  int add_constraint(Constraint c);
  void pin_diagonal(int var, double value);
  void fix_entry(int var, int row, int col, cd value);

  /// User constraints followed by one equality row per real degree of freedom
  /// of each fixed entry (one for diagonal pins, two for off-diagonal ones).
  std::vector<Constraint> expanded_constraints() const;

  /// Throws std::invalid_argument when dimensions disagree, data is not
  /// Hermitian within `hermitian_tol` (relative), or rhs is not finite.
  void validate(double hermitian_tol = 1e-12) const;

  double objective_value(const std::vector<CMat>& x) const;
  static double constraint_value(const Constraint& c, const std::vector<CMat>& x);
};

/// Real symmetric SDP over block-diagonal variables; produced by embed_real.
struct RealSDP {
  struct Term {
    int block = 0;
    RMat coeff;
  };
  struct Row {
    std::vector<Term> terms;
    Relation relation = Relation::GreaterEqual;
    double rhs = 0.0;
  };

  Sense sense = Sense::Minimize;
  std::vector<int> block_dims;
  std::vector<Term> objective;
  std::vector<Row> rows;
};

/// X -> [[Re X, -Im X], [Im X, Re X]].
RMat embed_hermitian(const CMat& x);
/// Inverse of embed_hermitian; averages the two copies of each block.
CMat unembed_symmetric(const RMat& y);

/// Lowers the Hermitian problem (including fixed entries) to a real symmetric
/// one. Traces double under the embedding, so every right-hand side is
/// doubled; the real objective is twice the complex one.
RealSDP embed_real(const HermitianSDP& p);

enum class SolveStatus { Optimal, Infeasible, NumericalFailure };
std::string to_string(SolveStatus s);

struct SolverOptions {
  double tol = 1e-8;
  int max_iterations = 120;
  bool verbose = false;
};

struct RealSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<RMat> x;
  RVec y;
  RVec farkas;  ///< set when status == Infeasible
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  std::string message;
};

/// Pluggable backend behind solve_sdp. Whatever it reports is re-certified on
/// the complex problem before being trusted.
class SdpBackend {
 public:
  virtual ~SdpBackend() = default;
  virtual std::string name() const = 0;
  virtual RealSolution solve(const RealSDP& p, const SolverOptions& opts) const = 0;
};

/// Infeasible-start primal-dual path-following method, HKM search direction
/// with Mehrotra predictor-corrector. Inequality rows get nonnegative slacks.
class InteriorPointBackend final : public SdpBackend {
 public:
  std::string name() const override { return "interior-point-hkm"; }
  RealSolution solve(const RealSDP& p, const SolverOptions& opts) const override;
};

const SdpBackend& default_backend();

struct KktResiduals {
  double primal_feasibility = 0.0;
  double dual_feasibility = 0.0;
  double complementarity = 0.0;
  double psd_violation = 0.0;

  double max() const;
};

struct SDPSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<CMat> x;
  double objective = 0.0;
  /// value - rhs for >= rows, rhs - value for <= rows, value - rhs for
  /// equalities; one per expanded constraint.
  std::vector<double> slacks;
  std::vector<double> duals;  ///< one per expanded constraint (min-form sign)
  std::vector<double> farkas;
  KktResiduals kkt;
  int iterations = 0;
  std::string diagnostic;
};

/// Relative KKT residuals of (x, y) for the complex problem in min form.
KktResiduals certify(const HermitianSDP& p, const std::vector<CMat>& x,
                     const std::vector<double>& y);

/// True when y proves infeasibility: b^T y > 0, sign-feasible for the row
/// relations and sum_c y_c A_c <= tol * (b^T y) in the PSD order.
bool certify_infeasible(const HermitianSDP& p, const std::vector<double>& y, double tol);

SDPSolution solve_sdp(const HermitianSDP& p, const SolverOptions& opts = {},
                      const SdpBackend& backend = default_backend());

/// (X + X^H) / 2; throws std::invalid_argument if the anti-Hermitian part
/// exceeds `reject_rel` relative to ||X||_F.
CMat hermitian_part(const CMat& x, double reject_rel = 1e-10);

struct RankOneResult {
  bool rank_one = false;
  CVec vector;  ///< sqrt(lambda_1) nu_1, always filled
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double ratio = 0.0;  ///< lambda_2 / lambda_1 (0 for the zero matrix)
};

/// Principal-eigenvector extraction. Throws std::invalid_argument when X has
/// an eigenvalue below -psd_tol * max(1, lambda_1).
RankOneResult extract_rank_one(const CMat& x, double ratio_tol = 1e-4, double psd_tol = 1e-8);

/// SDPA sparse format (.dat-s) of the real problem in standard equality form
/// with inequality rows carried by a trailing diagonal (LP) block.
void write_sdpa(const RealSDP& p, std::ostream& out);

}  // namespace risisac
