#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

#include "fastcca/cca.hpp"
#include "fastcca/matrix.hpp"
#include "fastcca/transforms.hpp"

namespace fastcca {

enum class SizeMode { theory, practical };

std::string_view to_string(SizeMode mode);
std::optional<SizeMode> parse_size_mode(std::string_view name);

struct ApproxConfig {
  double epsilon = 0.25;
  double delta = 0.05;
  SketchKind transform = SketchKind::srht;
  SizeMode size_mode = SizeMode::practical;
  std::uint64_t seed = 0;
  std::optional<Index> r_override;
  RankTol rank_tol;
  Exec exec = Exec::parallel;

  /// epsilon in (0, 1/2) for srht/uniform, (0, 1/3) for countsketch; delta in (0, 1).
  void validate() const;
};

struct PhaseTimings {
  double sample_size = 0.0;  // includes the coherence computation on the uniform path
  double sketch = 0.0;
  double solve = 0.0;
  double diagnostics = 0.0;

  double solver_total() const noexcept { return sample_size + sketch + solve; }
};

struct ApproxDiagnostics {
  Index r_used = 0;
  /// sigma_i(A, B) - sigma_hat_i; filled by callers that know the exact answer.
  Eigen::VectorXd correlation_errors;
  Eigen::MatrixXd gram_a;  // W^T A^T A W
  Eigen::MatrixXd gram_b;  // P^T B^T B P
  double cond_aw = 0.0;
  double cond_bp = 0.0;
  /// Stored entries read while sketching (nnz(A) + nnz(B) on the sparse path).
  std::uint64_t entries_touched = 0;
  /// mu([A ; B]) and rank([A ; B]) when the uniform path derived r from them.
  std::optional<double> concat_coherence;
  std::optional<Index> concat_rank;
  PhaseTimings timings;
};

struct ApproxOutput {
  CcaResult result;
  ApproxDiagnostics diagnostics;
};

/// Non-owning reference to a dense or sparse input.
class MatrixRef {
 public:
  MatrixRef(const DenseMatrix& m) : ref_(&m) {}   // NOLINT(google-explicit-constructor)
  MatrixRef(const SparseMatrix& m) : ref_(&m) {}  // NOLINT(google-explicit-constructor)

  Index rows() const;
  Index cols() const;
  bool is_sparse() const noexcept { return std::holds_alternative<const SparseMatrix*>(ref_); }
  const DenseMatrix* dense() const noexcept;
  const SparseMatrix* sparse() const noexcept;
  DenseMatrix to_dense() const;

 private:
  std::variant<const DenseMatrix*, const SparseMatrix*> ref_;
};

/// r for the SRHT path. theory: 54 eps^-2 (sqrt(n+l) + sqrt(8 ln(12m/delta)))^2 ln(3(n+l)/delta);
/// practical: eps^-2 (sqrt(n+l) + sqrt(ln(m/delta)))^2 ln((n+l)/delta). Both rounded up and capped at m.
Index sample_size_srht(Index m, Index n, Index ell, double epsilon, double delta, SizeMode mode);

/// r for the CountSketch path: ceil(243 ((n+l)^2 + (n+l)) / (eps^2 delta)) capped at m.
Index sample_size_cw(Index n, Index ell, double epsilon, double delta, Index m);

/// r for plain uniform row sampling: ceil(54 eps^-2 m mu ln(12 omega / delta)) capped at m.
Index sample_size_uniform(Index m, double mu, Index omega, double epsilon, double delta);

/// Sketch both inputs with one shared operator and solve the sketched pair exactly.
ApproxOutput approx_cca(MatrixRef a, MatrixRef b, const ApproxConfig& config);

/// sigma_i(exact) - sigma_i(approx) over the common prefix.
Eigen::VectorXd signed_errors(const CcaResult& exact, const CcaResult& approx);

struct ClauseResult {
  bool pass = true;
  /// Smallest margin to the bound; negative means violated.
  double worst_slack = std::numeric_limits<double>::infinity();

  void record(double slack) {
    worst_slack = std::min(worst_slack, slack);
    pass = pass && slack >= 0.0;
  }
};

struct EtaReport {
  ClauseResult correlations;  // (a)
  ClauseResult orthonormal;   // (b), both sides
  ClauseResult directions;    // (c)
  bool all() const noexcept { return correlations.pass && orthonormal.pass && directions.pass; }
};

/// The three clauses of an eta-approximate CCA of (A, B).
EtaReport check_eta_approx(const CcaResult& exact, const CcaResult& approx, const DenseMatrix& a,
                           const DenseMatrix& b, double eta);

struct GuaranteeReport {
  ClauseResult correlations;  // |sigma_i - sigma_hat_i| <= eps + 2 eps^2 / 9
  ClauseResult orthonormal;   // norms in [1/(1+eps/3), 1/(1-eps/3)], cross terms <= eps/(3-eps)
  ClauseResult directions;    // two-sided bracket on sigma(A w_i, B p_i)
  /// Set when some lower bracket end exceeds the upper one; reported, not failed.
  bool bracket_inverted = false;
  bool all() const noexcept { return correlations.pass && orthonormal.pass && directions.pass; }
};

/// The explicit-constant bounds guaranteed for a sketch at accuracy epsilon.
GuaranteeReport check_guarantee(const CcaResult& exact, const CcaResult& approx, const DenseMatrix& a,
                                const DenseMatrix& b, double epsilon);

}  // namespace fastcca
