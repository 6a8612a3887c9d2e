#pragma once

#include <string_view>

#include <Eigen/Dense>

#include "fastcca/matrix.hpp"

namespace fastcca {

enum class CcaMethod { exact, srht, countsketch, uniform };

std::string_view to_string(CcaMethod method);

/// Canonical correlations and weights of a pair (A, B).
///
/// Column i of A * weights_a and of B * weights_b are the i-th pair of
/// canonical vectors. For the exact method they are unit norm; for sketched
/// methods they are only approximately so on the original pair.
struct CcaResult {
  Eigen::VectorXd correlations;  // nonincreasing
  Eigen::MatrixXd weights_a;     // n x q
  Eigen::MatrixXd weights_b;     // l x q
  Index rank_a = 0;
  Index rank_b = 0;
  CcaMethod method = CcaMethod::exact;

  Index size() const noexcept { return correlations.size(); }
};

/// How the orthonormal bases of range(A), range(B) are obtained.
enum class BasisMethod { svd, qr };

struct ExactOptions {
  RankTol rank_tol;
  BasisMethod basis = BasisMethod::svd;
};

/// Bjorck-Golub: canonical correlations are the singular values of Q_A^T Q_B
/// for orthonormal bases Q_A, Q_B of the two ranges.
CcaResult exact_cca(const DenseMatrix& a, const DenseMatrix& b, const ExactOptions& options = {});

/// Brute-force evaluation of the recursive max-correlation definition for
/// tiny pairs (at most 3 columns per side). Each level maximizes
/// |<Ax, By>| / (|Ax| |By|) over directions orthogonal (in the A and B
/// geometry) to the previous maximizers, by a grid over the unit sphere
/// followed by compass refinement. Accurate to about 10 / grid.
Eigen::VectorXd cca_definition_oracle(const DenseMatrix& a, const DenseMatrix& b, Index grid = 3600);

/// Squared row norms of an orthonormal basis of range(X).
Eigen::VectorXd leverage_scores(const DenseMatrix& x, RankTol rank_tol = std::nullopt);

/// max_i |e_i^T U_X|^2, which lies in [rank(X)/m, 1].
double coherence(const DenseMatrix& x, RankTol rank_tol = std::nullopt);

struct ConcatCoherence {
  double mu = 0.0;
  Index omega = 0;  // rank([A ; B])
};

ConcatCoherence concat_coherence(const DenseMatrix& a, const DenseMatrix& b, RankTol rank_tol = std::nullopt);

/// sigma(u, v) = |u^T v| / (|u| |v|); zero when either vector is zero.
double vector_correlation(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

}  // namespace fastcca
