#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fastcca/error.hpp"

namespace fastcca {

using Index = Eigen::Index;

/// Column-major real matrix with finite entries.
///
/// Construction validates finiteness; afterwards the value is immutable. The
/// underlying Eigen storage is exposed read-only for the numerical kernels.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(Index rows, Index cols);
  explicit DenseMatrix(Eigen::MatrixXd values);

  static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  bool empty() const noexcept { return values_.size() == 0; }
  double operator()(Index i, Index j) const { return values_(i, j); }

  const Eigen::MatrixXd& values() const noexcept { return values_; }
  std::span<const double> data() const noexcept {
    return {values_.data(), static_cast<std::size_t>(values_.size())};
  }

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a.values_ == b.values_;
  }

 private:
  Eigen::MatrixXd values_;
};

/// Row-compressed sparse matrix. Column indices are strictly increasing within
/// each row and every stored value is nonzero.
class SparseMatrix {
 public:
  struct Triplet {
    Index row;
    Index col;
    double value;
  };

  SparseMatrix() = default;
  SparseMatrix(Index rows, Index cols, std::vector<std::int64_t> row_ptr,
               std::vector<std::int64_t> col_idx, std::vector<double> values);

  /// Duplicate coordinates are summed; entries that end up zero are dropped.
  static SparseMatrix from_triplets(Index rows, Index cols, std::vector<Triplet> triplets);
  static SparseMatrix from_dense(const DenseMatrix& dense);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::int64_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::int64_t> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  DenseMatrix to_dense() const;

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<std::int64_t> row_ptr_{0};
  std::vector<std::int64_t> col_idx_;
  std::vector<double> values_;
};

/// Compact SVD X = U diag(s) V^T truncated at the numerical rank.
struct ThinSvd {
  Eigen::MatrixXd U;
  Eigen::VectorXd singular_values;
  Eigen::MatrixXd V;

  Index rank() const noexcept { return singular_values.size(); }
};

/// Relative rank tolerance: singular values <= tol * sigma_1 are discarded.
/// When unset, eps * max(m, n) is used.
using RankTol = std::optional<double>;

double default_rank_tol(Index rows, Index cols);

ThinSvd thin_svd(const DenseMatrix& x, RankTol rank_tol = std::nullopt);
ThinSvd thin_svd(const Eigen::MatrixXd& x, RankTol rank_tol = std::nullopt);

DenseMatrix pseudo_inverse(const DenseMatrix& x, RankTol rank_tol = std::nullopt);

Index numerical_rank(const Eigen::MatrixXd& x, RankTol rank_tol = std::nullopt);

/// sigma_1(X); zero for the zero matrix.
double spectral_norm(const Eigen::MatrixXd& x);

/// sigma_max / sigma_min over all min(m, n) singular values (infinity when
/// rank deficient).
double condition_number(const Eigen::MatrixXd& x);

/// Column concatenation [A ; B].
DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace fastcca
