#include "fastcca/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace fastcca {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotPowerOfTwo: return "NotPowerOfTwo";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidSampleSize: return "InvalidSampleSize";
    case ErrorCode::RowCountMismatch: return "RowCountMismatch";
    case ErrorCode::RankZero: return "RankZero";
    case ErrorCode::RankCollapse: return "RankCollapse";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::InvalidAccuracy: return "InvalidAccuracy";
    case ErrorCode::HypothesisUnverifiable: return "HypothesisUnverifiable";
    case ErrorCode::DatasetNotFound: return "DatasetNotFound";
  }
  return "Unknown";
}

DenseMatrix::DenseMatrix(Index rows, Index cols) : values_(Eigen::MatrixXd::Zero(rows, cols)) {}

DenseMatrix::DenseMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (!values_.allFinite()) {
    throw Error(ErrorCode::NonFinite, "matrix contains NaN or Inf");
  }
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const auto m = static_cast<Index>(rows.size());
  const auto n = m == 0 ? Index{0} : static_cast<Index>(rows.begin()->size());
  Eigen::MatrixXd v(m, n);
  Index i = 0;
  for (const auto& row : rows) {
    if (static_cast<Index>(row.size()) != n) {
      throw Error(ErrorCode::DimensionMismatch, "ragged row initializer");
    }
    Index j = 0;
    for (double x : row) v(i, j++) = x;
    ++i;
  }
  return DenseMatrix(std::move(v));
}

SparseMatrix::SparseMatrix(Index rows, Index cols, std::vector<std::int64_t> row_ptr,
                           std::vector<std::int64_t> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (rows_ < 0 || cols_ < 0 || static_cast<Index>(row_ptr_.size()) != rows_ + 1 ||
      row_ptr_.front() != 0 || col_idx_.size() != values_.size() ||
      row_ptr_.back() != static_cast<std::int64_t>(values_.size())) {
    throw Error(ErrorCode::DimensionMismatch, "inconsistent CSR arrays");
  }
  for (Index i = 0; i < rows_; ++i) {
    if (row_ptr_[i + 1] < row_ptr_[i]) {
      throw Error(ErrorCode::DimensionMismatch, "row pointers must be nondecreasing");
    }
    for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (col_idx_[k] < 0 || col_idx_[k] >= cols_) {
        throw Error(ErrorCode::IndexOutOfRange, "column index out of range in row " + std::to_string(i));
      }
      if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1]) {
        throw Error(ErrorCode::DimensionMismatch, "column indices must increase within row " + std::to_string(i));
      }
      if (!std::isfinite(values_[k])) throw Error(ErrorCode::NonFinite, "sparse value is NaN or Inf");
      if (values_[k] == 0.0) throw Error(ErrorCode::DimensionMismatch, "explicit zero stored");
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw Error(ErrorCode::IndexOutOfRange, "triplet (" + std::to_string(t.row) + ", " +
                                                  std::to_string(t.col) + ") outside matrix");
    }
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::int64_t> row_ptr(static_cast<std::size_t>(rows) + 1, 0);
  std::vector<std::int64_t> col_idx;
  std::vector<double> values;
  col_idx.reserve(triplets.size());
  values.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size();) {
    const auto& t = triplets[k];
    double sum = 0.0;
    std::size_t e = k;
    while (e < triplets.size() && triplets[e].row == t.row && triplets[e].col == t.col) {
      sum += triplets[e].value;
      ++e;
    }
    if (sum != 0.0) {
      col_idx.push_back(t.col);
      values.push_back(sum);
      ++row_ptr[t.row + 1];
    }
    k = e;
  }
  for (Index i = 0; i < rows; ++i) row_ptr[i + 1] += row_ptr[i];
  return SparseMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& dense) {
  const auto& v = dense.values();
  std::vector<std::int64_t> row_ptr(static_cast<std::size_t>(v.rows()) + 1, 0);
  std::vector<std::int64_t> col_idx;
  std::vector<double> values;
  for (Index i = 0; i < v.rows(); ++i) {
    for (Index j = 0; j < v.cols(); ++j) {
      if (v(i, j) != 0.0) {
        col_idx.push_back(j);
        values.push_back(v(i, j));
      }
    }
    row_ptr[i + 1] = static_cast<std::int64_t>(values.size());
  }
  return SparseMatrix(v.rows(), v.cols(), std::move(row_ptr), std::move(col_idx), std::move(values));
}

DenseMatrix SparseMatrix::to_dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows_, cols_);
  for (Index i = 0; i < rows_; ++i) {
    for (auto k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) out(i, col_idx_[k]) = values_[k];
  }
  return DenseMatrix(std::move(out));
}

double default_rank_tol(Index rows, Index cols) {
  return std::numeric_limits<double>::epsilon() * static_cast<double>(std::max(rows, cols));
}

namespace {

void check_factorizable(const Eigen::MatrixXd& x) {
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::EmptyMatrix, "matrix has a zero dimension");
  if (!x.allFinite()) throw Error(ErrorCode::NonFinite, "matrix contains NaN or Inf");
}

// Full set of min(m, n) singular triplets of a matrix with m >= n. Tall inputs
// are reduced by Householder QR first so that the Jacobi sweeps only see the
// n x n triangular factor.
void svd_tall(const Eigen::MatrixXd& x, Eigen::MatrixXd& u, Eigen::VectorXd& s, Eigen::MatrixXd& v) {
  const Index m = x.rows();
  const Index n = x.cols();
  if (m > n) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    u = Eigen::MatrixXd::Zero(m, n);
    u.topRows(n) = svd.matrixU();
    u.applyOnTheLeft(qr.householderQ());
    s = svd.singularValues();
    v = svd.matrixV();
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
    u = svd.matrixU();
    s = svd.singularValues();
    v = svd.matrixV();
  }
}

}  // namespace

ThinSvd thin_svd(const Eigen::MatrixXd& x, RankTol rank_tol) {
  check_factorizable(x);
  const double tol = rank_tol.value_or(default_rank_tol(x.rows(), x.cols()));
  if (tol < 0.0) throw Error(ErrorCode::InvalidAccuracy, "rank tolerance must be nonnegative");

  Eigen::MatrixXd u, v;
  Eigen::VectorXd s;
  if (x.rows() >= x.cols()) {
    svd_tall(x, u, s, v);
  } else {
    svd_tall(x.transpose(), v, s, u);
  }

  Index p = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    const double cutoff = tol * s(0);
    while (p < s.size() && s(p) > cutoff) ++p;
  }
  return ThinSvd{u.leftCols(p), s.head(p), v.leftCols(p)};
}

ThinSvd thin_svd(const DenseMatrix& x, RankTol rank_tol) { return thin_svd(x.values(), rank_tol); }

DenseMatrix pseudo_inverse(const DenseMatrix& x, RankTol rank_tol) {
  const ThinSvd svd = thin_svd(x, rank_tol);
  Eigen::MatrixXd out =
      svd.V * svd.singular_values.cwiseInverse().asDiagonal() * svd.U.transpose();
  if (svd.rank() == 0) out = Eigen::MatrixXd::Zero(x.cols(), x.rows());
  return DenseMatrix(std::move(out));
}

Index numerical_rank(const Eigen::MatrixXd& x, RankTol rank_tol) {
  check_factorizable(x);
  const double tol = rank_tol.value_or(default_rank_tol(x.rows(), x.cols()));
  Eigen::VectorXd s;
  if (x.rows() > 2 * x.cols()) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    Eigen::MatrixXd r = qr.matrixQR().topRows(x.cols()).triangularView<Eigen::Upper>();
    s = Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues();
  } else {
    s = Eigen::JacobiSVD<Eigen::MatrixXd>(x).singularValues();
  }
  if (s.size() == 0 || s(0) == 0.0) return 0;
  return static_cast<Index>((s.array() > tol * s(0)).count());
}

double spectral_norm(const Eigen::MatrixXd& x) {
  if (x.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Eigen::MatrixXd>(x).singularValues()(0);
}

double condition_number(const Eigen::MatrixXd& x) {
  if (x.size() == 0) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(x).singularValues();
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

DenseMatrix hconcat(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::RowCountMismatch, "concatenation needs equal row counts");
  Eigen::MatrixXd c(a.rows(), a.cols() + b.cols());
  c << a.values(), b.values();
  return DenseMatrix(std::move(c));
}

}  // namespace fastcca
