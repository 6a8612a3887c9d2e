#include "fastcca/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace fastcca::kernels {

void fwht(std::span<double> x) noexcept {
  const std::size_t n = x.size();
  double* v = x.data();
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

namespace {

// H_len = [[H, H], [H, -H]]: rows in the top half see H (x_top + x_bot),
// rows in the bottom half see H (x_top - x_bot).
void pruned(double* x, std::size_t len, std::size_t base, const std::int64_t* first,
            const std::int64_t* last, double* out) {
  const auto count = static_cast<std::size_t>(last - first);
  if (count == 0) return;
  if (count == len) {
    fwht({x, len});
    std::copy(x, x + len, out);
    return;
  }
  const std::size_t half = len / 2;
  const std::int64_t* mid = std::lower_bound(first, last, static_cast<std::int64_t>(base + half));
  double* top = x;
  double* bot = x + half;
  if (mid == first) {
    for (std::size_t j = 0; j < half; ++j) bot[j] = top[j] - bot[j];
    pruned(bot, half, base + half, first, last, out);
  } else if (mid == last) {
    for (std::size_t j = 0; j < half; ++j) top[j] += bot[j];
    pruned(top, half, base, first, last, out);
  } else {
    for (std::size_t j = 0; j < half; ++j) {
      const double a = top[j];
      const double b = bot[j];
      top[j] = a + b;
      bot[j] = a - b;
    }
    pruned(top, half, base, first, mid, out);
    pruned(bot, half, base + half, mid, last, out + (mid - first));
  }
}

template <class ColumnFn>
void for_each_column(Index cols, Exec exec, ColumnFn&& fn) {
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < cols; ++j) fn(j);
  } else {
    for (Index j = 0; j < cols; ++j) fn(j);
  }
}

}  // namespace

void subsampled_fwht(std::span<double> x, std::span<const std::int64_t> rows, std::span<double> out) {
  pruned(x.data(), x.size(), 0, rows.data(), rows.data() + rows.size(), out.data());
}

void wht_columns(Eigen::MatrixXd& x, Exec exec) {
  const Index m = x.rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for_each_column(x.cols(), exec, [&](Index j) {
    std::span<double> col(x.col(j).data(), static_cast<std::size_t>(m));
    fwht(col);
    for (double& v : col) v *= scale;
  });
}

Eigen::MatrixXd srht_columns(const Eigen::MatrixXd& x, std::span<const double> signs,
                             std::span<const std::int64_t> rows, Index padded_rows, double scale,
                             Exec exec) {
  const Index m = x.rows();
  const auto r = static_cast<Index>(rows.size());
  Eigen::MatrixXd out(r, x.cols());
  auto column = [&](Index j, std::vector<double>& buf) {
    const double* src = x.col(j).data();
    for (Index i = 0; i < m; ++i) buf[i] = signs[i] * src[i];
    std::fill(buf.begin() + m, buf.end(), 0.0);
    double* dst = out.col(j).data();
    subsampled_fwht(buf, rows, {dst, static_cast<std::size_t>(r)});
    for (Index k = 0; k < r; ++k) dst[k] *= scale;
  };
  if (exec == Exec::parallel) {
#pragma omp parallel
    {
      std::vector<double> buf(static_cast<std::size_t>(padded_rows));
#pragma omp for schedule(static)
      for (Index j = 0; j < x.cols(); ++j) column(j, buf);
    }
  } else {
    std::vector<double> buf(static_cast<std::size_t>(padded_rows));
    for (Index j = 0; j < x.cols(); ++j) column(j, buf);
  }
  return out;
}

Eigen::MatrixXd countsketch_columns(const Eigen::MatrixXd& x, std::span<const std::int64_t> hash,
                                    std::span<const double> signs, Index target_rows, Exec exec) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(target_rows, x.cols());
  const Index m = x.rows();
  for_each_column(x.cols(), exec, [&](Index j) {
    const double* src = x.col(j).data();
    double* dst = out.col(j).data();
    for (Index i = 0; i < m; ++i) dst[hash[i]] += signs[i] * src[i];
  });
  return out;
}

std::uint64_t countsketch_csr(const SparseMatrix& x, std::span<const std::int64_t> hash,
                              std::span<const double> signs, Eigen::MatrixXd& out) {
  const auto rp = x.row_ptr();
  const auto ci = x.col_idx();
  const auto vals = x.values();
  std::uint64_t touched = 0;
  for (Index i = 0; i < x.rows(); ++i) {
    const Index target = hash[i];
    const double s = signs[i];
    for (auto k = rp[i]; k < rp[i + 1]; ++k) {
      out(target, ci[k]) += s * vals[k];
      ++touched;
    }
  }
  return touched;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const std::int64_t> rows, double scale,
                            Exec exec) {
  const auto r = static_cast<Index>(rows.size());
  Eigen::MatrixXd out(r, x.cols());
  for_each_column(x.cols(), exec, [&](Index j) {
    const double* src = x.col(j).data();
    double* dst = out.col(j).data();
    for (Index k = 0; k < r; ++k) dst[k] = scale * src[rows[k]];
  });
  return out;
}

}  // namespace fastcca::kernels
