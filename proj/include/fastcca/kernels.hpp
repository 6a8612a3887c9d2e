#pragma once

// Column kernels behind the sketching operators. Every kernel processes one
// column at a time with a fixed sequential order inside the column, so the
// OpenMP-parallel path and the serial reference path give identical bits.

#include <cstdint>
#include <span>

#include <Eigen/Dense>

#include "fastcca/matrix.hpp"

namespace fastcca::kernels {

enum class Exec { parallel, serial };

/// Unnormalized in-place fast Walsh-Hadamard transform (Sylvester order).
/// x.size() must be a power of two.
void fwht(std::span<double> x) noexcept;

/// out[k] = (H_len x)[rows[k]] for sorted, duplicate-free rows, unnormalized.
/// Descends only into halves that contain a requested row; x is used as
/// scratch and left in an unspecified state.
void subsampled_fwht(std::span<double> x, std::span<const std::int64_t> rows, std::span<double> out);

/// Each column of x replaced by H x with H = len^{-1/2} H_len.
void wht_columns(Eigen::MatrixXd& x, Exec exec = Exec::parallel);

/// Rows `rows` of H D [x; 0] scaled by `scale`, where the column is padded to
/// `padded_rows` and D = diag(signs).
Eigen::MatrixXd srht_columns(const Eigen::MatrixXd& x, std::span<const double> signs,
                             std::span<const std::int64_t> rows, Index padded_rows, double scale,
                             Exec exec = Exec::parallel);

/// Row i of x is added, times signs[i], to row hash[i] of an r x n output.
Eigen::MatrixXd countsketch_columns(const Eigen::MatrixXd& x, std::span<const std::int64_t> hash,
                                    std::span<const double> signs, Index target_rows,
                                    Exec exec = Exec::parallel);

/// Sparse CountSketch in one pass over the stored entries. Returns the number
/// of stored entries read.
std::uint64_t countsketch_csr(const SparseMatrix& x, std::span<const std::int64_t> hash,
                              std::span<const double> signs, Eigen::MatrixXd& out);

/// Rows `rows` of x scaled by `scale`.
Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& x, std::span<const std::int64_t> rows, double scale,
                            Exec exec = Exec::parallel);

}  // namespace fastcca::kernels
