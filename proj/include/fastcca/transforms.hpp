#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fastcca/kernels.hpp"
#include "fastcca/matrix.hpp"

namespace fastcca {

using kernels::Exec;

enum class SketchKind { srht, countsketch, uniform };

std::string_view to_string(SketchKind kind);
std::optional<SketchKind> parse_sketch_kind(std::string_view name);

/// Smallest power of two >= m (and >= 2).
Index next_power_of_two(Index m);
bool is_power_of_two(Index m);

/// A realized random dimension-reduction operator R^m -> R^r.
///
/// srht:        x -> sqrt(m_pad / r) * S H D [x; 0]   (S samples rows of the padded transform)
/// countsketch: x -> S D x, one random target row and sign per source row
/// uniform:     x -> sqrt(m / r) * S x
///
/// The realization is a pure function of (kind, m, r, seed). The operator is
/// immutable and can be applied from several threads at once.
class SketchOperator {
 public:
  static SketchOperator realize(SketchKind kind, Index m, Index r, std::uint64_t seed);

  /// Hand-specified realizations for tests; these are not reproducible from a descriptor.
  static SketchOperator srht_with(Index m, std::vector<double> signs, std::vector<std::int64_t> sample);
  static SketchOperator countsketch_with(Index m, Index r, std::vector<std::int64_t> hash,
                                         std::vector<double> signs);

  SketchKind kind() const noexcept { return kind_; }
  Index source_rows() const noexcept { return m_; }
  Index target_rows() const noexcept { return r_; }
  Index padded_rows() const noexcept { return m_pad_; }
  std::uint64_t seed() const noexcept { return seed_; }

  std::span<const double> signs() const noexcept { return signs_; }
  std::span<const std::int64_t> sample() const noexcept { return sample_; }
  std::span<const std::int64_t> hash() const noexcept { return hash_; }
  /// Factor applied after sampling: sqrt(m_pad / r) for srht, sqrt(m / r) for uniform, 1 otherwise.
  double rescale() const noexcept;

  DenseMatrix apply(const DenseMatrix& x, Exec exec = Exec::parallel) const;
  /// CountSketch reads every stored entry once; the other kinds densify first.
  /// `entries_touched`, when given, receives the number of stored entries read.
  DenseMatrix apply(const SparseMatrix& x, std::uint64_t* entries_touched = nullptr) const;
  /// Raw Eigen entry point for internal callers that already validated the shape.
  Eigen::MatrixXd apply_values(const Eigen::MatrixXd& x, Exec exec = Exec::parallel) const;

  /// {"kind", "m", "r", "seed"}; realize(from_descriptor(d)) reproduces the operator.
  nlohmann::json descriptor() const;
  static SketchOperator from_descriptor(const nlohmann::json& descriptor);

  friend bool operator==(const SketchOperator&, const SketchOperator&) = default;

 private:
  SketchOperator() = default;

  SketchKind kind_ = SketchKind::uniform;
  Index m_ = 0;
  Index r_ = 0;
  Index m_pad_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<double> signs_;
  std::vector<std::int64_t> sample_;
  std::vector<std::int64_t> hash_;
};

/// H X with H = m^{-1/2} H_m; m must be a power of two >= 2.
DenseMatrix wht(const DenseMatrix& x, Exec exec = Exec::parallel);
/// In-place normalized transform of a single vector.
void wht_in_place(std::span<double> x);

/// Rows `rows` of H X (no rescaling beyond the m^{-1/2} normalization).
DenseMatrix subsampled_wht(const DenseMatrix& x, std::span<const std::int64_t> rows);
/// Reference path: full transform, then row selection.
DenseMatrix subsampled_wht_full(const DenseMatrix& x, std::span<const std::int64_t> rows);

DenseMatrix apply_srht(const SketchOperator& op, const DenseMatrix& x, Exec exec = Exec::parallel);
DenseMatrix apply_countsketch(const SketchOperator& op, const DenseMatrix& x, Exec exec = Exec::parallel);
DenseMatrix apply_countsketch(const SketchOperator& op, const SparseMatrix& x,
                              std::uint64_t* entries_touched = nullptr);

/// r distinct indices drawn uniformly from [m] (Floyd's algorithm), sorted.
std::vector<std::int64_t> sample_without_replacement(Index m, Index r, std::uint64_t seed,
                                                     std::uint64_t stream);
SketchOperator sample_uniform(Index m, Index r, std::uint64_t seed);

}  // namespace fastcca
