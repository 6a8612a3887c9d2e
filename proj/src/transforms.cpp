#include "fastcca/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fastcca/rng.hpp"

namespace fastcca {

std::string_view to_string(SketchKind kind) {
  switch (kind) {
    case SketchKind::srht: return "srht";
    case SketchKind::countsketch: return "countsketch";
    case SketchKind::uniform: return "uniform";
  }
  return "unknown";
}

std::optional<SketchKind> parse_sketch_kind(std::string_view name) {
  if (name == "srht") return SketchKind::srht;
  if (name == "countsketch" || name == "cw") return SketchKind::countsketch;
  if (name == "uniform") return SketchKind::uniform;
  return std::nullopt;
}

bool is_power_of_two(Index m) { return m >= 2 && (m & (m - 1)) == 0; }

Index next_power_of_two(Index m) {
  Index p = 2;
  while (p < m) p <<= 1;
  return p;
}

std::vector<std::int64_t> sample_without_replacement(Index m, Index r, std::uint64_t seed,
                                                     std::uint64_t stream) {
  if (r < 1 || r > m) {
    throw Error(ErrorCode::InvalidSampleSize,
                "sample size " + std::to_string(r) + " outside [1, " + std::to_string(m) + "]");
  }
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(r));
  if (r == m) {
    for (Index i = 0; i < m; ++i) out.push_back(i);
    return out;
  }
  // Floyd: for j = m-r .. m-1 draw t in [0, j]; take t unless already taken, else j.
  std::vector<char> taken(static_cast<std::size_t>(m), 0);
  RandomCursor rng(RandomStream(seed, stream));
  for (Index j = m - r; j < m; ++j) {
    const auto t = static_cast<Index>(rng.below(static_cast<std::uint64_t>(j) + 1));
    taken[taken[t] ? j : t] = 1;
  }
  for (Index i = 0; i < m; ++i)
    if (taken[i]) out.push_back(i);
  return out;
}

SketchOperator SketchOperator::realize(SketchKind kind, Index m, Index r, std::uint64_t seed) {
  if (m < 1) throw Error(ErrorCode::EmptyMatrix, "operator needs at least one source row");
  SketchOperator op;
  op.kind_ = kind;
  op.m_ = m;
  op.r_ = r;
  op.seed_ = seed;
  switch (kind) {
    case SketchKind::srht: {
      op.m_pad_ = next_power_of_two(m);
      if (r < 1 || r > op.m_pad_) {
        throw Error(ErrorCode::InvalidSampleSize, "srht sample size " + std::to_string(r) + " outside [1, " +
                                                      std::to_string(op.m_pad_) + "]");
      }
      const RandomStream signs(seed, streams::signs);
      op.signs_.resize(static_cast<std::size_t>(op.m_pad_));
      for (Index i = 0; i < op.m_pad_; ++i) op.signs_[i] = signs.sign(static_cast<std::uint64_t>(i));
      op.sample_ = sample_without_replacement(op.m_pad_, r, seed, streams::sample);
      break;
    }
    case SketchKind::countsketch: {
      op.m_pad_ = m;
      if (r < 1) throw Error(ErrorCode::InvalidSampleSize, "countsketch needs at least one target row");
      const RandomStream signs(seed, streams::signs);
      const RandomStream hash(seed, streams::hash);
      op.signs_.resize(static_cast<std::size_t>(m));
      op.hash_.resize(static_cast<std::size_t>(m));
      for (Index i = 0; i < m; ++i) {
        op.signs_[i] = signs.sign(static_cast<std::uint64_t>(i));
        op.hash_[i] = static_cast<std::int64_t>(hash.below(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(r)));
      }
      break;
    }
    case SketchKind::uniform: {
      op.m_pad_ = m;
      op.sample_ = sample_without_replacement(m, r, seed, streams::sample);
      break;
    }
  }
  return op;
}

SketchOperator SketchOperator::srht_with(Index m, std::vector<double> signs, std::vector<std::int64_t> sample) {
  SketchOperator op;
  op.kind_ = SketchKind::srht;
  op.m_ = m;
  op.m_pad_ = next_power_of_two(m);
  op.r_ = static_cast<Index>(sample.size());
  if (static_cast<Index>(signs.size()) != op.m_pad_) {
    throw Error(ErrorCode::DimensionMismatch, "sign vector must have padded length");
  }
  if (sample.empty() || !std::is_sorted(sample.begin(), sample.end()) ||
      std::adjacent_find(sample.begin(), sample.end()) != sample.end() || sample.front() < 0 ||
      sample.back() >= op.m_pad_) {
    throw Error(ErrorCode::IndexOutOfRange, "sample must be sorted, distinct and inside the padded range");
  }
  op.signs_ = std::move(signs);
  op.sample_ = std::move(sample);
  return op;
}

SketchOperator SketchOperator::countsketch_with(Index m, Index r, std::vector<std::int64_t> hash,
                                                std::vector<double> signs) {
  if (static_cast<Index>(hash.size()) != m || static_cast<Index>(signs.size()) != m) {
    throw Error(ErrorCode::DimensionMismatch, "hash and sign maps must cover every source row");
  }
  for (auto h : hash)
    if (h < 0 || h >= r) throw Error(ErrorCode::IndexOutOfRange, "hash target outside [0, r)");
  SketchOperator op;
  op.kind_ = SketchKind::countsketch;
  op.m_ = m;
  op.m_pad_ = m;
  op.r_ = r;
  op.hash_ = std::move(hash);
  op.signs_ = std::move(signs);
  return op;
}

double SketchOperator::rescale() const noexcept {
  switch (kind_) {
    case SketchKind::srht: return std::sqrt(static_cast<double>(m_pad_) / static_cast<double>(r_));
    case SketchKind::uniform: return std::sqrt(static_cast<double>(m_) / static_cast<double>(r_));
    case SketchKind::countsketch: return 1.0;
  }
  return 1.0;
}

Eigen::MatrixXd SketchOperator::apply_values(const Eigen::MatrixXd& x, Exec exec) const {
  if (x.rows() != m_) {
    throw Error(ErrorCode::DimensionMismatch, "operator expects " + std::to_string(m_) + " rows, got " +
                                                  std::to_string(x.rows()));
  }
  switch (kind_) {
    case SketchKind::srht:
      // rescale * m_pad^{-1/2} = r^{-1/2}
      return kernels::srht_columns(x, signs_, sample_, m_pad_, 1.0 / std::sqrt(static_cast<double>(r_)), exec);
    case SketchKind::countsketch: return kernels::countsketch_columns(x, hash_, signs_, r_, exec);
    case SketchKind::uniform: return kernels::gather_rows(x, sample_, rescale(), exec);
  }
  return {};
}

DenseMatrix SketchOperator::apply(const DenseMatrix& x, Exec exec) const {
  return DenseMatrix(apply_values(x.values(), exec));
}

DenseMatrix SketchOperator::apply(const SparseMatrix& x, std::uint64_t* entries_touched) const {
  if (kind_ != SketchKind::countsketch) {
    if (entries_touched) *entries_touched = x.nnz();
    return apply(x.to_dense());
  }
  if (x.rows() != m_) {
    throw Error(ErrorCode::DimensionMismatch, "operator expects " + std::to_string(m_) + " rows, got " +
                                                  std::to_string(x.rows()));
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(r_, x.cols());
  const auto touched = kernels::countsketch_csr(x, hash_, signs_, out);
  if (entries_touched) *entries_touched = touched;
  return DenseMatrix(std::move(out));
}

nlohmann::json SketchOperator::descriptor() const {
  return {{"kind", std::string(to_string(kind_))}, {"m", m_}, {"r", r_}, {"seed", seed_}};
}

SketchOperator SketchOperator::from_descriptor(const nlohmann::json& d) {
  const auto kind = parse_sketch_kind(d.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::ParseError, "unknown operator kind in descriptor");
  return realize(*kind, d.at("m").get<Index>(), d.at("r").get<Index>(), d.at("seed").get<std::uint64_t>());
}

namespace {

void require_power_of_two(Index m) {
  if (!is_power_of_two(m)) {
    throw Error(ErrorCode::NotPowerOfTwo, "row count " + std::to_string(m) + " is not a power of two >= 2");
  }
}

void require_sample(std::span<const std::int64_t> rows, Index m) {
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= m) throw Error(ErrorCode::IndexOutOfRange, "row index outside [0, m)");
    if (k > 0 && rows[k] <= rows[k - 1]) {
      throw Error(ErrorCode::IndexOutOfRange, "row indices must be sorted and distinct");
    }
  }
}

}  // namespace

DenseMatrix wht(const DenseMatrix& x, Exec exec) {
  require_power_of_two(x.rows());
  Eigen::MatrixXd v = x.values();
  kernels::wht_columns(v, exec);
  return DenseMatrix(std::move(v));
}

void wht_in_place(std::span<double> x) {
  require_power_of_two(static_cast<Index>(x.size()));
  kernels::fwht(x);
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.size()));
  for (double& v : x) v *= scale;
}

DenseMatrix subsampled_wht(const DenseMatrix& x, std::span<const std::int64_t> rows) {
  const Index m = x.rows();
  require_power_of_two(m);
  require_sample(rows, m);
  const std::vector<double> ones(static_cast<std::size_t>(m), 1.0);
  return DenseMatrix(kernels::srht_columns(x.values(), ones, rows, m, 1.0 / std::sqrt(static_cast<double>(m))));
}

DenseMatrix subsampled_wht_full(const DenseMatrix& x, std::span<const std::int64_t> rows) {
  require_power_of_two(x.rows());
  require_sample(rows, x.rows());
  const DenseMatrix full = wht(x);
  return DenseMatrix(kernels::gather_rows(full.values(), rows, 1.0));
}

DenseMatrix apply_srht(const SketchOperator& op, const DenseMatrix& x, Exec exec) {
  if (op.kind() != SketchKind::srht) throw Error(ErrorCode::DimensionMismatch, "operator is not srht");
  return op.apply(x, exec);
}

DenseMatrix apply_countsketch(const SketchOperator& op, const DenseMatrix& x, Exec exec) {
  if (op.kind() != SketchKind::countsketch) throw Error(ErrorCode::DimensionMismatch, "operator is not countsketch");
  return op.apply(x, exec);
}

DenseMatrix apply_countsketch(const SketchOperator& op, const SparseMatrix& x, std::uint64_t* entries_touched) {
  if (op.kind() != SketchKind::countsketch) throw Error(ErrorCode::DimensionMismatch, "operator is not countsketch");
  return op.apply(x, entries_touched);
}

SketchOperator sample_uniform(Index m, Index r, std::uint64_t seed) {
  return SketchOperator::realize(SketchKind::uniform, m, r, seed);
}

}  // namespace fastcca
