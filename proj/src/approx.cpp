#include "fastcca/approx.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace fastcca {

std::string_view to_string(SizeMode mode) { return mode == SizeMode::theory ? "theory" : "practical"; }

std::optional<SizeMode> parse_size_mode(std::string_view name) {
  if (name == "theory") return SizeMode::theory;
  if (name == "practical") return SizeMode::practical;
  return std::nullopt;
}

void ApproxConfig::validate() const {
  const double eps_max = transform == SketchKind::countsketch ? 1.0 / 3.0 : 0.5;
  // Practical sizing carries no guarantee; it admits the closed end 1/2 used by the mediamill preset.
  const bool closed = size_mode == SizeMode::practical && transform != SketchKind::countsketch;
  if (!(epsilon > 0.0 && (epsilon < eps_max || (closed && epsilon == eps_max)))) {
    throw Error(ErrorCode::InvalidAccuracy, "epsilon " + std::to_string(epsilon) + " outside (0, " +
                                                std::to_string(eps_max) + ") for " + std::string(to_string(transform)));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::InvalidAccuracy, "delta " + std::to_string(delta) + " outside (0, 1)");
  }
  if (r_override && *r_override < 1) throw Error(ErrorCode::InvalidSampleSize, "r must be at least 1");
}

Index MatrixRef::rows() const {
  return std::visit([](auto* m) { return m->rows(); }, ref_);
}
Index MatrixRef::cols() const {
  return std::visit([](auto* m) { return m->cols(); }, ref_);
}
const DenseMatrix* MatrixRef::dense() const noexcept {
  const auto* p = std::get_if<const DenseMatrix*>(&ref_);
  return p ? *p : nullptr;
}
const SparseMatrix* MatrixRef::sparse() const noexcept {
  const auto* p = std::get_if<const SparseMatrix*>(&ref_);
  return p ? *p : nullptr;
}
DenseMatrix MatrixRef::to_dense() const { return is_sparse() ? sparse()->to_dense() : *dense(); }

namespace {

void check_accuracy(double epsilon, double delta, double eps_max, bool closed = false) {
  if (!(epsilon > 0.0 && (epsilon < eps_max || (closed && epsilon == eps_max)))) throw Error(ErrorCode::InvalidAccuracy, "epsilon out of range");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidAccuracy, "delta out of range");
}

Index cap(double r, Index m) {
  if (!(r < static_cast<double>(m))) return m;
  return std::max<Index>(1, static_cast<Index>(std::ceil(r)));
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// X^T X for a dense or CSR matrix.
Eigen::MatrixXd gram(MatrixRef x) {
  const Index n = x.cols();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  if (const auto* d = x.dense()) {
    g.selfadjointView<Eigen::Lower>().rankUpdate(d->values().transpose());
  } else {
    const auto* s = x.sparse();
    const auto rp = s->row_ptr();
    const auto ci = s->col_idx();
    const auto v = s->values();
    for (Index i = 0; i < s->rows(); ++i)
      for (auto k = rp[i]; k < rp[i + 1]; ++k)
        for (auto l = rp[i]; l <= k; ++l) g(ci[k], ci[l]) += v[k] * v[l];
  }
  return g.selfadjointView<Eigen::Lower>();
}

double condition_from_gram(const Eigen::MatrixXd& g) {
  if (g.size() == 0) return std::numeric_limits<double>::infinity();
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(g, Eigen::EigenvaluesOnly).eigenvalues();
  if (ev(0) <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(ev(ev.size() - 1) / ev(0));
}

DenseMatrix sketch(const SketchOperator& op, MatrixRef x, Exec exec, std::uint64_t& touched) {
  if (const auto* s = x.sparse()) {
    std::uint64_t t = 0;
    DenseMatrix out = op.apply(*s, &t);
    touched += t;
    return out;
  }
  touched += static_cast<std::uint64_t>(x.rows() * x.cols());
  return op.apply(*x.dense(), exec);
}

CcaMethod method_of(SketchKind kind) {
  switch (kind) {
    case SketchKind::srht: return CcaMethod::srht;
    case SketchKind::countsketch: return CcaMethod::countsketch;
    case SketchKind::uniform: return CcaMethod::uniform;
  }
  return CcaMethod::srht;
}

void check_rank_kept(Index sketched_rank, MatrixRef original, const char* name, RankTol tol) {
  if (sketched_rank == original.cols()) return;  // already full column rank
  const Index original_rank = numerical_rank(original.to_dense().values(), tol);
  if (original_rank == 0) throw Error(ErrorCode::RankZero, std::string(name) + " has numerical rank 0");
  if (sketched_rank < original_rank) {
    throw Error(ErrorCode::RankCollapse, std::string("sketched ") + name + " has rank " + std::to_string(sketched_rank) +
                                             " < " + std::to_string(original_rank) + "; increase r");
  }
}

}  // namespace

Index sample_size_srht(Index m, Index n, Index ell, double epsilon, double delta, SizeMode mode) {
  if (m < 1 || n < 1 || ell < 1) throw Error(ErrorCode::InvalidSampleSize, "dimensions must be positive");
  check_accuracy(epsilon, delta, 0.5, mode == SizeMode::practical);
  const double d = static_cast<double>(n + ell);
  const double md = static_cast<double>(m);
  double r = 0.0;
  if (mode == SizeMode::theory) {
    const double root = std::sqrt(d) + std::sqrt(8.0 * std::log(12.0 * md / delta));
    r = 54.0 / (epsilon * epsilon) * root * root * std::log(3.0 * d / delta);
  } else {
    const double root = std::sqrt(d) + std::sqrt(std::log(md / delta));
    r = 1.0 / (epsilon * epsilon) * root * root * std::log(d / delta);
  }
  return cap(r, m);
}

Index sample_size_cw(Index n, Index ell, double epsilon, double delta, Index m) {
  if (m < 1 || n < 1 || ell < 1) throw Error(ErrorCode::InvalidSampleSize, "dimensions must be positive");
  check_accuracy(epsilon, delta, 1.0 / 3.0);
  const double d = static_cast<double>(n + ell);
  return cap(243.0 * (d * d + d) / (epsilon * epsilon * delta), m);
}

Index sample_size_uniform(Index m, double mu, Index omega, double epsilon, double delta) {
  if (m < 1 || omega < 1) throw Error(ErrorCode::InvalidSampleSize, "dimensions must be positive");
  check_accuracy(epsilon, delta, 0.5);
  const double r = 54.0 / (epsilon * epsilon) * static_cast<double>(m) * mu *
                   std::log(12.0 * static_cast<double>(omega) / delta);
  return cap(r, m);
}

ApproxOutput approx_cca(MatrixRef a, MatrixRef b, const ApproxConfig& config) {
  config.validate();
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::RowCountMismatch,
                "A has " + std::to_string(a.rows()) + " rows, B has " + std::to_string(b.rows()));
  }
  const Index m = a.rows();
  if (m == 0 || a.cols() == 0 || b.cols() == 0) throw Error(ErrorCode::EmptyMatrix, "CCA needs nonempty inputs");
  if (m < std::max(a.cols(), b.cols())) {
    throw Error(ErrorCode::DimensionMismatch, "inputs must have at least as many rows as columns");
  }

  ApproxOutput out;
  auto& diag = out.diagnostics;

  auto t0 = Clock::now();
  Index r = 0;
  if (config.r_override) {
    r = *config.r_override;
    if (r > m) throw Error(ErrorCode::InvalidSampleSize, "r exceeds the row count");
  } else {
    switch (config.transform) {
      case SketchKind::srht:
        r = sample_size_srht(m, a.cols(), b.cols(), config.epsilon, config.delta, config.size_mode);
        break;
      case SketchKind::countsketch:
        r = sample_size_cw(a.cols(), b.cols(), config.epsilon, config.delta, m);
        break;
      case SketchKind::uniform: {
        const auto cc = concat_coherence(a.to_dense(), b.to_dense(), config.rank_tol);
        diag.concat_coherence = cc.mu;
        diag.concat_rank = cc.omega;
        r = sample_size_uniform(m, cc.mu, cc.omega, config.epsilon, config.delta);
        break;
      }
    }
  }
  diag.r_used = r;
  diag.timings.sample_size = seconds_since(t0);

  // One realization, applied to both sides.
  t0 = Clock::now();
  const SketchOperator op = SketchOperator::realize(config.transform, m, r, config.seed);
  const DenseMatrix a_hat = sketch(op, a, config.exec, diag.entries_touched);
  const DenseMatrix b_hat = sketch(op, b, config.exec, diag.entries_touched);
  diag.timings.sketch = seconds_since(t0);

  t0 = Clock::now();
  try {
    out.result = exact_cca(a_hat, b_hat, ExactOptions{config.rank_tol, BasisMethod::svd});
  } catch (const Error& e) {
    if (e.code() != ErrorCode::RankZero) throw;
    const Index ra = numerical_rank(a_hat.values(), config.rank_tol);
    check_rank_kept(ra, a, "A", config.rank_tol);
    check_rank_kept(numerical_rank(b_hat.values(), config.rank_tol), b, "B", config.rank_tol);
    throw;
  }
  check_rank_kept(out.result.rank_a, a, "A", config.rank_tol);
  check_rank_kept(out.result.rank_b, b, "B", config.rank_tol);
  out.result.method = method_of(config.transform);
  diag.timings.solve = seconds_since(t0);

  t0 = Clock::now();
  const Eigen::MatrixXd& wa = out.result.weights_a;
  const Eigen::MatrixXd& wb = out.result.weights_b;
  diag.gram_a = wa.transpose() * gram(a) * wa;
  diag.gram_b = wb.transpose() * gram(b) * wb;
  diag.gram_a = 0.5 * (diag.gram_a + diag.gram_a.transpose()).eval();
  diag.gram_b = 0.5 * (diag.gram_b + diag.gram_b.transpose()).eval();
  diag.cond_aw = condition_from_gram(diag.gram_a);
  diag.cond_bp = condition_from_gram(diag.gram_b);
  diag.timings.diagnostics = seconds_since(t0);
  return out;
}

Eigen::VectorXd signed_errors(const CcaResult& exact, const CcaResult& approx) {
  const Index q = std::min(exact.size(), approx.size());
  return exact.correlations.head(q) - approx.correlations.head(q);
}

namespace {

struct Projections {
  Eigen::MatrixXd gram_a;  // (AW)^T (AW)
  Eigen::MatrixXd gram_b;  // (BP)^T (BP)
  Eigen::VectorXd direction_corr;  // sigma(A w_i, B p_i)
  Index q = 0;
};

Projections project(const CcaResult& exact, const CcaResult& approx, const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::DimensionMismatch, "A and B need equal row counts");
  if (approx.weights_a.rows() != a.cols() || approx.weights_b.rows() != b.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "weights do not match the input column counts");
  }
  Projections p;
  p.q = std::min(exact.size(), approx.size());
  const Eigen::MatrixXd aw = a.values() * approx.weights_a.leftCols(p.q);
  const Eigen::MatrixXd bp = b.values() * approx.weights_b.leftCols(p.q);
  p.gram_a = aw.transpose() * aw;
  p.gram_b = bp.transpose() * bp;
  p.direction_corr.resize(p.q);
  for (Index i = 0; i < p.q; ++i) p.direction_corr(i) = vector_correlation(aw.col(i), bp.col(i));
  return p;
}

}  // namespace

EtaReport check_eta_approx(const CcaResult& exact, const CcaResult& approx, const DenseMatrix& a,
                           const DenseMatrix& b, double eta) {
  const Projections p = project(exact, approx, a, b);
  EtaReport rep;
  for (Index i = 0; i < p.q; ++i) {
    rep.correlations.record(eta - std::abs(exact.correlations(i) - approx.correlations(i)));
    rep.directions.record(eta - std::abs(exact.correlations(i) - p.direction_corr(i)));
    for (const auto* g : {&p.gram_a, &p.gram_b}) {
      for (Index j = 0; j < p.q; ++j) {
        const double dev = i == j ? std::abs((*g)(i, i) - 1.0) : std::abs((*g)(i, j));
        rep.orthonormal.record(eta - dev);
      }
    }
  }
  return rep;
}

GuaranteeReport check_guarantee(const CcaResult& exact, const CcaResult& approx, const DenseMatrix& a,
                                const DenseMatrix& b, double epsilon) {
  const Projections p = project(exact, approx, a, b);
  const double e3 = epsilon / 3.0;
  const double corr_bound = epsilon + 2.0 * epsilon * epsilon / 9.0;
  const double norm_lo = 1.0 / (1.0 + e3);
  const double norm_hi = 1.0 / (1.0 - e3);
  const double cross_bound = epsilon / (3.0 - epsilon);

  GuaranteeReport rep;
  for (Index i = 0; i < p.q; ++i) {
    const double s = exact.correlations(i);
    rep.correlations.record(corr_bound - std::abs(s - approx.correlations(i)));

    for (const auto* g : {&p.gram_a, &p.gram_b}) {
      for (Index j = 0; j < p.q; ++j) {
        if (i == j) {
          const double v = (*g)(i, i);
          rep.orthonormal.record(std::min(v - norm_lo, norm_hi - v));
        } else {
          rep.orthonormal.record(cross_bound - std::abs((*g)(i, j)));
        }
      }
    }

    const double lower = s / (1.0 + e3) - e3 / (1.0 - epsilon / 9.0);
    const double upper = s / (1.0 - e3) + e3 / ((1.0 - e3) * (1.0 - e3));
    if (lower > upper) rep.bracket_inverted = true;
    const double c = p.direction_corr(i);
    rep.directions.record(std::min(c - lower, upper - c));
  }
  return rep;
}

}  // namespace fastcca
