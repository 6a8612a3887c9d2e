#include "fastcca/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <omp.h>

#include "fastcca/approx.hpp"
#include "fastcca/cca.hpp"
#include "fastcca/rng.hpp"

namespace fastcca {

std::string_view to_string(LemmaId id) {
  switch (id) {
    case LemmaId::pert4: return "pert4";
    case LemmaId::pert5: return "pert5";
    case LemmaId::pert6: return "pert6";
    case LemmaId::sampling_ortho: return "sampling-ortho";
    case LemmaId::rht_coherence: return "rht-coherence";
    case LemmaId::cw_embedding: return "cw-embedding";
  }
  return "unknown";
}

std::string_view to_string(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::srht: return "srht";
    case EmbeddingKind::uniform: return "uniform";
    case EmbeddingKind::uniform_no_rht: return "uniform-no-rht";
    case EmbeddingKind::countsketch: return "countsketch";
  }
  return "unknown";
}

double LemmaCheckReport::budget() const noexcept {
  if (!statistical) return 0.0;
  const double d = params.delta;
  const double t = std::max<double>(1.0, static_cast<double>(trials));
  return d + 3.0 * std::sqrt(d * (1.0 - d) / t);
}

nlohmann::json LemmaCheckReport::to_json() const {
  nlohmann::json j;
  j["schema"] = 1;
  j["lemma"] = std::string(to_string(lemma));
  j["trials"] = trials;
  j["violations"] = violations;
  j["excluded"] = excluded;
  if (std::isfinite(worst_slack)) {
    j["worst_slack"] = worst_slack;
  } else {
    j["worst_slack"] = nullptr;
  }
  j["failure_rate"] = failure_rate();
  j["budget"] = budget();
  j["statistical"] = statistical;
  j["expect_failure"] = expect_failure;
  j["within_budget"] = within_budget();
  j["ok"] = ok();
  j["params"] = {{"m", params.m},         {"n", params.n},         {"l", params.ell},
                 {"r", params.r},         {"epsilon", params.epsilon}, {"delta", params.delta},
                 {"seed", params.seed},   {"transform", params.transform}, {"input", params.input}};
  return j;
}

Eigen::MatrixXd gaussian_matrix(Index m, Index n, std::uint64_t seed, std::uint64_t stream) {
  Eigen::MatrixXd g(m, n);
  const RandomStream rs(seed, stream);
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) g(i, j) = rs.normal(static_cast<std::uint64_t>(j * m + i));
  return g;
}

Eigen::MatrixXd random_orthonormal(Index m, Index d, std::uint64_t seed) {
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(m, d, seed, streams::generator_base));
  return qr.householderQ() * Eigen::MatrixXd::Identity(m, d);
}

Index sample_size_sampling_lemma(Index m, double mu, Index d, double epsilon, double delta) {
  if (m < 1 || d < 1) throw Error(ErrorCode::InvalidSampleSize, "dimensions must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0) || !(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::InvalidAccuracy, "epsilon and delta must lie in (0, 1)");
  }
  const double r = 6.0 / (epsilon * epsilon) * static_cast<double>(m) * mu *
                   std::log(3.0 * static_cast<double>(d) / delta);
  if (!(r < static_cast<double>(m))) return m;
  return std::max<Index>(1, static_cast<Index>(std::ceil(r)));
}

double rht_coherence_bound(Index m, Index n, double delta) {
  const double root = std::sqrt(static_cast<double>(n)) + std::sqrt(8.0 * std::log(static_cast<double>(m) / delta));
  return root * root / static_cast<double>(m);
}

namespace {

constexpr double kRoundoff = 1e-12;

Eigen::VectorXd singular_values(const Eigen::MatrixXd& x) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(x).singularValues();
}

// All singular values of S U inside [sqrt(1 - eps), sqrt(1 + eps)].
bool in_window(const Eigen::MatrixXd& su, double eps) {
  const Eigen::VectorXd s = singular_values(su);
  if (s.size() < su.cols()) return false;  // fewer rows than columns: sigma_min = 0
  return s.minCoeff() >= std::sqrt(1.0 - eps) && s.maxCoeff() <= std::sqrt(1.0 + eps);
}

void require_pair(const DenseMatrix& a, const DenseMatrix& b, const SketchOperator& op) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::RowCountMismatch, "A and B differ in row count");
  if (op.source_rows() != a.rows()) throw Error(ErrorCode::DimensionMismatch, "operator size differs from A");
}

Eigen::MatrixXd concat_basis(const DenseMatrix& a, const DenseMatrix& b) {
  ThinSvd svd = thin_svd(hconcat(a, b));
  if (svd.rank() == 0) throw Error(ErrorCode::HypothesisUnverifiable, "rank of [A ; B] is zero");
  return std::move(svd.U);
}

std::optional<double> pert4_slack_with(const DenseMatrix& a, const DenseMatrix& b, const Eigen::MatrixXd& uc,
                                       double rhs, const SketchOperator& op, double eps) {
  if (!in_window(op.apply_values(uc), eps)) return std::nullopt;
  const Eigen::MatrixXd sa = op.apply_values(a.values());
  const Eigen::MatrixXd sb = op.apply_values(b.values());
  const Eigen::VectorXd exact = singular_values(a.values().transpose() * b.values());
  const Eigen::VectorXd sketched = singular_values(sa.transpose() * sb);
  return rhs * (1.0 + kRoundoff) - (exact - sketched).cwiseAbs().maxCoeff();
}

std::optional<double> pert6_slack_with(const DenseMatrix& a, const DenseMatrix& b, const Eigen::MatrixXd& uc,
                                       const SketchOperator& op, double eps, Index vectors, std::uint64_t seed) {
  if (!in_window(op.apply_values(uc), eps)) return std::nullopt;
  const Eigen::MatrixXd sa = op.apply_values(a.values());
  const Eigen::MatrixXd sb = op.apply_values(b.values());
  const Eigen::MatrixXd w = gaussian_matrix(a.cols(), vectors, seed, streams::generator_base + 1).colwise().normalized();
  const Eigen::MatrixXd y = gaussian_matrix(b.cols(), vectors, seed, streams::generator_base + 2).colwise().normalized();
  const Eigen::MatrixXd aw = a.values() * w;
  const Eigen::MatrixXd by = b.values() * y;
  const Eigen::MatrixXd saw = sa * w;
  const Eigen::MatrixXd sby = sb * y;
  double slack = std::numeric_limits<double>::infinity();
  const double scale = spectral_norm(a.values()) * spectral_norm(b.values());
  for (Index k = 0; k < vectors; ++k) {
    const double lhs = std::abs(aw.col(k).dot(by.col(k)) - saw.col(k).dot(sby.col(k)));
    const double rhs = eps * aw.col(k).norm() * by.col(k).norm();
    slack = std::min(slack, rhs + kRoundoff * scale - lhs);
  }
  return slack;
}

struct Pert5Bases {
  Eigen::MatrixXd ua;
  Eigen::MatrixXd ub;
};

std::optional<double> pert5_slack_with(const Pert5Bases& bases, const SketchOperator& op, double eps) {
  const Eigen::MatrixXd sua = op.apply_values(bases.ua);
  const Eigen::MatrixXd sub = op.apply_values(bases.ub);
  if (!in_window(sua, eps) || !in_window(sub, eps)) return std::nullopt;
  // range(SA) = range(S U_A), so these bases stand in for U_SA, U_SB.
  const ThinSvd sa = thin_svd(sua);
  const ThinSvd sb = thin_svd(sub);
  if (sa.rank() != bases.ua.cols() || sb.rank() != bases.ub.cols()) return std::nullopt;
  const Eigen::VectorXd lhs = singular_values(sua.transpose() * sub);
  const Eigen::VectorXd rhs = singular_values(sa.U.transpose() * sb.U);
  const double bound = 2.0 * eps * (1.0 + eps);
  return bound + kRoundoff - (lhs - rhs).cwiseAbs().maxCoeff();
}

Pert5Bases pert5_bases(const DenseMatrix& a, const DenseMatrix& b) {
  ThinSvd sa = thin_svd(a);
  ThinSvd sb = thin_svd(b);
  if (sa.rank() == 0 || sb.rank() == 0) throw Error(ErrorCode::HypothesisUnverifiable, "A or B has rank zero");
  return {std::move(sa.U), std::move(sb.U)};
}

LemmaParams pert_params(const DenseMatrix& a, const DenseMatrix& b, const PertOptions& o) {
  LemmaParams p;
  p.m = a.rows();
  p.n = a.cols();
  p.ell = b.cols();
  p.r = o.r;
  p.epsilon = o.epsilon;
  p.seed = o.seed;
  p.transform = std::string(to_string(o.kind));
  return p;
}

// Draws operators with seeds derive_seed(seed, t), t = 0, 1, ..., and keeps the
// first target_trials draws that satisfy the hypothesis. Batches run in
// parallel; consumption is in draw order so the report does not depend on the
// thread count.
template <class SlackFn>
LemmaCheckReport run_pert(LemmaId id, LemmaParams params, const PertOptions& o, SlackFn&& slack_of) {
  if (o.r < 1) throw Error(ErrorCode::InvalidSampleSize, "operator size r must be positive");
  LemmaCheckReport rep;
  rep.lemma = id;
  rep.params = std::move(params);
  const Index batch = std::max<Index>(8, 4 * omp_get_max_threads());
  std::vector<std::optional<double>> slack;
  for (Index start = 0; start < o.max_attempts && rep.trials < o.target_trials; start += batch) {
    const Index count = std::min(batch, o.max_attempts - start);
    slack.assign(static_cast<std::size_t>(count), std::nullopt);
#pragma omp parallel for schedule(dynamic)
    for (Index t = 0; t < count; ++t) {
      const auto seed = derive_seed(o.seed, static_cast<std::uint64_t>(start + t));
      const SketchOperator op = SketchOperator::realize(o.kind, rep.params.m, o.r, seed);
      slack[static_cast<std::size_t>(t)] = slack_of(op, seed);
    }
    for (Index t = 0; t < count && rep.trials < o.target_trials; ++t) {
      const auto& s = slack[static_cast<std::size_t>(t)];
      if (!s) {
        ++rep.excluded;
        continue;
      }
      ++rep.trials;
      rep.worst_slack = std::min(rep.worst_slack, *s);
      if (*s < 0.0) ++rep.violations;
    }
  }
  return rep;
}

}  // namespace

std::optional<double> pert4_slack(const DenseMatrix& a, const DenseMatrix& b, const SketchOperator& op, double epsilon) {
  require_pair(a, b, op);
  const double rhs = epsilon * spectral_norm(a.values()) * spectral_norm(b.values());
  return pert4_slack_with(a, b, concat_basis(a, b), rhs, op, epsilon);
}

std::optional<double> pert5_slack(const DenseMatrix& a, const DenseMatrix& b, const SketchOperator& op, double epsilon) {
  require_pair(a, b, op);
  if (!(epsilon > 0.0 && epsilon < 0.5)) throw Error(ErrorCode::InvalidAccuracy, "pert5 needs epsilon in (0, 1/2)");
  return pert5_slack_with(pert5_bases(a, b), op, epsilon);
}

std::optional<double> pert6_slack(const DenseMatrix& a, const DenseMatrix& b, const SketchOperator& op, double epsilon,
                                  Index vectors, std::uint64_t seed) {
  require_pair(a, b, op);
  return pert6_slack_with(a, b, concat_basis(a, b), op, epsilon, vectors, seed);
}

double bilinear_slack(const DenseMatrix& a, const DenseMatrix& b, const SketchOperator& op, double epsilon,
                      const Eigen::VectorXd& w, const Eigen::VectorXd& y) {
  require_pair(a, b, op);
  const Eigen::VectorXd aw = a.values() * w;
  const Eigen::VectorXd by = b.values() * y;
  const Eigen::VectorXd saw = op.apply_values(a.values()) * w;
  const Eigen::VectorXd sby = op.apply_values(b.values()) * y;
  const double scale = spectral_norm(a.values()) * spectral_norm(b.values()) * w.norm() * y.norm();
  return epsilon * aw.norm() * by.norm() + kRoundoff * scale - std::abs(aw.dot(by) - saw.dot(sby));
}

LemmaCheckReport check_pert4(const DenseMatrix& a, const DenseMatrix& b, const PertOptions& options) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::RowCountMismatch, "A and B differ in row count");
  const Eigen::MatrixXd uc = concat_basis(a, b);
  const double rhs = options.epsilon * spectral_norm(a.values()) * spectral_norm(b.values());
  return run_pert(LemmaId::pert4, pert_params(a, b, options), options,
                  [&](const SketchOperator& op, std::uint64_t) { return pert4_slack_with(a, b, uc, rhs, op, options.epsilon); });
}

LemmaCheckReport check_pert5(const DenseMatrix& a, const DenseMatrix& b, const PertOptions& options) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::RowCountMismatch, "A and B differ in row count");
  if (!(options.epsilon > 0.0 && options.epsilon < 0.5)) {
    throw Error(ErrorCode::InvalidAccuracy, "pert5 needs epsilon in (0, 1/2)");
  }
  const Pert5Bases bases = pert5_bases(a, b);
  return run_pert(LemmaId::pert5, pert_params(a, b, options), options,
                  [&](const SketchOperator& op, std::uint64_t) { return pert5_slack_with(bases, op, options.epsilon); });
}

LemmaCheckReport check_pert6(const DenseMatrix& a, const DenseMatrix& b, const PertOptions& options) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::RowCountMismatch, "A and B differ in row count");
  const Eigen::MatrixXd uc = concat_basis(a, b);
  return run_pert(LemmaId::pert6, pert_params(a, b, options), options, [&](const SketchOperator& op, std::uint64_t seed) {
    return pert6_slack_with(a, b, uc, op, options.epsilon, options.vectors_per_trial, seed);
  });
}

namespace {

Eigen::MatrixXd flat_basis(Index m, Index d) {
  if (!is_power_of_two(m)) throw Error(ErrorCode::NotPowerOfTwo, "flat basis needs m a power of two");
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(m, d);
  kernels::wht_columns(h);
  return h;
}

Eigen::MatrixXd fixed_basis_for(const EmbeddingOptions& o) {
  if (o.fixed_basis) return *o.fixed_basis;
  switch (o.basis) {
    case BasisKind::flat: return flat_basis(o.m, o.d);
    case BasisKind::coherent: return Eigen::MatrixXd::Identity(o.m, o.d);
    case BasisKind::random: break;
  }
  return {};
}

}  // namespace

LemmaCheckReport check_embedding(const EmbeddingOptions& o) {
  if (!(o.epsilon > 0.0 && o.epsilon < 1.0) || !(o.delta > 0.0 && o.delta < 1.0)) {
    throw Error(ErrorCode::InvalidAccuracy, "epsilon and delta must lie in (0, 1)");
  }
  if (o.trials < 1) throw Error(ErrorCode::InvalidSampleSize, "at least one trial is needed");
  const Eigen::MatrixXd fixed = fixed_basis_for(o);
  const Index m = fixed.size() ? fixed.rows() : o.m;
  const Index d = fixed.size() ? fixed.cols() : o.d;
  if (m < d) throw Error(ErrorCode::DimensionMismatch, "basis needs m >= d");

  LemmaCheckReport rep;
  rep.statistical = true;
  rep.lemma = o.kind == EmbeddingKind::countsketch ? LemmaId::cw_embedding : LemmaId::sampling_ortho;
  rep.expect_failure = o.kind == EmbeddingKind::uniform_no_rht;

  SketchKind kind = SketchKind::uniform;
  double window = o.epsilon;
  Index r = 0;
  switch (o.kind) {
    case EmbeddingKind::srht:
    case EmbeddingKind::uniform_no_rht: {
      const Index m_pad = next_power_of_two(m);
      r = sample_size_sampling_lemma(m_pad, rht_coherence_bound(m_pad, d, o.delta), d, o.epsilon, o.delta);
      if (o.kind == EmbeddingKind::srht) {
        kind = SketchKind::srht;
      } else {
        r = std::min(r, m);
      }
      break;
    }
    case EmbeddingKind::uniform: {
      const Eigen::MatrixXd u0 = fixed.size() ? fixed : random_orthonormal(m, d, derive_seed(o.seed, 0));
      r = sample_size_sampling_lemma(m, u0.rowwise().squaredNorm().maxCoeff(), d, o.epsilon, o.delta);
      break;
    }
    case EmbeddingKind::countsketch:
      kind = SketchKind::countsketch;
      window = o.epsilon / 3.0;
      {
        const double dd = static_cast<double>(d);
        const double raw = 243.0 * (dd * dd + dd) / (o.epsilon * o.epsilon * o.delta);
        r = raw < static_cast<double>(m) ? static_cast<Index>(std::ceil(raw)) : m;
      }
      break;
  }
  if (o.r_override) r = *o.r_override;

  rep.params.m = m;
  rep.params.n = d;
  rep.params.r = r;
  rep.params.epsilon = o.epsilon;
  rep.params.delta = o.delta;
  rep.params.seed = o.seed;
  rep.params.transform = std::string(to_string(o.kind));
  rep.params.input = o.fixed_basis ? "supplied"
                     : o.basis == BasisKind::flat     ? "flat"
                     : o.basis == BasisKind::coherent ? "coherent"
                                                      : "random";

  std::vector<double> slack(static_cast<std::size_t>(o.trials));
  const double lo = std::sqrt(1.0 - window);
  const double hi = std::sqrt(1.0 + window);
#pragma omp parallel for schedule(dynamic)
  for (Index t = 0; t < o.trials; ++t) {
    const auto seed = derive_seed(o.seed, static_cast<std::uint64_t>(t));
    const Eigen::MatrixXd u = fixed.size() ? fixed : random_orthonormal(m, d, seed);
    const SketchOperator op = SketchOperator::realize(kind, m, r, seed);
    Eigen::VectorXd s = singular_values(op.apply_values(u));
    if (s.size() < d) s.conservativeResizeLike(Eigen::VectorXd::Zero(d));
    slack[static_cast<std::size_t>(t)] = std::min(s.minCoeff() - lo, hi - s.maxCoeff());
  }
  for (double s : slack) {
    ++rep.trials;
    rep.worst_slack = std::min(rep.worst_slack, s);
    if (s < 0.0) ++rep.violations;
  }
  return rep;
}

LemmaCheckReport check_rht_coherence(Index m, Index n, double delta, Index trials, std::uint64_t seed) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::InvalidAccuracy, "delta must lie in (0, 1)");
  if (m < n || n < 1) throw Error(ErrorCode::DimensionMismatch, "need m >= n >= 1");
  const Index m_pad = next_power_of_two(m);
  // Gaussian columns with the first n rows inflated: leverage concentrates there.
  Eigen::MatrixXd a = gaussian_matrix(m, n, seed, streams::generator_base);
  a.topRows(n) *= 1e4;
  const double bound = rht_coherence_bound(m_pad, n, delta);

  LemmaCheckReport rep;
  rep.lemma = LemmaId::rht_coherence;
  rep.statistical = true;
  rep.params.m = m;
  rep.params.n = n;
  rep.params.r = m_pad;
  rep.params.delta = delta;
  rep.params.seed = seed;
  rep.params.transform = "rht";
  rep.params.input = "spiked";
  std::vector<double> slack(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(dynamic)
  for (Index t = 0; t < trials; ++t) {
    const auto s = derive_seed(seed, static_cast<std::uint64_t>(t));
    const SketchOperator op = SketchOperator::realize(SketchKind::srht, m, m_pad, s);
    const Eigen::MatrixXd u = thin_svd(op.apply_values(a)).U;
    slack[static_cast<std::size_t>(t)] = bound - u.rowwise().squaredNorm().maxCoeff();
  }
  for (double s : slack) {
    ++rep.trials;
    rep.worst_slack = std::min(rep.worst_slack, s);
    if (s < 0.0) ++rep.violations;
  }
  return rep;
}

std::vector<LemmaCheckReport> run_verification(std::string_view which, Index trials, std::uint64_t seed) {
  const bool all = which == "all";
  if (!all && which != "pert4" && which != "pert5" && which != "pert6" && which != "sampling" && which != "rht" &&
      which != "cw") {
    throw Error(ErrorCode::ParseError, "unknown lemma '" + std::string(which) + "'");
  }
  if (trials < 1) throw Error(ErrorCode::InvalidSampleSize, "trials must be positive");
  std::vector<LemmaCheckReport> out;

  if (all || which.starts_with("pert")) {
    const DenseMatrix a(gaussian_matrix(256, 3, seed, streams::generator_base + 10));
    const DenseMatrix b(gaussian_matrix(256, 2, seed, streams::generator_base + 11));
    PertOptions po;
    po.kind = SketchKind::srht;
    po.r = 128;
    po.epsilon = 0.45;
    po.target_trials = trials;
    po.max_attempts = 20 * trials;
    po.seed = seed;
    auto tag = [](LemmaCheckReport rep) {
      rep.params.input = "gaussian";
      return rep;
    };
    if (all || which == "pert4") out.push_back(tag(check_pert4(a, b, po)));
    if (all || which == "pert5") out.push_back(tag(check_pert5(a, b, po)));
    if (all || which == "pert6") out.push_back(tag(check_pert6(a, b, po)));
  }
  if (all || which == "sampling") {
    EmbeddingOptions eo;
    eo.trials = trials;
    eo.seed = seed;
    eo.epsilon = 0.5;
    eo.delta = 0.1;
    // flat leverage scores: plain uniform sampling is enough
    eo.kind = EmbeddingKind::uniform;
    eo.basis = BasisKind::flat;
    eo.m = 4096;
    eo.d = 8;
    out.push_back(check_embedding(eo));
    // coherent basis: the RHT flattens it first
    eo.kind = EmbeddingKind::srht;
    eo.basis = BasisKind::coherent;
    eo.m = 65536;
    eo.d = 2;
    out.push_back(check_embedding(eo));
    // same sample size without the RHT
    eo.kind = EmbeddingKind::uniform_no_rht;
    out.push_back(check_embedding(eo));
  }
  if (all || which == "rht") out.push_back(check_rht_coherence(4096, 8, 0.1, trials, seed));
  if (all || which == "cw") {
    EmbeddingOptions eo;
    eo.kind = EmbeddingKind::countsketch;
    eo.basis = BasisKind::random;
    eo.m = 65536;
    eo.d = 4;
    eo.epsilon = 0.3;
    eo.delta = 0.5;
    eo.trials = trials;
    eo.seed = seed;
    out.push_back(check_embedding(eo));
  }
  return out;
}

}  // namespace fastcca
