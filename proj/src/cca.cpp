#include "fastcca/cca.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace fastcca {

std::string_view to_string(CcaMethod method) {
  switch (method) {
    case CcaMethod::exact: return "exact";
    case CcaMethod::srht: return "srht";
    case CcaMethod::countsketch: return "countsketch";
    case CcaMethod::uniform: return "uniform";
  }
  return "unknown";
}

namespace {

// Orthonormal basis Q of range(X) plus T with X T = Q.
struct RangeBasis {
  Eigen::MatrixXd q;
  Eigen::MatrixXd to_weights;
};

RangeBasis svd_basis(const Eigen::MatrixXd& x, RankTol tol) {
  ThinSvd svd = thin_svd(x, tol);
  RangeBasis out;
  out.to_weights = svd.V * svd.singular_values.cwiseInverse().asDiagonal();
  out.q = std::move(svd.U);
  return out;
}

RangeBasis qr_basis(const Eigen::MatrixXd& x, RankTol tol) {
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::EmptyMatrix, "matrix has a zero dimension");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(tol.value_or(default_rank_tol(x.rows(), x.cols())));
  const Index p = qr.rank();
  RangeBasis out;
  out.q = Eigen::MatrixXd::Identity(x.rows(), p);
  out.q.applyOnTheLeft(qr.householderQ());
  // X P = Q R  =>  X P [R11^{-1}; 0] = Q1
  Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(x.cols(), p);
  inv.topRows(p) = qr.matrixQR()
                       .topLeftCorner(p, p)
                       .triangularView<Eigen::Upper>()
                       .solve(Eigen::MatrixXd::Identity(p, p));
  out.to_weights = qr.colsPermutation() * inv;
  return out;
}

}  // namespace

CcaResult exact_cca(const DenseMatrix& a, const DenseMatrix& b, const ExactOptions& options) {
  if (a.rows() != b.rows()) {
    throw Error(ErrorCode::RowCountMismatch,
                "A has " + std::to_string(a.rows()) + " rows, B has " + std::to_string(b.rows()));
  }
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyMatrix, "CCA needs nonempty inputs");

  auto basis = [&](const Eigen::MatrixXd& x) {
    return options.basis == BasisMethod::svd ? svd_basis(x, options.rank_tol) : qr_basis(x, options.rank_tol);
  };
  RangeBasis ba = basis(a.values());
  RangeBasis bb = basis(b.values());
  const Index p = ba.q.cols();
  const Index q_b = bb.q.cols();
  if (p == 0 || q_b == 0) throw Error(ErrorCode::RankZero, "an input matrix has numerical rank 0");

  // Keep the higher-rank side first so the inner SVD is tall.
  const bool swapped = p < q_b;
  if (swapped) std::swap(ba, bb);

  const Eigen::MatrixXd inner = ba.q.transpose() * bb.q;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(inner, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index q = std::min(p, q_b);

  CcaResult out;
  out.correlations = svd.singularValues().head(q).cwiseMax(0.0).cwiseMin(1.0);
  Eigen::MatrixXd wa = ba.to_weights * svd.matrixU().leftCols(q);
  Eigen::MatrixXd wb = bb.to_weights * svd.matrixV().leftCols(q);
  if (swapped) std::swap(wa, wb);
  out.weights_a = std::move(wa);
  out.weights_b = std::move(wb);
  out.rank_a = p;
  out.rank_b = q_b;
  out.method = CcaMethod::exact;
  return out;
}

double vector_correlation(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::abs(u.dot(v)) / (nu * nv);
}

namespace {

using Vec3 = std::array<double, 3>;

// Point on the unit sphere in R^d (d <= 3), covering every direction up to sign.
Vec3 sphere_point(Index d, const double* angles) {
  if (d == 1) return {1.0, 0.0, 0.0};
  if (d == 2) return {std::cos(angles[0]), std::sin(angles[0]), 0.0};
  const double st = std::sin(angles[0]);
  return {std::cos(angles[0]), st * std::cos(angles[1]), st * std::sin(angles[1])};
}

// Columns spanning {x : c^T x = 0 for every row c of constraints}.
Eigen::MatrixXd constrained_basis(Index n, const std::vector<Eigen::VectorXd>& constraint_rows) {
  if (constraint_rows.empty()) return Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd c(static_cast<Index>(constraint_rows.size()), n);
  for (std::size_t k = 0; k < constraint_rows.size(); ++k) c.row(static_cast<Index>(k)) = constraint_rows[k].transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Index rank = 0;
  while (rank < s.size() && s(rank) > 1e-12 * s(0)) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

double quad(const Eigen::MatrixXd& g, const Vec3& u, Index d) {
  double s = 0.0;
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) s += u[i] * g(i, j) * u[j];
  return s;
}

double bilinear(const Eigen::MatrixXd& m, const Vec3& u, Index du, const Vec3& v, Index dv) {
  double s = 0.0;
  for (Index i = 0; i < du; ++i)
    for (Index j = 0; j < dv; ++j) s += u[i] * m(i, j) * v[j];
  return s;
}

struct GridPoint {
  Vec3 dir;
  double quad;
};

// All grid directions of the unit sphere in R^d with g steps per angle.
std::vector<GridPoint> sphere_grid(Index d, Index g, const Eigen::MatrixXd& gram) {
  std::vector<GridPoint> pts;
  const double h = std::numbers::pi / static_cast<double>(g);
  const Index n_angles = d - 1;
  const Index total = n_angles == 0 ? 1 : (n_angles == 1 ? g : g * g);
  pts.reserve(static_cast<std::size_t>(total));
  for (Index k = 0; k < total; ++k) {
    const double t[2] = {h * static_cast<double>(k % g), h * static_cast<double>(k / g)};
    const Vec3 u = sphere_point(d, t);
    pts.push_back({u, quad(gram, u, d)});
  }
  return pts;
}

}  // namespace

Eigen::VectorXd cca_definition_oracle(const DenseMatrix& a, const DenseMatrix& b, Index grid) {
  if (a.rows() != b.rows()) throw Error(ErrorCode::RowCountMismatch, "A and B need equal row counts");
  if (a.cols() > 3 || b.cols() > 3) throw Error(ErrorCode::TooLarge, "definition oracle supports at most 3 columns per side");
  if (grid < 360) throw Error(ErrorCode::InvalidAccuracy, "grid must be at least 360");

  const Eigen::MatrixXd ga = a.values().transpose() * a.values();
  const Eigen::MatrixXd gb = b.values().transpose() * b.values();
  const Eigen::MatrixXd cross = a.values().transpose() * b.values();
  const Index q = std::min(numerical_rank(a.values()), numerical_rank(b.values()));
  if (q == 0) throw Error(ErrorCode::RankZero, "an input matrix has numerical rank 0");

  std::vector<Eigen::VectorXd> cons_x, cons_y;
  Eigen::VectorXd out(q);
  for (Index level = 0; level < q; ++level) {
    const Eigen::MatrixXd zx = constrained_basis(a.cols(), cons_x);
    const Eigen::MatrixXd zy = constrained_basis(b.cols(), cons_y);
    const Index dx = zx.cols();
    const Index dy = zy.cols();
    // The search runs in the coordinates of the constrained subspaces.
    const Eigen::MatrixXd ga_z = zx.transpose() * ga * zx;
    const Eigen::MatrixXd gb_z = zy.transpose() * gb * zy;
    const Eigen::MatrixXd m_z = zx.transpose() * cross * zy;

    auto value = [&](const Vec3& u, double qu, const Vec3& v, double qv) {
      if (qu <= 0.0 || qv <= 0.0) return 0.0;
      return std::abs(bilinear(m_z, u, dx, v, dy)) / std::sqrt(qu * qv);
    };

    const Index nx = dx - 1;
    const Index n_angles = nx + dy - 1;
    std::array<double, 4> best{};
    double best_val = -1.0;
    if (n_angles == 0) {
      const Vec3 e = sphere_point(1, nullptr);
      best_val = value(e, quad(ga_z, e, 1), e, quad(gb_z, e, 1));
    } else {
      // Per-angle resolution, bounded so the product grid stays near 4e6 points.
      const double budget = 4.0e6;
      const auto g = static_cast<Index>(std::max(
          8.0, std::min(static_cast<double>(grid), std::floor(std::pow(budget, 1.0 / static_cast<double>(n_angles))))));
      const auto xs = sphere_grid(dx, g, ga_z);
      const auto ys = sphere_grid(dy, g, gb_z);
      std::size_t bi = 0, bj = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = 0; j < ys.size(); ++j) {
          const double v = value(xs[i].dir, xs[i].quad, ys[j].dir, ys[j].quad);
          if (v > best_val) {
            best_val = v;
            bi = i;
            bj = j;
          }
        }
      }
      const double h = std::numbers::pi / static_cast<double>(g);
      const auto gi = static_cast<Index>(bi);
      const auto gj = static_cast<Index>(bj);
      if (nx >= 1) best[0] = h * static_cast<double>(gi % g);
      if (nx == 2) best[1] = h * static_cast<double>(gi / g);
      if (dy >= 2) best[nx] = h * static_cast<double>(gj % g);
      if (dy == 3) best[nx + 1] = h * static_cast<double>(gj / g);

      auto eval = [&](const std::array<double, 4>& t) {
        const Vec3 u = sphere_point(dx, t.data());
        const Vec3 v = sphere_point(dy, t.data() + nx);
        return value(u, quad(ga_z, u, dx), v, quad(gb_z, v, dy));
      };
      // Compass refinement down to a fraction of the requested resolution.
      const double stop = std::numbers::pi / (10.0 * static_cast<double>(grid));
      for (double step = h; step > stop; step *= 0.5) {
        bool improved = true;
        while (improved) {
          improved = false;
          for (Index k = 0; k < n_angles; ++k) {
            for (double dir : {1.0, -1.0}) {
              auto trial = best;
              trial[k] += dir * step;
              const double v = eval(trial);
              if (v > best_val) {
                best_val = v;
                best = trial;
                improved = true;
              }
            }
          }
        }
      }
    }
    const Vec3 u = sphere_point(dx, best.data());
    const Vec3 v = sphere_point(dy, best.data() + nx);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(a.cols());
    Eigen::VectorXd y = Eigen::VectorXd::Zero(b.cols());
    for (Index i = 0; i < dx; ++i) x += u[i] * zx.col(i);
    for (Index i = 0; i < dy; ++i) y += v[i] * zy.col(i);
    out(level) = std::min(best_val, 1.0);
    cons_x.push_back(ga * x);
    cons_y.push_back(gb * y);
  }
  return out;
}

Eigen::VectorXd leverage_scores(const DenseMatrix& x, RankTol rank_tol) {
  if (x.rows() < 1) throw Error(ErrorCode::EmptyMatrix, "coherence needs at least one row");
  const ThinSvd svd = thin_svd(x, rank_tol);
  if (svd.rank() == 0) throw Error(ErrorCode::RankZero, "matrix has numerical rank 0");
  return svd.U.rowwise().squaredNorm();
}

double coherence(const DenseMatrix& x, RankTol rank_tol) { return leverage_scores(x, rank_tol).maxCoeff(); }

ConcatCoherence concat_coherence(const DenseMatrix& a, const DenseMatrix& b, RankTol rank_tol) {
  const DenseMatrix c = hconcat(a, b);
  const ThinSvd svd = thin_svd(c, rank_tol);
  if (svd.rank() == 0) throw Error(ErrorCode::RankZero, "[A ; B] has numerical rank 0");
  return {svd.U.rowwise().squaredNorm().maxCoeff(), svd.rank()};
}

}  // namespace fastcca
