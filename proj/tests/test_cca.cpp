#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fastcca/cca.hpp"
#include "support.hpp"

using namespace fastcca;
namespace ts = testing_support;

namespace {

Eigen::MatrixXd unit(Index m, Index i) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(m, 1);
  e(i, 0) = 1.0;
  return e;
}

void check_result_invariants(const CcaResult& r, const DenseMatrix& a, const DenseMatrix& b) {
  const Index q = r.size();
  CHECK(q == std::min(r.rank_a, r.rank_b));
  for (Index i = 0; i < q; ++i) {
    CHECK(r.correlations(i) >= 0.0);
    CHECK(r.correlations(i) <= 1.0 + 1e-8);
    if (i) CHECK(r.correlations(i) <= r.correlations(i - 1));
  }
  const Eigen::MatrixXd aw = a.values() * r.weights_a;
  const Eigen::MatrixXd bp = b.values() * r.weights_b;
  CHECK((aw.transpose() * aw - Eigen::MatrixXd::Identity(q, q)).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((bp.transpose() * bp - Eigen::MatrixXd::Identity(q, q)).cwiseAbs().maxCoeff() < 1e-7);
  // diag((AW)^T (BP)) carries the correlations; off-diagonal terms vanish
  const Eigen::MatrixXd cross = aw.transpose() * bp;
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < q; ++j) CHECK(std::abs(cross(i, j) - (i == j ? r.correlations(i) : 0.0)) < 1e-8);
}

}  // namespace

TEST_CASE("identical inputs have all correlations 1") {
  const DenseMatrix a = ts::dense(30, 4, 1);
  const CcaResult r = exact_cca(a, a);
  CHECK(r.size() == 4);
  for (Index i = 0; i < 4; ++i) CHECK(r.correlations(i) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("orthogonal ranges have correlation 0") {
  const CcaResult r = exact_cca(DenseMatrix(unit(4, 0)), DenseMatrix(unit(4, 1)));
  REQUIRE(r.size() == 1);
  CHECK(r.correlations(0) == doctest::Approx(0.0));
}

TEST_CASE("exact_cca against the generalized eigenproblem") {
  const DenseMatrix a = ts::dense(10, 3, 2);
  const DenseMatrix b = ts::dense(10, 2, 3);
  const CcaResult r = exact_cca(a, b);
  const Eigen::VectorXd oracle = ts::geneig_correlations(a.values(), b.values());
  CHECK((r.correlations - oracle).cwiseAbs().maxCoeff() < 1e-8);
  check_result_invariants(r, a, b);
}

TEST_CASE("exact_cca on random small instances") {
  std::mt19937_64 gen(2024);
  for (int t = 0; t < 100; ++t) {
    const Index m = 20 + static_cast<Index>(gen() % 181);
    const Index n = 1 + static_cast<Index>(gen() % 8);
    const Index l = 1 + static_cast<Index>(gen() % 8);
    const DenseMatrix a = ts::dense(m, n, gen());
    const DenseMatrix b = ts::dense(m, l, gen());
    const CcaResult r = exact_cca(a, b);
    CHECK((r.correlations - ts::geneig_correlations(a.values(), b.values())).cwiseAbs().maxCoeff() < 1e-8);
    check_result_invariants(r, a, b);
  }
}

TEST_CASE("QR bases give the same correlations") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const DenseMatrix a = ts::dense(40, 5, s);
    const DenseMatrix b = ts::dense(40, 3, s + 100);
    const CcaResult svd = exact_cca(a, b);
    const CcaResult qr = exact_cca(a, b, {std::nullopt, BasisMethod::qr});
    CHECK((svd.correlations - qr.correlations).cwiseAbs().maxCoeff() < 1e-10);
    check_result_invariants(qr, a, b);
  }
}

TEST_CASE("sides are swapped when rank(A) < rank(B)") {
  const DenseMatrix a = ts::dense(25, 2, 7);
  const DenseMatrix b = ts::dense(25, 5, 8);
  const CcaResult r = exact_cca(a, b);
  CHECK(r.weights_a.rows() == 2);
  CHECK(r.weights_b.rows() == 5);
  CHECK(r.rank_a == 2);
  CHECK(r.rank_b == 5);
  CHECK(r.size() == 2);
  check_result_invariants(r, a, b);
  const CcaResult flipped = exact_cca(b, a);
  CHECK((flipped.correlations - r.correlations).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rank-deficient A uses its numerical rank") {
  Eigen::MatrixXd x = ts::gaussian(30, 4, 3);
  x.col(3) = x.col(0) - x.col(1);
  const DenseMatrix a(x);
  const DenseMatrix b = ts::dense(30, 3, 4);
  const CcaResult r = exact_cca(a, b);
  CHECK(r.rank_a == 3);
  CHECK(r.size() == 3);
  check_result_invariants(r, a, b);
}

TEST_CASE("exact_cca errors") {
  CHECK_THROWS_AS(exact_cca(ts::dense(5, 1, 1), ts::dense(6, 1, 1)), Error);
  try {
    exact_cca(DenseMatrix(5, 2), ts::dense(5, 1, 1));
    FAIL("expected RankZero");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RankZero);
    CHECK(e.is_numerical());
  }
  try {
    exact_cca(DenseMatrix(5, 0), ts::dense(5, 1, 1));
    FAIL("expected EmptyMatrix");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyMatrix);
  }
}

TEST_CASE("unitary invariance") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const DenseMatrix a = ts::dense(24, 4, s);
    const DenseMatrix b = ts::dense(24, 3, s + 9);
    const Eigen::MatrixXd q = ts::random_orthogonal(24, s + 99);
    const auto r1 = exact_cca(a, b).correlations;
    const auto r2 = exact_cca(DenseMatrix(q * a.values()), DenseMatrix(q * b.values())).correlations;
    CHECK((r1 - r2).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("column scaling leaves correlations unchanged") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const DenseMatrix a = ts::dense(30, 4, s);
    const DenseMatrix b = ts::dense(30, 2, s + 1);
    Eigen::VectorXd c(4);
    for (int i = 0; i < 4; ++i) c(i) = u(gen);
    const DenseMatrix scaled(a.values() * c.asDiagonal());
    CHECK((exact_cca(a, b).correlations - exact_cca(scaled, b).correlations).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("exact_cca is deterministic") {
  const DenseMatrix a = ts::dense(50, 6, 1);
  const DenseMatrix b = ts::dense(50, 4, 2);
  const CcaResult r1 = exact_cca(a, b);
  const CcaResult r2 = exact_cca(a, b);
  CHECK(r1.correlations == r2.correlations);
  CHECK(r1.weights_a == r2.weights_a);
  CHECK(r1.weights_b == r2.weights_b);
}

TEST_CASE("definition oracle: single identical column") {
  const DenseMatrix a = ts::dense(6, 1, 3);
  const Eigen::VectorXd s = cca_definition_oracle(a, a, 360);
  REQUIRE(s.size() == 1);
  CHECK(s(0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("definition oracle: 45 degree principal angle") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(4, 2);
  a(0, 0) = 1;
  a(1, 1) = 1;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 2);
  b(0, 0) = 1;
  b(1, 1) = b(2, 1) = 1 / std::sqrt(2.0);
  const Eigen::VectorXd s = cca_definition_oracle(DenseMatrix(a), DenseMatrix(b), 3600);
  REQUIRE(s.size() == 2);
  CHECK(std::abs(s(0) - 1.0) < 10.0 / 3600);
  CHECK(std::abs(s(1) - std::cos(M_PI / 4)) < 10.0 / 3600);
}

TEST_CASE("definition oracle matches exact_cca on random 8 x 2 pairs") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const DenseMatrix a = ts::dense(8, 2, s);
    const DenseMatrix b = ts::dense(8, 2, s + 40);
    const Eigen::VectorXd o = cca_definition_oracle(a, b, 10000);
    CHECK((o - exact_cca(a, b).correlations).cwiseAbs().maxCoeff() < 1e-2);
  }
}

TEST_CASE("definition oracle handles three columns") {
  const DenseMatrix a = ts::dense(9, 3, 61);
  const DenseMatrix b = ts::dense(9, 2, 62);
  const Eigen::VectorXd o = cca_definition_oracle(a, b, 720);
  CHECK((o - exact_cca(a, b).correlations).cwiseAbs().maxCoeff() < 10.0 / 720);
}

TEST_CASE("definition oracle limits") {
  CHECK_THROWS_AS(cca_definition_oracle(ts::dense(9, 4, 1), ts::dense(9, 1, 2)), Error);
  CHECK_THROWS_AS(cca_definition_oracle(ts::dense(9, 1, 1), ts::dense(9, 1, 2), 100), Error);
}

TEST_CASE("coherence examples") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(10, 3);
  x.topRows(3) = Eigen::MatrixXd::Identity(3, 3);
  CHECK(coherence(DenseMatrix(x)) == doctest::Approx(1.0));

  // first 4 columns of the normalized 16 x 16 Hadamard matrix
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(16, 4);
  for (Index i = 0; i < 16; ++i)
    for (Index j = 0; j < 4; ++j) h(i, j) = (__builtin_popcountll(static_cast<unsigned long long>(i & j)) % 2 ? -1.0 : 1.0) / 4.0;
  CHECK(coherence(DenseMatrix(h)) == doctest::Approx(4.0 / 16.0));

  const Eigen::MatrixXd ones = Eigen::VectorXd::Ones(12) * Eigen::RowVector3d(1.0, -2.0, 0.5);
  CHECK(coherence(DenseMatrix(ones)) == doctest::Approx(1.0 / 12.0));

  CHECK_THROWS_AS(coherence(DenseMatrix(5, 2)), Error);
}

TEST_CASE("coherence bounds and basis invariance") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const DenseMatrix a = ts::dense(40, 3, s);
    const double mu = coherence(a);
    CHECK(mu >= 3.0 / 40.0 - 1e-15);
    CHECK(mu <= 1.0 + 1e-15);
    const Eigen::MatrixXd m = ts::gaussian(3, 3, s + 500);
    CHECK(std::abs(coherence(DenseMatrix(a.values() * m)) - mu) < 1e-10);
    const Eigen::VectorXd lev = leverage_scores(a);
    CHECK(lev.sum() == doctest::Approx(3.0));
  }
}

TEST_CASE("concat_coherence examples") {
  const DenseMatrix a = ts::dense(64, 2, 1);
  const auto same = concat_coherence(a, a);
  CHECK(same.mu == doctest::Approx(coherence(a)).epsilon(1e-10));
  CHECK(same.omega == 2);

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(8, 2);
  x.topRows(2) = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(8, 2);
  y.bottomRows(2) = Eigen::MatrixXd::Identity(2, 2);
  const auto disjoint = concat_coherence(DenseMatrix(x), DenseMatrix(y));
  CHECK(disjoint.mu == doctest::Approx(1.0));
  CHECK(disjoint.omega == 4);

  for (std::uint64_t s = 0; s < 10; ++s) {
    const DenseMatrix p = ts::dense(64, 2, s);
    const DenseMatrix q = ts::dense(64, 3, s + 7);
    const auto c = concat_coherence(p, q);
    CHECK(c.mu >= std::max(coherence(p), coherence(q)) - 1e-12);
    CHECK(c.omega == 5);
  }
}

TEST_CASE("vector_correlation") {
  Eigen::VectorXd u(3), v(3);
  u << 1, 0, 0;
  v << 1, 1, 0;
  CHECK(vector_correlation(u, v) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(vector_correlation(u, -v) == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(vector_correlation(u, Eigen::VectorXd::Zero(3)) == 0.0);
}
