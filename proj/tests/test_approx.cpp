#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fastcca/approx.hpp"
#include "support.hpp"

using namespace fastcca;
namespace ts = testing_support;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no fastcca::Error thrown");
  return ErrorCode::NonFinite;
}

// B shares most of A's column space.
std::pair<DenseMatrix, DenseMatrix> correlated_pair(Index m, Index n, std::uint64_t seed, double noise = 0.3) {
  const Eigen::MatrixXd a = ts::gaussian(m, n, seed);
  const Eigen::MatrixXd b = a * ts::gaussian(n, n, seed + 1) + noise * ts::gaussian(m, n, seed + 2);
  return {DenseMatrix(a), DenseMatrix(b)};
}

// Gaussian columns with the first rows inflated, so leverage is concentrated.
DenseMatrix spiked(Index m, Index n, std::uint64_t seed) {
  Eigen::MatrixXd a = ts::gaussian(m, n, seed);
  a.topRows(n) *= 50.0;
  return DenseMatrix(a);
}

SparseMatrix random_sparse(Index m, Index n, double density, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution keep(density);
  std::normal_distribution<double> nd;
  std::vector<SparseMatrix::Triplet> t;
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j)
      if (keep(gen)) t.push_back({i, j, nd(gen)});
  return SparseMatrix::from_triplets(m, n, std::move(t));
}

}  // namespace

TEST_CASE("sample_size_srht theory mode") {
  // reference values from 40-digit evaluation of the formula
  CHECK(sample_size_srht(Index{1} << 22, 30, 30, 0.25, 0.05, SizeMode::theory) == 3009305);
  CHECK(sample_size_srht(Index{1} << 30, 30, 30, 0.25, 0.05, SizeMode::theory) == 3500774);
  // 2882827.7... exceeds m = 2^20
  CHECK(sample_size_srht(Index{1} << 20, 30, 30, 0.25, 0.05, SizeMode::theory) == Index{1} << 20);
  CHECK(sample_size_srht(4096, 8, 8, 0.25, 0.1, SizeMode::theory) == 4096);
}

TEST_CASE("sample_size_srht practical mode") {
  CHECK(sample_size_srht(Index{1} << 20, 30, 30, 0.25, 0.05, SizeMode::practical) == 15935);
  CHECK(sample_size_srht(Index{1} << 15, 60, 60, 0.25, 0.05, SizeMode::practical) == 26597);
  CHECK(sample_size_srht(Index{1} << 17, 60, 60, 0.25, 0.05, SizeMode::practical) == 27274);
  // 30103 before the cap
  CHECK(sample_size_srht(Index{1} << 14, 80, 60, 0.25, 0.05, SizeMode::practical) == Index{1} << 14);
  CHECK(sample_size_srht(10, 1, 1, 0.25, 0.05, SizeMode::practical) == 10);
}

TEST_CASE("practical sample size never exceeds theory") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> eps(0.01, 0.49), delta(0.001, 0.99);
  for (int t = 0; t < 500; ++t) {
    const Index m = 1 + static_cast<Index>(gen() % (Index{1} << 30));
    const Index n = 1 + static_cast<Index>(gen() % 200);
    const Index l = 1 + static_cast<Index>(gen() % 200);
    const double e = eps(gen), d = delta(gen);
    CHECK(sample_size_srht(m, n, l, e, d, SizeMode::practical) <= sample_size_srht(m, n, l, e, d, SizeMode::theory));
  }
}

TEST_CASE("sample_size_cw") {
  CHECK(sample_size_cw(2, 2, 0.25, 0.5, Index{1} << 40) == 155520);
  CHECK(sample_size_cw(2, 2, 0.25, 0.5, 100) == 100);
  CHECK(sample_size_cw(4, 4, 0.3, 0.5, 65536) == 65536);
  CHECK(code_of([] { sample_size_cw(1, 1, 0.34, 0.5, 100); }) == ErrorCode::InvalidAccuracy);
}

TEST_CASE("sample_size_uniform") {
  // 54 * 16 * 3 * ln(360) = 15256.78...
  const Index m = Index{1} << 20;
  CHECK(sample_size_uniform(m, 3.0 / static_cast<double>(m), 3, 0.25, 0.1) == 15257);
  CHECK(sample_size_uniform(64, 1.0, 3, 0.25, 0.1) == 64);
}

TEST_CASE("accuracy parameters are validated") {
  CHECK(code_of([] { sample_size_srht(100, 1, 1, 0.5, 0.1, SizeMode::theory); }) == ErrorCode::InvalidAccuracy);
  CHECK(code_of([] { sample_size_srht(100, 1, 1, 0.0, 0.1, SizeMode::theory); }) == ErrorCode::InvalidAccuracy);
  CHECK(code_of([] { sample_size_srht(100, 1, 1, 0.25, 1.0, SizeMode::practical); }) == ErrorCode::InvalidAccuracy);
  ApproxConfig c;
  c.transform = SketchKind::countsketch;
  c.epsilon = 0.34;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::InvalidAccuracy);
  c.transform = SketchKind::srht;
  c.epsilon = 0.5;
  c.size_mode = SizeMode::theory;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::InvalidAccuracy);
  c.size_mode = SizeMode::practical;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("approx_cca with B = A") {
  const DenseMatrix a = ts::dense(5000, 4, 1);
  for (auto kind : {SketchKind::srht, SketchKind::countsketch, SketchKind::uniform}) {
    ApproxConfig cfg;
    cfg.transform = kind;
    cfg.seed = 3;
    if (kind == SketchKind::uniform) cfg.r_override = 800;
    if (kind == SketchKind::countsketch) cfg.r_override = 2000;
    const auto out = approx_cca(a, a, cfg);
    for (Index i = 0; i < out.result.size(); ++i) {
      CHECK(out.result.correlations(i) >= 1.0 - (0.25 + 2 * 0.0625 / 9));
      CHECK(out.result.correlations(i) <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("approx_cca with full srht sampling is a rotation") {
  const auto [a, b] = correlated_pair(1024, 5, 4);
  ApproxConfig cfg;
  cfg.r_override = 1024;
  const auto out = approx_cca(a, b, cfg);
  CHECK(out.result.method == CcaMethod::srht);
  CHECK((out.result.correlations - exact_cca(a, b).correlations).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("approx_cca errors") {
  ApproxConfig cfg;
  CHECK(code_of([&] { approx_cca(ts::dense(10, 1, 1), ts::dense(11, 1, 1), cfg); }) == ErrorCode::RowCountMismatch);
  cfg.r_override = 11;
  CHECK(code_of([&] { approx_cca(ts::dense(10, 1, 1), ts::dense(10, 1, 2), cfg); }) == ErrorCode::InvalidSampleSize);
  cfg.r_override = 3;
  cfg.transform = SketchKind::uniform;
  CHECK(code_of([&] { approx_cca(ts::dense(1000, 5, 1), ts::dense(1000, 2, 2), cfg); }) == ErrorCode::RankCollapse);
  cfg.epsilon = 0.7;
  CHECK(code_of([&] { approx_cca(ts::dense(1000, 5, 1), ts::dense(1000, 2, 2), cfg); }) == ErrorCode::InvalidAccuracy);
}

TEST_CASE("approx_cca is deterministic") {
  const auto [a, b] = correlated_pair(3000, 6, 7);
  for (auto kind : {SketchKind::srht, SketchKind::countsketch, SketchKind::uniform}) {
    ApproxConfig cfg;
    cfg.transform = kind;
    cfg.seed = 99;
    cfg.r_override = 700;
    const auto r1 = approx_cca(a, b, cfg).result;
    cfg.exec = Exec::serial;
    const auto r2 = approx_cca(a, b, cfg).result;
    CHECK(r1.correlations == r2.correlations);
    CHECK(r1.weights_a == r2.weights_a);
    CHECK(r1.weights_b == r2.weights_b);
  }
}

TEST_CASE("diagnostics: symmetric gram matrices and condition numbers") {
  const auto [a, b] = correlated_pair(4096, 5, 12);
  ApproxConfig cfg;
  cfg.seed = 1;
  const auto out = approx_cca(a, b, cfg);
  const auto& d = out.diagnostics;
  CHECK(d.r_used == sample_size_srht(4096, 5, 5, 0.25, 0.05, SizeMode::practical));
  CHECK((d.gram_a - d.gram_a.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((d.gram_b - d.gram_b.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  const Eigen::MatrixXd aw = a.values() * out.result.weights_a;
  CHECK((d.gram_a - aw.transpose() * aw).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(d.cond_aw == doctest::Approx(condition_number(aw)).epsilon(1e-6));
  CHECK(d.cond_aw >= 1.0);
  CHECK(d.entries_touched == static_cast<std::uint64_t>(4096 * 10));
}

TEST_CASE("uniform path derives r from the concatenated coherence") {
  const auto [a, b] = correlated_pair(1 << 16, 2, 5);
  ApproxConfig cfg;
  cfg.transform = SketchKind::uniform;
  cfg.epsilon = 0.45;
  cfg.delta = 0.2;
  const auto out = approx_cca(a, b, cfg);
  REQUIRE(out.diagnostics.concat_coherence);
  const auto cc = concat_coherence(a, b);
  CHECK(*out.diagnostics.concat_coherence == cc.mu);
  CHECK(*out.diagnostics.concat_rank == 4);
  CHECK(out.diagnostics.r_used == sample_size_uniform(1 << 16, cc.mu, 4, 0.45, 0.2));
}

TEST_CASE("sparse CountSketch reads every stored entry exactly once") {
  const SparseMatrix a = random_sparse(20000, 4, 0.02, 1);
  const SparseMatrix b = random_sparse(20000, 3, 0.02, 2);
  ApproxConfig cfg;
  cfg.transform = SketchKind::countsketch;
  cfg.epsilon = 0.3;
  cfg.delta = 0.5;
  cfg.r_override = 5000;
  const auto out = approx_cca(a, b, cfg);
  CHECK(out.diagnostics.entries_touched == a.nnz() + b.nnz());
  // same answer as the dense path
  const auto dense = approx_cca(a.to_dense(), b.to_dense(), cfg);
  CHECK((out.result.correlations - dense.result.correlations).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("check_eta_approx on the exact answer") {
  const auto [a, b] = correlated_pair(200, 4, 3);
  const CcaResult e = exact_cca(a, b);
  const EtaReport rep = check_eta_approx(e, e, a, b, 1e-10);
  CHECK(rep.all());
  CHECK(rep.correlations.worst_slack == doctest::Approx(1e-10).epsilon(1e-6));
  CHECK(rep.orthonormal.worst_slack > 0.0);
  CHECK(rep.directions.worst_slack > 0.0);
}

TEST_CASE("check_eta_approx flags a perturbed correlation only in clause (a)") {
  const auto [a, b] = correlated_pair(200, 4, 3);
  const CcaResult e = exact_cca(a, b);
  const double eta = 0.01;
  CcaResult bad = e;
  bad.correlations(1) -= 2 * eta;
  const EtaReport ref = check_eta_approx(e, e, a, b, eta);
  const EtaReport rep = check_eta_approx(e, bad, a, b, eta);
  CHECK_FALSE(rep.correlations.pass);
  CHECK(rep.correlations.worst_slack == doctest::Approx(-eta).epsilon(1e-6));
  CHECK(rep.orthonormal.pass);
  CHECK(rep.directions.pass);
  CHECK(rep.orthonormal.worst_slack == ref.orthonormal.worst_slack);
  CHECK(rep.directions.worst_slack == ref.directions.worst_slack);
}

TEST_CASE("check_eta_approx dimension checks") {
  const auto [a, b] = correlated_pair(100, 3, 1);
  const CcaResult e = exact_cca(a, b);
  CHECK(code_of([&] { check_eta_approx(e, e, ts::dense(100, 2, 1), b, 0.1); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("sketched CCA on coherent pairs is an eta-approximate CCA") {
  const double eps = 0.25, delta = 0.1;
  const double eta = eps + 2 * eps * eps / 9 + 1e-12;
  const DenseMatrix a = spiked(4096, 3, 8);
  const DenseMatrix b(a.values() * ts::gaussian(3, 3, 9) + 0.5 * ts::gaussian(4096, 3, 10));
  const CcaResult e = exact_cca(a, b);
  int ok = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    ApproxConfig cfg;
    cfg.epsilon = eps;
    cfg.delta = delta;
    cfg.seed = static_cast<std::uint64_t>(t);
    const auto out = approx_cca(a, b, cfg);
    ok += check_eta_approx(e, out.result, a, b, eta).all();
  }
  CHECK(ok >= static_cast<int>((1 - delta) * trials));
}

TEST_CASE("guarantee clauses with uniform sampling of low-coherence inputs") {
  const double eps = 0.25, delta = 0.1;
  const Index m = 1 << 18;
  const auto [a, b] = correlated_pair(m, 2, 21, 0.8);
  const auto cc = concat_coherence(a, b);
  const Index r = sample_size_uniform(m, cc.mu, cc.omega, eps, delta);
  REQUIRE(r < m);
  const CcaResult e = exact_cca(a, b);
  int ca = 0, cb = 0, cc3 = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    ApproxConfig cfg;
    cfg.transform = SketchKind::uniform;
    cfg.epsilon = eps;
    cfg.delta = delta;
    cfg.seed = static_cast<std::uint64_t>(1000 + t);
    const auto out = approx_cca(a, b, cfg);
    CHECK(out.diagnostics.r_used == r);
    const auto rep = check_guarantee(e, out.result, a, b, eps);
    CHECK_FALSE(rep.bracket_inverted);
    ca += rep.correlations.pass;
    cb += rep.orthonormal.pass;
    cc3 += rep.directions.pass;
  }
  const int need = static_cast<int>((1 - delta) * trials);
  CHECK(ca >= need);
  CHECK(cb >= need);
  CHECK(cc3 >= need);
}

TEST_CASE("independently seeded operators break clause (a)") {
  // Guard for the shared-operator design: sketching the two sides with
  // different realizations decorrelates them.
  const double eps = 0.25;
  const auto [a, b] = correlated_pair(4096, 3, 31, 0.05);
  const CcaResult e = exact_cca(a, b);
  REQUIRE(e.correlations(2) > 0.9);
  int shared_ok = 0, split_ok = 0;
  for (int t = 0; t < 20; ++t) {
    const Index r = sample_size_srht(4096, 3, 3, eps, 0.1, SizeMode::practical);
    const auto op1 = SketchOperator::realize(SketchKind::srht, 4096, r, 2 * static_cast<std::uint64_t>(t));
    const auto op2 = SketchOperator::realize(SketchKind::srht, 4096, r, 2 * static_cast<std::uint64_t>(t) + 1);
    const CcaResult shared = exact_cca(op1.apply(a), op1.apply(b));
    const CcaResult split = exact_cca(op1.apply(a), op2.apply(b));
    const double bound = eps + 2 * eps * eps / 9;
    shared_ok += (shared.correlations - e.correlations).cwiseAbs().maxCoeff() <= bound;
    split_ok += (split.correlations - e.correlations).cwiseAbs().maxCoeff() <= bound;
  }
  CHECK(shared_ok == 20);
  CHECK(split_ok == 0);
}

TEST_CASE("signed_errors") {
  CcaResult e, a;
  e.correlations = Eigen::Vector3d(0.9, 0.5, 0.1);
  a.correlations = Eigen::Vector2d(0.8, 0.6);
  const Eigen::VectorXd s = signed_errors(e, a);
  REQUIRE(s.size() == 2);
  CHECK(s(0) == doctest::Approx(0.1));
  CHECK(s(1) == doctest::Approx(-0.1));
}
