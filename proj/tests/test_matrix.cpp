#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "fastcca/io.hpp"
#include "fastcca/matrix.hpp"
#include "support.hpp"

using namespace fastcca;
namespace ts = testing_support;

namespace {

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no fastcca::Error thrown");
  return ErrorCode::NonFinite;
}

}  // namespace

TEST_CASE("DenseMatrix rejects non-finite entries") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 2);
  x(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(code_of([&] { DenseMatrix d(x); }) == ErrorCode::NonFinite);
  x(1, 0) = std::numeric_limits<double>::infinity();
  CHECK(code_of([&] { DenseMatrix d(x); }) == ErrorCode::NonFinite);
}

TEST_CASE("SparseMatrix structure invariants") {
  auto s = SparseMatrix::from_triplets(3, 3, {{0, 2, 1.0}, {0, 0, 2.0}, {2, 1, 1.0}, {2, 1, -1.0}, {1, 1, 4.0}, {0, 2, 0.5}});
  CHECK(s.nnz() == 3);  // (2,1) cancels, (0,2) merges
  const DenseMatrix d = s.to_dense();
  CHECK(d(0, 0) == 2.0);
  CHECK(d(0, 2) == 1.5);
  CHECK(d(1, 1) == 4.0);
  CHECK(d(2, 1) == 0.0);
  CHECK(code_of([] { SparseMatrix(2, 2, {0, 2, 2}, {1, 0}, {1.0, 2.0}); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([] { SparseMatrix(2, 2, {0, 1, 1}, {0}, {0.0}); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("thin_svd of the identity") {
  const ThinSvd s = thin_svd(DenseMatrix(Eigen::MatrixXd::Identity(3, 3)));
  CHECK(s.rank() == 3);
  for (int i = 0; i < 3; ++i) CHECK(s.singular_values(i) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK((s.U * s.V.transpose() - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-14);
}

TEST_CASE("thin_svd detects identical columns") {
  const auto x = DenseMatrix::from_rows({{1, 1}, {2, 2}, {3, 3}, {4, 4}});
  CHECK(thin_svd(x).rank() == 1);
}

TEST_CASE("thin_svd singular values against the Gram eigenvalues") {
  const Eigen::MatrixXd x = ts::gaussian(8, 3, 11);
  const ThinSvd s = thin_svd(x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.transpose() * x);
  REQUIRE(s.rank() == 3);
  for (int i = 0; i < 3; ++i) CHECK(s.singular_values(i) == doctest::Approx(std::sqrt(es.eigenvalues()(2 - i))).epsilon(1e-12));
}

TEST_CASE("thin_svd invariants on random tall, wide and rank-deficient inputs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::Index m = 5 + static_cast<Eigen::Index>(seed * 7 % 40);
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(seed % 6);
    Eigen::MatrixXd x = seed % 3 == 0 ? ts::gaussian(n, m, seed) : ts::gaussian(m, n, seed);
    if (seed % 4 == 1 && x.cols() > 1) x.col(x.cols() - 1) = 2.0 * x.col(0);
    const ThinSvd s = thin_svd(x);
    const Eigen::Index p = s.rank();
    CHECK((s.U.transpose() * s.U - Eigen::MatrixXd::Identity(p, p)).norm() < 1e-10);
    CHECK((s.V.transpose() * s.V - Eigen::MatrixXd::Identity(p, p)).norm() < 1e-10);
    for (Eigen::Index i = 0; i < p; ++i) {
      CHECK(s.singular_values(i) > 0.0);
      if (i) CHECK(s.singular_values(i) <= s.singular_values(i - 1));
    }
    const Eigen::MatrixXd rec = s.U * s.singular_values.asDiagonal() * s.V.transpose();
    CHECK(spectral_norm(rec - x) <= static_cast<double>(p) * s.singular_values(0) * 1e-12);
    // deterministic
    const ThinSvd again = thin_svd(x);
    CHECK(again.U == s.U);
    CHECK(again.singular_values == s.singular_values);
  }
}

TEST_CASE("thin_svd errors") {
  CHECK(code_of([] { thin_svd(Eigen::MatrixXd(0, 3)); }) == ErrorCode::EmptyMatrix);
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(3, 2);
  x(0, 0) = std::numeric_limits<double>::infinity();
  CHECK(code_of([&] { thin_svd(x); }) == ErrorCode::NonFinite);
}

TEST_CASE("rank tolerance is relative to sigma_1") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(4, 2);
  x(0, 0) = 1e6;
  x(1, 1) = 1e-4;
  CHECK(numerical_rank(x) == 2);
  CHECK(numerical_rank(x, 1e-9) == 1);
  CHECK(numerical_rank(x, 1e-11) == 2);
}

TEST_CASE("pseudo_inverse examples") {
  const DenseMatrix p = pseudo_inverse(DenseMatrix::from_rows({{2, 0}, {0, 4}}));
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(1, 1) == doctest::Approx(0.25));
  CHECK(std::abs(p(0, 1)) < 1e-15);

  const DenseMatrix z = pseudo_inverse(DenseMatrix(3, 2));
  CHECK(z.rows() == 2);
  CHECK(z.cols() == 3);
  CHECK(z.values().isZero(0.0));

  const Eigen::MatrixXd x = ts::gaussian(6, 2, 5);
  const Eigen::MatrixXd normal_eq = (x.transpose() * x).inverse() * x.transpose();
  CHECK((pseudo_inverse(DenseMatrix(x)).values() - normal_eq).norm() < 1e-12);
  CHECK((x * pseudo_inverse(DenseMatrix(x)).values() * x - x).norm() < 1e-12);
}

TEST_CASE("spectral_norm equals sigma_1") {
  for (std::uint64_t seed = 30; seed < 40; ++seed) {
    const Eigen::MatrixXd x = ts::gaussian(12, 4, seed);
    const double s1 = Eigen::JacobiSVD<Eigen::MatrixXd>(x).singularValues()(0);
    CHECK(std::abs(spectral_norm(x) - s1) <= 1e-10 * s1);
  }
  CHECK(spectral_norm(Eigen::MatrixXd::Zero(3, 3)) == 0.0);
}

TEST_CASE("condition number and hconcat") {
  CHECK(condition_number(Eigen::Vector2d(1, 1).asDiagonal().toDenseMatrix()) == doctest::Approx(1.0));
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(3, 2);
  d(0, 0) = 4;
  d(1, 1) = 2;
  CHECK(condition_number(d) == doctest::Approx(2.0));
  d(1, 1) = 0;
  CHECK(std::isinf(condition_number(d)));
  CHECK(code_of([] { hconcat(DenseMatrix(3, 1), DenseMatrix(4, 1)); }) == ErrorCode::RowCountMismatch);
  CHECK(hconcat(DenseMatrix(3, 1), DenseMatrix(3, 2)).cols() == 3);
}

TEST_CASE("CSV loading") {
  const auto dir = ts::temp_dir("csv");
  write_file(dir / "a.csv", "1,2\n3,4\n");
  const DenseMatrix a = load_csv(dir / "a.csv");
  CHECK(a == DenseMatrix::from_rows({{1, 2}, {3, 4}}));

  write_file(dir / "h.csv", "x,y\n1,2\n");
  CHECK(load_csv(dir / "h.csv", true) == DenseMatrix::from_rows({{1, 2}}));

  write_file(dir / "ragged.csv", "1,2\n3\n");
  CHECK(code_of([&] { load_csv(dir / "ragged.csv"); }) == ErrorCode::DimensionMismatch);

  write_file(dir / "bad.csv", "1,2\n3,x\n");
  try {
    load_csv(dir / "bad.csv");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK(code_of([&] { load_csv(dir / "missing.csv"); }) == ErrorCode::DatasetNotFound);
  std::filesystem::remove_all(dir);
}

TEST_CASE("Matrix Market loading") {
  const auto dir = ts::temp_dir("mm");
  write_file(dir / "c.mtx",
             "%%MatrixMarket matrix coordinate real general\n% comment\n3 4 3\n1 1 1.5\n2 4 -2\n3 2 7\n");
  auto c = load_matrix_market(dir / "c.mtx");
  REQUIRE(std::holds_alternative<SparseMatrix>(c));
  const auto& s = std::get<SparseMatrix>(c);
  CHECK(s.nnz() == 3);
  CHECK(s.rows() == 3);
  CHECK(s.cols() == 4);
  CHECK(s.to_dense()(1, 3) == -2.0);

  write_file(dir / "a.mtx", "%%MatrixMarket matrix array real general\n2 2\n1\n3\n2\n4\n");
  auto a = load_matrix_market(dir / "a.mtx");
  REQUIRE(std::holds_alternative<DenseMatrix>(a));
  CHECK(std::get<DenseMatrix>(a) == DenseMatrix::from_rows({{1, 2}, {3, 4}}));

  write_file(dir / "sym.mtx", "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1\n2 1 5\n");
  const DenseMatrix sym = to_dense(load_matrix(dir / "sym.mtx", MatrixFormat::matrix_market));
  CHECK(sym(0, 1) == 5.0);
  CHECK(sym(1, 0) == 5.0);

  write_file(dir / "bad.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n");
  CHECK(code_of([&] { load_matrix_market(dir / "bad.mtx"); }) != ErrorCode::NonFinite);
  std::filesystem::remove_all(dir);
}

TEST_CASE("libsvm multilabel decoding") {
  const auto dir = ts::temp_dir("svm");
  write_file(dir / "x.svm", "1,3 2:0.5\n");
  LoadOptions o;
  o.num_features = 3;
  o.num_labels = 4;
  const MultilabelData d = load_libsvm_multilabel(dir / "x.svm", o);
  CHECK(d.labels == DenseMatrix::from_rows({{1, 0, 1, 0}}));
  CHECK(d.features.to_dense() == DenseMatrix::from_rows({{0, 0.5, 0}}));

  // rows keep their order; a line without labels has an empty label row
  write_file(dir / "y.svm", "2 1:1 3:2\n 2:4\n1,2 1:-1\n");
  const MultilabelData e = load_libsvm_multilabel(dir / "y.svm");
  CHECK(e.features.rows() == 3);
  CHECK(e.features.to_dense()(0, 2) == 2.0);
  CHECK(e.features.to_dense()(1, 1) == 4.0);
  CHECK(e.labels(0, 1) == 1.0);
  CHECK(e.labels.values().row(1).isZero(0.0));
  CHECK(e.labels(2, 0) == 1.0);

  write_file(dir / "bad.svm", "1 2:0.5\n1 x:1\n");
  try {
    load_libsvm_multilabel(dir / "bad.svm");
    FAIL("expected ParseError");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::ParseError);
    CHECK(std::string(err.what()).find("line 2") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("save/load round trips") {
  const auto dir = ts::temp_dir("roundtrip");
  Eigen::MatrixXd x = ts::gaussian(7, 3, 99);
  x(0, 0) = 1.0 / 3.0;
  x(1, 1) = -1e-300;
  x(2, 2) = 6.02214076e23;
  save_csv(dir / "x.csv", x);
  CHECK(load_csv(dir / "x.csv").values() == x);

  save_matrix_market(dir / "x.mtx", DenseMatrix(x));
  CHECK(std::get<DenseMatrix>(load_matrix_market(dir / "x.mtx")).values() == x);

  Eigen::MatrixXd sp = x;
  sp(3, 1) = 0.0;
  sp(4, 0) = 0.0;
  const SparseMatrix s = SparseMatrix::from_dense(DenseMatrix(sp));
  save_matrix_market(dir / "s.mtx", s);
  const auto back = std::get<SparseMatrix>(load_matrix_market(dir / "s.mtx"));
  CHECK(back.nnz() == s.nnz());
  CHECK(back.to_dense().values() == sp);
  std::filesystem::remove_all(dir);
}
