#pragma once

// Helpers shared by the test binaries. Random inputs here come from
// std::mt19937_64, independent of the library's own generator.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include <Eigen/Dense>

#include "fastcca/matrix.hpp"

namespace testing_support {

inline Eigen::MatrixXd gaussian(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd x(m, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < m; ++i) x(i, j) = nd(gen);
  return x;
}

inline fastcca::DenseMatrix dense(Eigen::Index m, Eigen::Index n, std::uint64_t seed) {
  return fastcca::DenseMatrix(gaussian(m, n, seed));
}

inline Eigen::MatrixXd random_orthogonal(Eigen::Index m, std::uint64_t seed) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(m, m, seed));
  return qr.householderQ();
}

/// Canonical correlations from the generalized eigenproblem
/// (A^T A)^{-1} A^T B (B^T B)^{-1} B^T A, symmetrized through the Cholesky
/// factor of A^T A and evaluated in long double. Full column rank inputs only.
inline Eigen::VectorXd geneig_correlations(const Eigen::MatrixXd& a_in, const Eigen::MatrixXd& b_in) {
  using M = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const M a = a_in.cast<long double>();
  const M b = b_in.cast<long double>();
  const M aa = a.transpose() * a;
  const M bb = b.transpose() * b;
  const M ab = a.transpose() * b;
  const Eigen::LLT<M> la(aa);
  const M inner = ab * bb.llt().solve(ab.transpose());
  const M l_inv = la.matrixL().solve(M::Identity(a.cols(), a.cols()));
  const M sym = l_inv * inner * l_inv.transpose();
  Eigen::SelfAdjointEigenSolver<M> es((sym + sym.transpose()) / 2);
  const Eigen::Index q = std::min(a.cols(), b.cols());
  Eigen::VectorXd out(q);
  for (Eigen::Index i = 0; i < q; ++i) {
    const long double lam = es.eigenvalues()(a.cols() - 1 - i);
    out(i) = static_cast<double>(std::sqrt(std::max<long double>(0, std::min<long double>(1, lam))));
  }
  return out;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("fastcca_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing_support
