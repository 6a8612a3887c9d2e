#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fastcca/matrix.hpp"
#include "fastcca/transforms.hpp"

namespace fastcca {

enum class LemmaId { pert4, pert5, pert6, sampling_ortho, rht_coherence, cw_embedding };

std::string_view to_string(LemmaId id);

struct LemmaParams {
  Index m = 0;
  Index n = 0;
  Index ell = 0;
  Index r = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::string transform;
  std::string input;  // how the test matrices were built
};

/// Outcome of repeatedly checking one lemma's conclusion on random draws.
///
/// Draws whose hypothesis fails are counted in `excluded` and never tested.
/// Deterministic lemmas allow zero violations; statistical ones allow a failure
/// rate up to delta plus three binomial standard errors.
struct LemmaCheckReport {
  LemmaId lemma = LemmaId::pert4;
  Index trials = 0;
  Index violations = 0;
  Index excluded = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  LemmaParams params;
  bool statistical = false;
  /// Demonstrations of a known failure mode (no RHT on coherent input); these
  /// are expected to exceed the budget and do not count against a run.
  bool expect_failure = false;

  double failure_rate() const noexcept {
    return trials ? static_cast<double>(violations) / static_cast<double>(trials) : 0.0;
  }
  /// Allowed violation rate: 0, or delta + 3 sqrt(delta (1 - delta) / trials).
  double budget() const noexcept;
  bool within_budget() const noexcept { return failure_rate() <= budget(); }
  /// True unless the report signals a real verification failure.
  bool ok() const noexcept { return expect_failure ? !within_budget() : within_budget(); }

  nlohmann::json to_json() const;
};

struct PertOptions {
  SketchKind kind = SketchKind::srht;
  Index r = 0;
  double epsilon = 0.5;
  /// Stop after this many hypothesis-satisfying draws...
  Index target_trials = 100;
  /// ...or after this many draws in total.
  Index max_attempts = 1000;
  std::uint64_t seed = 0;
  /// pert6 only: random (w, y) pairs per draw.
  Index vectors_per_trial = 16;
};

/// |sigma_i(A^T B) - sigma_i(A^T S^T S B)| <= eps |A|_2 |B|_2 whenever every
/// singular value of S U_C lies in [sqrt(1-eps), sqrt(1+eps)], C = [A ; B].
LemmaCheckReport check_pert4(const DenseMatrix& a, const DenseMatrix& b, const PertOptions& options);

/// |sigma_i(U_A^T S^T S U_B) - sigma_i(U_SA^T U_SB)| <= 2 eps (1 + eps) whenever
/// S keeps both ranks and all singular values of S U_A, S U_B lie in the window.
LemmaCheckReport check_pert5(const DenseMatrix& a, const DenseMatrix& b, const PertOptions& options);

/// |w^T A^T B y - w^T A^T S^T S B y| <= eps |A w| |B y| under the pert4 hypothesis.
LemmaCheckReport check_pert6(const DenseMatrix& a, const DenseMatrix& b, const PertOptions& options);

/// Single-draw forms used by the drivers above and by tests with a fixed
/// operator. Return nullopt when the hypothesis fails, else the worst slack.
std::optional<double> pert4_slack(const DenseMatrix& a, const DenseMatrix& b, const SketchOperator& op, double epsilon);
std::optional<double> pert5_slack(const DenseMatrix& a, const DenseMatrix& b, const SketchOperator& op, double epsilon);
std::optional<double> pert6_slack(const DenseMatrix& a, const DenseMatrix& b, const SketchOperator& op, double epsilon,
                                  Index vectors, std::uint64_t seed);

/// One (w, y) pair of the pert6 conclusion, without the hypothesis check.
double bilinear_slack(const DenseMatrix& a, const DenseMatrix& b, const SketchOperator& op, double epsilon,
                      const Eigen::VectorXd& w, const Eigen::VectorXd& y);

enum class EmbeddingKind {
  srht,            // RHT then uniform sampling; r from the sampling bound with the RHT coherence bound
  uniform,         // uniform sampling; r from the sampling bound with the basis' own coherence
  uniform_no_rht,  // uniform sampling at the srht sample size (no coherence flattening)
  countsketch,     // r from the CountSketch bound, window scaled by eps/3
};

std::string_view to_string(EmbeddingKind kind);

enum class BasisKind {
  random,    // orthonormalized Gaussian, redrawn every trial
  flat,      // first d columns of the normalized Hadamard matrix (m a power of two)
  coherent,  // [I_d ; 0]
};

struct EmbeddingOptions {
  EmbeddingKind kind = EmbeddingKind::srht;
  BasisKind basis = BasisKind::random;
  Index m = 4096;
  Index d = 8;
  double epsilon = 0.5;
  double delta = 0.1;
  Index trials = 100;
  std::uint64_t seed = 0;
  std::optional<Index> r_override;
  /// Use this m x d orthonormal basis instead of generating one.
  std::optional<Eigen::MatrixXd> fixed_basis;
};

/// Sample size of the orthonormal-sampling bound: ceil(6 eps^-2 m mu ln(3d / delta)), capped at m.
Index sample_size_sampling_lemma(Index m, double mu, Index d, double epsilon, double delta);

/// Coherence bound after an RHT: (sqrt(n) + sqrt(8 ln(m / delta)))^2 / m.
double rht_coherence_bound(Index m, Index n, double delta);

/// Empirical subspace-embedding rate of an operator family on orthonormal bases.
LemmaCheckReport check_embedding(const EmbeddingOptions& options);

/// mu(Theta A) against the RHT coherence bound, A = [I_n ; 0] (maximally coherent).
LemmaCheckReport check_rht_coherence(Index m, Index n, double delta, Index trials, std::uint64_t seed);

/// The fixed-parameter suite behind `cca verify`. `which` is one of
/// pert4, pert5, pert6, sampling, rht, cw, all.
std::vector<LemmaCheckReport> run_verification(std::string_view which, Index trials, std::uint64_t seed);

/// Orthonormalized m x d Gaussian matrix drawn from (seed, stream).
Eigen::MatrixXd random_orthonormal(Index m, Index d, std::uint64_t seed);

/// Standard normal m x n matrix from a counter-based stream.
Eigen::MatrixXd gaussian_matrix(Index m, Index n, std::uint64_t seed, std::uint64_t stream);

}  // namespace fastcca
