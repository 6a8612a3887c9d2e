#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fastcca/approx.hpp"
#include "fastcca/io.hpp"
#include "fastcca/matrix.hpp"

namespace fastcca {

/// A = G X + noise W, B = G Y + noise Z with G, W, Z m x n standard normal and
/// X, Y n x n uniform on [0, 1].
std::pair<DenseMatrix, DenseMatrix> gen_experiment1(Index m, Index n, std::uint64_t seed, double noise = 0.1);

/// A = X + noise Y (1_{k x n} + Z), B = Y with X m x n standard normal, Y m x k
/// Rademacher and Z k x n uniform on [0, 1].
std::pair<DenseMatrix, DenseMatrix> gen_experiment2(Index m, Index n, Index k, std::uint64_t seed, double noise = 0.1);

struct SyntheticSource {
  int experiment = 1;  // 1 or 2
  Index m = 0;
  Index n = 0;
  Index k = 0;  // experiment 2 only
  std::uint64_t seed = 0;
  double noise = 0.1;
};

/// Multilabel libsvm file: A = features, B = label indicator matrix.
struct DatasetSource {
  std::filesystem::path path;
  LoadOptions load;
};

using ExperimentSource = std::variant<SyntheticSource, DatasetSource>;

struct Preset {
  std::string name;
  int experiment = 0;  // 0 for the dataset preset
  Index m = 0;
  Index n = 0;
  Index k = 0;
  double epsilon = 0.25;
  double delta = 0.05;
};

/// exp1, exp2 or mediamill.
std::optional<Preset> find_preset(std::string_view name);

inline constexpr Index kMediamillRows = 43907;
inline constexpr Index kMediamillFeatures = 120;
inline constexpr Index kMediamillLabels = 101;

/// Warnings (never errors) when a dataset does not have the Mediamill shape.
std::vector<std::string> mediamill_shape_warnings(const MultilabelData& data);

struct ExperimentOptions {
  std::string id;
  ApproxConfig config;
  Index repetitions = 5;
  /// Run repetitions concurrently; timing comparisons are then dropped.
  bool parallel = false;
  /// Exact-solver options for the reference run.
  ExactOptions exact;
};

struct ExperimentRun {
  Index rep = 0;
  std::uint64_t seed = 0;
  Index r_used = 0;
  Eigen::VectorXd correlations;
  Eigen::VectorXd signed_errors;  // sigma_i(A, B) - sigma_hat_i
  Eigen::MatrixXd gram_a;
  Eigen::MatrixXd gram_b;
  double cond_aw = 0.0;
  double cond_bp = 0.0;
  double seconds = 0.0;
  PhaseTimings timings;

  double max_abs_error() const;
};

struct ExperimentReport {
  std::string id;
  nlohmann::json source;
  ApproxConfig config;
  Index repetitions = 0;
  bool parallel = false;
  Eigen::VectorXd exact_correlations;
  Index rank_a = 0;
  Index rank_b = 0;
  double exact_seconds = 0.0;
  std::vector<ExperimentRun> runs;
  std::vector<std::string> warnings;

  double max_abs_error() const;
  double max_condition() const;
  double mean_approx_seconds() const;

  /// Report object with "schema": 1. Every timing value sits under a key named
  /// "timing", so strip_timing() removes all of them.
  nlohmann::json to_json() const;
};

nlohmann::json strip_timing(nlohmann::json report);

/// Solve the pair exactly once and approximately `repetitions` times with
/// seeds derive_seed(config.seed, rep). Timings cover the solver calls only.
ExperimentReport run_experiment(MatrixRef a, MatrixRef b, const ExperimentOptions& options);
ExperimentReport run_experiment(const ExperimentSource& source, const ExperimentOptions& options);

/// Rows of x as CSV, "%.17g".
std::string matrix_csv(const Eigen::MatrixXd& x);

/// |x| mapped log-linearly from [1e-5, 1] to gray levels (1e-5 white, 1 black), binary PGM.
void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& x);

/// run<i>_gram_{a,b}.csv (absolute values) and .pgm for every run.
void write_gram_files(const ExperimentReport& report, const std::filesystem::path& dir);

}  // namespace fastcca
