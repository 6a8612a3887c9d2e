#pragma once

#include <filesystem>
#include <optional>
#include <string_view>
#include <variant>

#include "fastcca/matrix.hpp"

namespace fastcca {

enum class MatrixFormat { matrix_market, csv, libsvm };

std::optional<MatrixFormat> parse_format(std::string_view name);
/// Guess from the file extension (.mtx, .csv, .svm/.libsvm); Matrix Market otherwise.
MatrixFormat format_from_extension(const std::filesystem::path& path);

/// Feature matrix and 0/1 label indicator matrix from a libsvm multilabel file.
struct MultilabelData {
  SparseMatrix features;
  DenseMatrix labels;
};

using LoadedMatrix = std::variant<DenseMatrix, SparseMatrix, MultilabelData>;

struct LoadOptions {
  /// CSV: skip the first line.
  bool header = false;
  /// libsvm: force the feature / label counts (otherwise the largest index seen).
  std::optional<Index> num_features;
  std::optional<Index> num_labels;
  /// libsvm: 1-based label indices unless a 0 label appears in the file, in
  /// which case the whole file is read as 0-based. Set to force either.
  std::optional<int> label_base;
};

DenseMatrix load_csv(const std::filesystem::path& path, bool header = false);
/// Array files load as DenseMatrix, coordinate files as SparseMatrix.
std::variant<DenseMatrix, SparseMatrix> load_matrix_market(const std::filesystem::path& path);
MultilabelData load_libsvm_multilabel(const std::filesystem::path& path, const LoadOptions& options = {});

LoadedMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format,
                         const LoadOptions& options = {});

/// Densify whatever was loaded; for multilabel data this is the feature matrix.
DenseMatrix to_dense(const LoadedMatrix& loaded);

/// 17 significant digits, so every double round-trips.
void save_csv(const std::filesystem::path& path, const Eigen::MatrixXd& x);
void save_matrix_market(const std::filesystem::path& path, const DenseMatrix& x);
void save_matrix_market(const std::filesystem::path& path, const SparseMatrix& x);

}  // namespace fastcca
