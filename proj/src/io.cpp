#include "fastcca/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fastcca {

namespace {

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::ParseError, path.string() + ", line " + std::to_string(line) + ": " + msg);
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::DatasetNotFound, "cannot open " + path.string());
  return in;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> to_integer(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::optional<MatrixFormat> parse_format(std::string_view name) {
  const std::string n = lower(name);
  if (n == "mm" || n == "mtx" || n == "matrix-market") return MatrixFormat::matrix_market;
  if (n == "csv") return MatrixFormat::csv;
  if (n == "libsvm" || n == "svm" || n == "libsvm-multilabel") return MatrixFormat::libsvm;
  return std::nullopt;
}

MatrixFormat format_from_extension(const std::filesystem::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".csv") return MatrixFormat::csv;
  if (ext == ".svm" || ext == ".libsvm") return MatrixFormat::libsvm;
  return MatrixFormat::matrix_market;
}

DenseMatrix load_csv(const std::filesystem::path& path, bool header) {
  auto in = open_input(path);
  std::vector<double> entries;  // row-major while reading
  Index cols = -1;
  Index rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (header && line_no == 1) continue;
    if (trim(line).empty()) continue;
    Index count = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const auto field = rest.substr(0, comma);
      const auto v = to_double(field);
      if (!v) parse_fail(path, line_no, "bad numeric field '" + std::string(trim(field)) + "'");
      entries.push_back(*v);
      ++count;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cols < 0) {
      cols = count;
    } else if (count != cols) {
      throw Error(ErrorCode::DimensionMismatch, path.string() + ", line " + std::to_string(line_no) + ": expected " +
                                                    std::to_string(cols) + " fields, found " +
                                                    std::to_string(count));
    }
    ++rows;
  }
  if (rows == 0) throw Error(ErrorCode::EmptyMatrix, path.string() + " has no data rows");
  Eigen::MatrixXd x(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) x(i, j) = entries[static_cast<std::size_t>(i * cols + j)];
  if (!x.allFinite()) throw Error(ErrorCode::NonFinite, path.string() + " contains NaN or Inf");
  return DenseMatrix(std::move(x));
}

std::variant<DenseMatrix, SparseMatrix> load_matrix_market(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) parse_fail(path, 1, "empty file");
  ++line_no;
  const auto banner = split_ws(line);
  if (banner.size() < 5 || lower(banner[0]) != "%%matrixmarket" || lower(banner[1]) != "matrix") {
    parse_fail(path, line_no, "missing %%MatrixMarket matrix banner");
  }
  const std::string layout = lower(banner[2]);
  const std::string field = lower(banner[3]);
  const std::string symmetry = lower(banner[4]);
  if (layout != "coordinate" && layout != "array") parse_fail(path, line_no, "unknown layout " + layout);
  if (field != "real" && field != "integer" && field != "double" && field != "pattern") {
    parse_fail(path, line_no, "unsupported field " + field);
  }
  if (field == "pattern" && layout == "array") parse_fail(path, line_no, "pattern array is not valid");
  if (symmetry != "general" && symmetry != "symmetric" && symmetry != "skew-symmetric") {
    parse_fail(path, line_no, "unsupported symmetry " + symmetry);
  }

  auto next_data_line = [&](std::vector<std::string_view>& tokens) -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      const auto t = trim(line);
      if (t.empty() || t.front() == '%') continue;
      tokens = split_ws(line);
      return true;
    }
    return false;
  };

  std::vector<std::string_view> tok;
  if (!next_data_line(tok)) parse_fail(path, line_no, "missing size line");
  const bool coordinate = layout == "coordinate";
  if (tok.size() != (coordinate ? 3u : 2u)) parse_fail(path, line_no, "malformed size line");
  const auto rows = to_integer(tok[0]);
  const auto cols = to_integer(tok[1]);
  if (!rows || !cols || *rows < 0 || *cols < 0) parse_fail(path, line_no, "bad dimensions");

  const int sym_sign = symmetry == "skew-symmetric" ? -1 : 1;
  const bool symmetric = symmetry != "general";

  if (!coordinate) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(*rows, *cols);
    // Column-major listing; symmetric arrays list the lower triangle only.
    for (Index j = 0; j < *cols; ++j) {
      for (Index i = symmetric ? j : 0; i < *rows; ++i) {
        if (symmetry == "skew-symmetric" && i == j) continue;
        if (!next_data_line(tok) || tok.size() != 1) parse_fail(path, line_no, "expected one array value");
        const auto v = to_double(tok[0]);
        if (!v) parse_fail(path, line_no, "bad numeric value");
        x(i, j) = *v;
        if (symmetric && i != j) x(j, i) = sym_sign * *v;
      }
    }
    if (!x.allFinite()) throw Error(ErrorCode::NonFinite, path.string() + " contains NaN or Inf");
    return DenseMatrix(std::move(x));
  }

  const auto nnz = to_integer(tok[2]);
  if (!nnz || *nnz < 0) parse_fail(path, line_no, "bad entry count");
  std::vector<SparseMatrix::Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(*nnz) * (symmetric ? 2 : 1));
  for (long long k = 0; k < *nnz; ++k) {
    if (!next_data_line(tok)) parse_fail(path, line_no, "expected " + std::to_string(*nnz) + " entries");
    if (tok.size() != (field == "pattern" ? 2u : 3u)) parse_fail(path, line_no, "malformed entry");
    const auto i = to_integer(tok[0]);
    const auto j = to_integer(tok[1]);
    if (!i || !j || *i < 1 || *i > *rows || *j < 1 || *j > *cols) parse_fail(path, line_no, "index out of range");
    double v = 1.0;
    if (field != "pattern") {
      const auto parsed = to_double(tok[2]);
      if (!parsed) parse_fail(path, line_no, "bad numeric value");
      v = *parsed;
    }
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, path.string() + " contains NaN or Inf");
    triplets.push_back({*i - 1, *j - 1, v});
    if (symmetric && *i != *j) triplets.push_back({*j - 1, *i - 1, sym_sign * v});
  }
  return SparseMatrix::from_triplets(*rows, *cols, std::move(triplets));
}

MultilabelData load_libsvm_multilabel(const std::filesystem::path& path, const LoadOptions& options) {
  auto in = open_input(path);
  struct Row {
    std::vector<long long> labels;
    std::vector<std::pair<long long, double>> features;
  };
  std::vector<Row> rows;
  long long max_feature = 0;
  long long max_label = -1;
  bool saw_zero_label = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body = line;
    if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
    if (trim(body).empty()) continue;
    Row row;
    auto tokens = split_ws(body);
    std::size_t first_feature = 0;
    // A leading token without ':' is the comma-separated label list.
    if (!tokens.empty() && tokens[0].find(':') == std::string_view::npos) {
      std::string_view rest = tokens[0];
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto lab = to_integer(rest.substr(0, comma));
        if (!lab || *lab < 0) parse_fail(path, line_no, "bad label '" + std::string(rest.substr(0, comma)) + "'");
        row.labels.push_back(*lab);
        saw_zero_label = saw_zero_label || *lab == 0;
        max_label = std::max(max_label, *lab);
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
      first_feature = 1;
    }
    for (std::size_t t = first_feature; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      if (colon == std::string_view::npos) parse_fail(path, line_no, "expected index:value");
      const auto idx = to_integer(tokens[t].substr(0, colon));
      const auto val = to_double(tokens[t].substr(colon + 1));
      if (!idx || *idx < 1) parse_fail(path, line_no, "bad feature index");
      if (!val) parse_fail(path, line_no, "bad feature value");
      if (!row.features.empty() && *idx <= row.features.back().first) {
        parse_fail(path, line_no, "feature indices must increase");
      }
      row.features.emplace_back(*idx, *val);
      max_feature = std::max(max_feature, *idx);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyMatrix, path.string() + " has no data rows");

  const int base = options.label_base.value_or(saw_zero_label ? 0 : 1);
  if (base != 0 && base != 1) throw Error(ErrorCode::ParseError, "label base must be 0 or 1");
  const Index n_feat = options.num_features.value_or(max_feature);
  const Index n_lab = options.num_labels.value_or(std::max<long long>(max_label + 1 - base, 0));
  if (n_feat < max_feature) throw Error(ErrorCode::DimensionMismatch, "feature index exceeds declared feature count");

  const auto m = static_cast<Index>(rows.size());
  Eigen::MatrixXd labels = Eigen::MatrixXd::Zero(m, n_lab);
  std::vector<std::int64_t> row_ptr(static_cast<std::size_t>(m) + 1, 0);
  std::vector<std::int64_t> col_idx;
  std::vector<double> values;
  for (Index i = 0; i < m; ++i) {
    for (long long lab : rows[i].labels) {
      const long long c = lab - base;
      if (c < 0 || c >= n_lab) throw Error(ErrorCode::DimensionMismatch, "label index exceeds declared label count");
      labels(i, c) = 1.0;
    }
    for (const auto& [idx, val] : rows[i].features) {
      if (val == 0.0) continue;
      col_idx.push_back(idx - 1);
      values.push_back(val);
    }
    row_ptr[i + 1] = static_cast<std::int64_t>(values.size());
  }
  return MultilabelData{SparseMatrix(m, n_feat, std::move(row_ptr), std::move(col_idx), std::move(values)),
                        DenseMatrix(std::move(labels))};
}

LoadedMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format, const LoadOptions& options) {
  switch (format) {
    case MatrixFormat::csv: return load_csv(path, options.header);
    case MatrixFormat::matrix_market:
      return std::visit([](auto&& m) -> LoadedMatrix { return std::move(m); }, load_matrix_market(path));
    case MatrixFormat::libsvm: return load_libsvm_multilabel(path, options);
  }
  throw Error(ErrorCode::ParseError, "unknown format");
}

DenseMatrix to_dense(const LoadedMatrix& loaded) {
  struct Visitor {
    DenseMatrix operator()(const DenseMatrix& d) const { return d; }
    DenseMatrix operator()(const SparseMatrix& s) const { return s.to_dense(); }
    DenseMatrix operator()(const MultilabelData& d) const { return d.features.to_dense(); }
  };
  return std::visit(Visitor{}, loaded);
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::DatasetNotFound, "cannot write " + path.string());
  return out;
}

void put(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

void save_csv(const std::filesystem::path& path, const Eigen::MatrixXd& x) {
  auto out = open_output(path);
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (j) out << ',';
      put(out, x(i, j));
    }
    out << '\n';
  }
}

void save_matrix_market(const std::filesystem::path& path, const DenseMatrix& x) {
  auto out = open_output(path);
  out << "%%MatrixMarket matrix array real general\n" << x.rows() << ' ' << x.cols() << '\n';
  for (double v : x.data()) {
    put(out, v);
    out << '\n';
  }
}

void save_matrix_market(const std::filesystem::path& path, const SparseMatrix& x) {
  auto out = open_output(path);
  out << "%%MatrixMarket matrix coordinate real general\n"
      << x.rows() << ' ' << x.cols() << ' ' << x.nnz() << '\n';
  const auto rp = x.row_ptr();
  const auto ci = x.col_idx();
  const auto vals = x.values();
  for (Index i = 0; i < x.rows(); ++i) {
    for (auto k = rp[i]; k < rp[i + 1]; ++k) {
      out << i + 1 << ' ' << ci[k] + 1 << ' ';
      put(out, vals[k]);
      out << '\n';
    }
  }
}

}  // namespace fastcca
