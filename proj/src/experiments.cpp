#include "fastcca/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "fastcca/rng.hpp"

namespace fastcca {

namespace {

enum : std::uint64_t { kG = streams::generator_base, kX, kY, kW, kZ };

Eigen::MatrixXd fill(Index m, Index n, std::uint64_t seed, std::uint64_t stream, char dist) {
  Eigen::MatrixXd out(m, n);
  const RandomStream rs(seed, stream);
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) {
      const auto c = static_cast<std::uint64_t>(j * m + i);
      out(i, j) = dist == 'n' ? rs.normal(c) : dist == 'u' ? rs.uniform(c) : rs.sign(c);
    }
  }
  return out;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

std::pair<DenseMatrix, DenseMatrix> gen_experiment1(Index m, Index n, std::uint64_t seed, double noise) {
  if (n < 1 || m < n) throw Error(ErrorCode::DimensionMismatch, "experiment 1 needs m >= n >= 1");
  const Eigen::MatrixXd g = fill(m, n, seed, kG, 'n');
  Eigen::MatrixXd a = g * fill(n, n, seed, kX, 'u');
  Eigen::MatrixXd b = g * fill(n, n, seed, kY, 'u');
  if (noise != 0.0) {
    a += noise * fill(m, n, seed, kW, 'n');
    b += noise * fill(m, n, seed, kZ, 'n');
  }
  return {DenseMatrix(std::move(a)), DenseMatrix(std::move(b))};
}

std::pair<DenseMatrix, DenseMatrix> gen_experiment2(Index m, Index n, Index k, std::uint64_t seed, double noise) {
  if (n < 1 || k < 1 || m < std::max(n, k)) throw Error(ErrorCode::DimensionMismatch, "experiment 2 needs m >= max(n, k)");
  Eigen::MatrixXd a = fill(m, n, seed, kX, 'n');
  Eigen::MatrixXd y = fill(m, k, seed, kY, 's');
  if (noise != 0.0) {
    const Eigen::MatrixXd mix = Eigen::MatrixXd::Ones(k, n) + fill(k, n, seed, kZ, 'u');
    a += noise * (y * mix);
  }
  return {DenseMatrix(std::move(a)), DenseMatrix(std::move(y))};
}

std::optional<Preset> find_preset(std::string_view name) {
  if (name == "exp1") return Preset{"exp1", 1, 120000, 60, 0, 0.25, 0.05};
  if (name == "exp2") return Preset{"exp2", 2, 80000, 80, 60, 0.25, 0.05};
  if (name == "mediamill") return Preset{"mediamill", 0, kMediamillRows, kMediamillFeatures, kMediamillLabels, 0.5, 0.2};
  return std::nullopt;
}

std::vector<std::string> mediamill_shape_warnings(const MultilabelData& data) {
  std::vector<std::string> w;
  auto expect = [&](const char* what, Index got, Index want) {
    if (got != want) {
      w.push_back(std::string(what) + ": expected " + std::to_string(want) + ", found " + std::to_string(got));
    }
  };
  expect("rows", data.features.rows(), kMediamillRows);
  expect("features", data.features.cols(), kMediamillFeatures);
  expect("labels", data.labels.cols(), kMediamillLabels);
  return w;
}

double ExperimentRun::max_abs_error() const {
  return signed_errors.size() ? signed_errors.cwiseAbs().maxCoeff() : 0.0;
}

double ExperimentReport::max_abs_error() const {
  double e = 0.0;
  for (const auto& r : runs) e = std::max(e, r.max_abs_error());
  return e;
}

double ExperimentReport::max_condition() const {
  double c = 0.0;
  for (const auto& r : runs) c = std::max({c, r.cond_aw, r.cond_bp});
  return c;
}

double ExperimentReport::mean_approx_seconds() const {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : runs) s += r.seconds;
  return s / static_cast<double>(runs.size());
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["schema"] = 1;
  j["experiment"] = id;
  j["source"] = source;
  j["config"] = {{"epsilon", config.epsilon},
                 {"delta", config.delta},
                 {"transform", std::string(to_string(config.transform))},
                 {"size_mode", std::string(to_string(config.size_mode))},
                 {"seed", config.seed},
                 {"r_override", config.r_override ? nlohmann::json(*config.r_override) : nlohmann::json(nullptr)},
                 {"repetitions", repetitions},
                 {"parallel", parallel}};
  j["exact"] = {{"correlations", vec_json(exact_correlations)},
                {"rank_a", rank_a},
                {"rank_b", rank_b},
                {"timing", {{"seconds", exact_seconds}}}};
  auto& rs = j["runs"] = nlohmann::json::array();
  for (const auto& r : runs) {
    rs.push_back({{"rep", r.rep},
                  {"seed", r.seed},
                  {"r_used", r.r_used},
                  {"correlations", vec_json(r.correlations)},
                  {"signed_errors", vec_json(r.signed_errors)},
                  {"max_abs_error", r.max_abs_error()},
                  {"gram_a_csv", matrix_csv(r.gram_a)},
                  {"gram_b_csv", matrix_csv(r.gram_b)},
                  {"cond_aw", finite_or_null(r.cond_aw)},
                  {"cond_bp", finite_or_null(r.cond_bp)},
                  {"timing",
                   {{"seconds", r.seconds},
                    {"sample_size", r.timings.sample_size},
                    {"sketch", r.timings.sketch},
                    {"solve", r.timings.solve},
                    {"diagnostics", r.timings.diagnostics}}}});
  }
  j["summary"] = {{"max_abs_error", max_abs_error()}, {"max_condition", finite_or_null(max_condition())}};
  if (!parallel) {
    const double approx = mean_approx_seconds();
    j["summary"]["timing"] = {{"exact_seconds", exact_seconds},
                              {"mean_approx_seconds", approx},
                              {"speedup", approx > 0.0 ? nlohmann::json(exact_seconds / approx) : nlohmann::json(nullptr)}};
  }
  j["warnings"] = warnings;
  return j;
}

nlohmann::json strip_timing(nlohmann::json report) {
  if (report.is_object()) {
    report.erase("timing");
    for (auto& [key, value] : report.items()) value = strip_timing(std::move(value));
  } else if (report.is_array()) {
    for (auto& value : report) value = strip_timing(std::move(value));
  }
  return report;
}

ExperimentReport run_experiment(MatrixRef a, MatrixRef b, const ExperimentOptions& options) {
  options.config.validate();
  if (options.repetitions < 1) throw Error(ErrorCode::InvalidSampleSize, "repetitions must be positive");
  ExperimentReport rep;
  rep.id = options.id;
  rep.config = options.config;
  rep.repetitions = options.repetitions;
  rep.parallel = options.parallel;

  const DenseMatrix ad = a.to_dense();
  const DenseMatrix bd = b.to_dense();
  auto t0 = Clock::now();
  const CcaResult exact = exact_cca(ad, bd, options.exact);
  rep.exact_seconds = seconds_since(t0);
  rep.exact_correlations = exact.correlations;
  rep.rank_a = exact.rank_a;
  rep.rank_b = exact.rank_b;

  rep.runs.resize(static_cast<std::size_t>(options.repetitions));
  auto one = [&](Index i, Exec exec) {
    ApproxConfig cfg = options.config;
    cfg.seed = derive_seed(options.config.seed, static_cast<std::uint64_t>(i));
    cfg.exec = exec;
    const auto start = Clock::now();
    ApproxOutput out = approx_cca(a, b, cfg);
    const double secs = seconds_since(start);
    auto& run = rep.runs[static_cast<std::size_t>(i)];
    run.rep = i;
    run.seed = cfg.seed;
    run.r_used = out.diagnostics.r_used;
    run.correlations = out.result.correlations;
    run.signed_errors = signed_errors(exact, out.result);
    run.gram_a = std::move(out.diagnostics.gram_a);
    run.gram_b = std::move(out.diagnostics.gram_b);
    run.cond_aw = out.diagnostics.cond_aw;
    run.cond_bp = out.diagnostics.cond_bp;
    run.seconds = secs;
    run.timings = out.diagnostics.timings;
  };
  if (options.parallel) {
    // Exceptions cannot leave an OpenMP region; keep the first by rep index.
    std::vector<std::exception_ptr> errors(rep.runs.size());
#pragma omp parallel for schedule(dynamic)
    for (Index i = 0; i < options.repetitions; ++i) {
      try {
        one(i, Exec::serial);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (Index i = 0; i < options.repetitions; ++i) one(i, options.config.exec);
  }
  return rep;
}

ExperimentReport run_experiment(const ExperimentSource& source, const ExperimentOptions& options) {
  if (const auto* s = std::get_if<SyntheticSource>(&source)) {
    auto [a, b] = s->experiment == 1 ? gen_experiment1(s->m, s->n, s->seed, s->noise)
                  : s->experiment == 2
                      ? gen_experiment2(s->m, s->n, s->k, s->seed, s->noise)
                      : throw Error(ErrorCode::ParseError, "experiment must be 1 or 2");
    ExperimentReport rep = run_experiment(a, b, options);
    rep.source = {{"generator",
                   {{"experiment", s->experiment},
                    {"m", s->m},
                    {"n", s->n},
                    {"k", s->experiment == 2 ? nlohmann::json(s->k) : nlohmann::json(nullptr)},
                    {"seed", s->seed},
                    {"noise", s->noise}}}};
    return rep;
  }
  const auto& d = std::get<DatasetSource>(source);
  const MultilabelData data = load_libsvm_multilabel(d.path, d.load);
  std::vector<std::string> warnings = mediamill_shape_warnings(data);
  ExperimentReport rep = run_experiment(data.features, data.labels, options);
  rep.source = {{"dataset", d.path.string()},
                {"rows", data.features.rows()},
                {"features", data.features.cols()},
                {"labels", data.labels.cols()}};
  rep.warnings = std::move(warnings);
  return rep;
}

std::string matrix_csv(const Eigen::MatrixXd& x) {
  std::string out;
  char buf[32];
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", x(i, j));
      if (j) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& x) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::DatasetNotFound, "cannot write " + path.string());
  f << "P5\n" << x.cols() << ' ' << x.rows() << "\n255\n";
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      const double v = std::clamp(std::abs(x(i, j)), 1e-5, 1.0);
      const double t = (std::log10(v) + 5.0) / 5.0;  // 0 at 1e-5, 1 at 1
      f.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * (1.0 - t)))));
    }
  }
}

void write_gram_files(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& r : report.runs) {
    const std::string stem = "run" + std::to_string(r.rep) + "_gram_";
    for (const auto& [side, g] : {std::pair{"a", &r.gram_a}, std::pair{"b", &r.gram_b}}) {
      const Eigen::MatrixXd abs = g->cwiseAbs();
      save_csv(dir / (stem + side + ".csv"), abs);
      write_pgm(dir / (stem + side + ".pgm"), abs);
    }
  }
}

}  // namespace fastcca
