// cca: exact and sketched canonical correlation analysis from the command line.
//
// Exit codes: 0 success, 2 input error, 3 numerical failure, 4 verification failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <variant>

#include <CLI11.hpp>
#include <json.hpp>

#include "fastcca/approx.hpp"
#include "fastcca/cca.hpp"
#include "fastcca/experiments.hpp"
#include "fastcca/io.hpp"
#include "fastcca/verifier.hpp"

namespace fs = std::filesystem;
using namespace fastcca;
using nlohmann::json;

namespace {

constexpr int kInputError = 2;
constexpr int kNumericalError = 3;
constexpr int kVerificationFailure = 4;

using Input = std::variant<DenseMatrix, SparseMatrix>;

MatrixRef as_ref(const Input& x) {
  return std::visit([](const auto& m) { return MatrixRef(m); }, x);
}

MatrixFormat format_for(const std::string& flag, const fs::path& path) {
  if (flag.empty()) return format_from_extension(path);
  auto f = parse_format(flag);
  if (!f) throw Error(ErrorCode::ParseError, "unknown format '" + flag + "'");
  return *f;
}

// A libsvm file given for both --a and --b yields (features, labels).
std::pair<Input, Input> load_pair(const fs::path& pa, const fs::path& pb, const std::string& format, bool header) {
  LoadOptions opts;
  opts.header = header;
  const MatrixFormat fa = format_for(format, pa);
  const MatrixFormat fb = format_for(format, pb);
  if (fa == MatrixFormat::libsvm && fb == MatrixFormat::libsvm && fs::exists(pa) && fs::exists(pb) &&
      fs::equivalent(pa, pb)) {
    MultilabelData d = load_libsvm_multilabel(pa, opts);
    return {std::move(d.features), std::move(d.labels)};
  }
  auto one = [&](const fs::path& p, MatrixFormat f) -> Input {
    LoadedMatrix m = load_matrix(p, f, opts);
    if (auto* d = std::get_if<DenseMatrix>(&m)) return std::move(*d);
    if (auto* s = std::get_if<SparseMatrix>(&m)) return std::move(*s);
    return std::move(std::get<MultilabelData>(m).features);
  };
  return {one(pa, fa), one(pb, fb)};
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Eigen::MatrixXd& x) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd r = x.row(i).transpose();
    rows.push_back(vec_json(r));
  }
  return rows;
}

json result_json(const CcaResult& r) {
  return {{"method", std::string(to_string(r.method))},
          {"correlations", vec_json(r.correlations)},
          {"weights_a", mat_json(r.weights_a)},
          {"weights_b", mat_json(r.weights_b)},
          {"rank_a", r.rank_a},
          {"rank_b", r.rank_b}};
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::DatasetNotFound, "cannot write " + path.string());
  f << j.dump(2) << '\n';
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Common {
  std::string a, b, format, out;
  bool header = false;
  std::optional<double> rank_tol;
};

int cmd_exact(const Common& c) {
  auto [a, b] = load_pair(c.a, c.b, c.format, c.header);
  ExactOptions opts;
  opts.rank_tol = c.rank_tol;
  const CcaResult r = exact_cca(as_ref(a).to_dense(), as_ref(b).to_dense(), opts);
  json j = {{"schema", 1}, {"command", "exact"}, {"a", c.a}, {"b", c.b}, {"result", result_json(r)}};
  write_json(c.out, j);
  return 0;
}

struct ApproxArgs {
  std::string transform = "srht";
  double eps = 0.25;
  double delta = 0.05;
  std::string size_mode = "practical";
  std::optional<Index> r;
  std::uint64_t seed = 0;
};

ApproxConfig make_config(const std::string& transform, double eps, double delta, const std::string& size_mode,
                         std::uint64_t seed) {
  ApproxConfig cfg;
  auto kind = parse_sketch_kind(transform);
  if (!kind) throw Error(ErrorCode::ParseError, "unknown transform '" + transform + "'");
  auto mode = parse_size_mode(size_mode);
  if (!mode) throw Error(ErrorCode::ParseError, "unknown size mode '" + size_mode + "'");
  cfg.transform = *kind;
  cfg.size_mode = *mode;
  cfg.epsilon = eps;
  cfg.delta = delta;
  cfg.seed = seed;
  return cfg;
}

int cmd_approx(const Common& c, const ApproxArgs& x) {
  auto [a, b] = load_pair(c.a, c.b, c.format, c.header);
  ApproxConfig cfg = make_config(x.transform, x.eps, x.delta, x.size_mode, x.seed);
  cfg.r_override = x.r;
  cfg.rank_tol = c.rank_tol;
  const ApproxOutput out = approx_cca(as_ref(a), as_ref(b), cfg);
  const auto& d = out.diagnostics;
  json j = {{"schema", 1},
            {"command", "approx"},
            {"a", c.a},
            {"b", c.b},
            {"operator", {{"kind", std::string(to_string(cfg.transform))}, {"m", as_ref(a).rows()}, {"r", d.r_used}, {"seed", cfg.seed}}},
            {"config",
             {{"epsilon", cfg.epsilon},
              {"delta", cfg.delta},
              {"size_mode", std::string(to_string(cfg.size_mode))}}},
            {"result", result_json(out.result)},
            {"diagnostics",
             {{"r_used", d.r_used},
              {"gram_a_csv", matrix_csv(d.gram_a)},
              {"gram_b_csv", matrix_csv(d.gram_b)},
              {"cond_aw", finite_or_null(d.cond_aw)},
              {"cond_bp", finite_or_null(d.cond_bp)},
              {"entries_touched", d.entries_touched}}},
            {"timing",
             {{"sample_size", d.timings.sample_size},
              {"sketch", d.timings.sketch},
              {"solve", d.timings.solve},
              {"diagnostics", d.timings.diagnostics}}}};
  if (d.concat_coherence) {
    j["diagnostics"]["concat_coherence"] = *d.concat_coherence;
    j["diagnostics"]["concat_rank"] = *d.concat_rank;
  }
  write_json(c.out, j);
  return 0;
}

struct SynthArgs {
  std::string experiment = "1";
  std::optional<Index> m, n, k;
  std::optional<double> eps, delta;
  Index reps = 5;
  std::uint64_t seed = 0;
  std::string out, gram_dir, dataset, transform = "srht", size_mode = "practical";
  bool parallel = false;
  double noise = 0.1;
};

int cmd_synth(const SynthArgs& s) {
  std::string name = s.experiment;
  if (name == "1" || name == "2") name = "exp" + name;
  const auto preset = find_preset(name);
  if (!preset) throw Error(ErrorCode::ParseError, "unknown experiment '" + s.experiment + "'");

  ExperimentOptions opts;
  opts.id = preset->name;
  opts.config = make_config(s.transform, s.eps.value_or(preset->epsilon), s.delta.value_or(preset->delta), s.size_mode,
                            s.seed);
  opts.repetitions = s.reps;
  opts.parallel = s.parallel;

  ExperimentSource source;
  if (preset->experiment == 0) {
    if (s.dataset.empty()) throw Error(ErrorCode::DatasetNotFound, "the mediamill preset needs --dataset <libsvm file>");
    source = DatasetSource{s.dataset, {}};
  } else {
    SyntheticSource g;
    g.experiment = preset->experiment;
    g.m = s.m.value_or(preset->m);
    g.n = s.n.value_or(preset->n);
    g.k = s.k.value_or(preset->k);
    g.seed = s.seed;
    g.noise = s.noise;
    source = g;
  }
  const ExperimentReport rep = run_experiment(source, opts);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
  write_json(s.out, rep.to_json());
  if (!s.gram_dir.empty()) write_gram_files(rep, s.gram_dir);

  std::printf("%-4s %8s %14s %10s %10s\n", "rep", "r", "max|err|", "cond", "seconds");
  for (const auto& r : rep.runs) {
    std::printf("%-4lld %8lld %14.6g %10.4g %10.4g\n", static_cast<long long>(r.rep), static_cast<long long>(r.r_used),
                r.max_abs_error(), std::max(r.cond_aw, r.cond_bp), r.seconds);
  }
  std::printf("exact %.4g s, approx mean %.4g s, max|err| %.6g, max cond %.4g\n", rep.exact_seconds,
              rep.mean_approx_seconds(), rep.max_abs_error(), rep.max_condition());
  return 0;
}

int cmd_verify(const std::string& lemma, Index trials, std::uint64_t seed, const std::string& out) {
  const auto reports = run_verification(lemma, trials, seed);
  std::ofstream f(out);
  if (!f) throw Error(ErrorCode::DatasetNotFound, "cannot write " + out);
  bool ok = true;
  for (const auto& r : reports) {
    f << r.to_json().dump() << '\n';
    std::printf("%-15s %-15s trials %4lld  violations %4lld  excluded %4lld  worst slack %.3g%s\n",
                std::string(to_string(r.lemma)).c_str(), r.params.transform.c_str(), static_cast<long long>(r.trials),
                static_cast<long long>(r.violations), static_cast<long long>(r.excluded), r.worst_slack,
                r.expect_failure ? (r.ok() ? "  (expected failure observed)" : "  (expected failure NOT observed)")
                                 : (r.ok() ? "" : "  FAIL"));
    if (!r.expect_failure && !r.ok()) ok = false;
  }
  return ok ? 0 : kVerificationFailure;
}

int cmd_coherence(const Common& c) {
  LoadOptions opts;
  opts.header = c.header;
  const DenseMatrix a = to_dense(load_matrix(c.a, format_for(c.format, c.a), opts));
  std::printf("mu(A) = %.17g\n", coherence(a, c.rank_tol));
  if (!c.b.empty()) {
    const DenseMatrix b = to_dense(load_matrix(c.b, format_for(c.format, c.b), opts));
    const auto cc = concat_coherence(a, b, c.rank_tol);
    std::printf("mu([A;B]) = %.17g\nomega = %lld\n", cc.mu, static_cast<long long>(cc.omega));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact and sketched canonical correlation analysis"};
  app.require_subcommand(1);

  Common common;
  auto add_inputs = [&](CLI::App* sub, bool need_b) {
    sub->add_option("--a", common.a, "first matrix")->required();
    auto* b = sub->add_option("--b", common.b, "second matrix");
    if (need_b) b->required();
    sub->add_option("--format", common.format, "mm, csv or libsvm (default: by extension)");
    sub->add_flag("--header", common.header, "CSV: skip the first line");
    sub->add_option("--rank-tol", common.rank_tol, "relative rank tolerance");
  };

  auto* exact = app.add_subcommand("exact", "exact CCA");
  add_inputs(exact, true);
  exact->add_option("--out", common.out, "report.json")->required();

  ApproxArgs ax;
  auto* approx = app.add_subcommand("approx", "sketched CCA");
  add_inputs(approx, true);
  approx->add_option("--transform", ax.transform, "srht, cw or uniform")->required();
  approx->add_option("--eps", ax.eps)->required();
  approx->add_option("--delta", ax.delta)->required();
  approx->add_option("--size-mode", ax.size_mode, "theory or practical");
  approx->add_option("--r", ax.r, "sample size override");
  approx->add_option("--seed", ax.seed);
  approx->add_option("--out", common.out, "report.json")->required();

  SynthArgs sx;
  auto* synth = app.add_subcommand("synth", "experiment reproduction");
  synth->add_option("--experiment", sx.experiment, "1, 2, exp1, exp2 or mediamill")->required();
  synth->add_option("--m", sx.m);
  synth->add_option("--n", sx.n);
  synth->add_option("--k", sx.k);
  synth->add_option("--eps", sx.eps);
  synth->add_option("--delta", sx.delta);
  synth->add_option("--reps", sx.reps);
  synth->add_option("--seed", sx.seed);
  synth->add_option("--out", sx.out, "report.json")->required();
  synth->add_option("--gram-dir", sx.gram_dir, "write gram CSV and PGM files here");
  synth->add_option("--dataset", sx.dataset, "libsvm multilabel file (mediamill)");
  synth->add_option("--transform", sx.transform, "srht, cw or uniform");
  synth->add_option("--size-mode", sx.size_mode, "theory or practical");
  synth->add_option("--noise", sx.noise, "noise coefficient of the generator");
  synth->add_flag("--parallel", sx.parallel, "run repetitions concurrently (no timing comparison)");

  std::string lemma;
  Index trials = 100;
  std::uint64_t vseed = 0;
  std::string vout;
  auto* verify = app.add_subcommand("verify", "empirical lemma checks");
  verify->add_option("--lemma", lemma, "pert4, pert5, pert6, sampling, rht, cw or all")->required();
  verify->add_option("--trials", trials);
  verify->add_option("--seed", vseed);
  verify->add_option("--out", vout, "output.jsonl")->required();

  auto* coh = app.add_subcommand("coherence", "print coherence");
  add_inputs(coh, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  try {
    if (*exact) return cmd_exact(common);
    if (*approx) return cmd_approx(common, ax);
    if (*synth) return cmd_synth(sx);
    if (*verify) return cmd_verify(lemma, trials, vseed, vout);
    if (*coh) return cmd_coherence(common);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return e.is_numerical() ? kNumericalError : kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
