#include "idarr/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>

#include "idarr/errors.hpp"
#include "idarr/harness.hpp"
#include "idarr/io.hpp"
#include "idarr/oracles.hpp"

namespace idarr::cli {

namespace fs = std::filesystem;
using namespace idarr::harness;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct SolveArgs {
  std::string op;
  std::string data;
  std::string weights;
  std::string method = "iDARR";
  std::string stop = "lcurve";
  int min_iters = 10;
  int max_iters = 100;
  int k = 1;
  double noise_norm = 0.0;
  double tau = 1.01;
  bool reorth = false;
  std::string output = "x.vec";
};

int cmd_solve(const SolveArgs& a, std::ostream& out) {
  auto map = parse_operator(a.op);
  const bool problem_dir = a.op.rfind("problem:", 0) == 0;
  const fs::path dir = problem_dir ? fs::path(a.op.substr(8)) : fs::path();

  std::string data = a.data;
  if (data.empty() && problem_dir) data = (dir / "b.vec").string();
  if (data.empty()) throw UsageError("--data is required for this operator");
  const Vector b = io::read_vector(data);
  if (b.size() != map->rows()) {
    throw DimensionError("data has length " + std::to_string(b.size()) + ", operator has " +
                         std::to_string(map->rows()) + " rows");
  }

  std::string weights = a.weights;
  if (weights.empty() && problem_dir && fs::exists(dir / "weights.vec")) {
    weights = (dir / "weights.vec").string();
  }
  const RkhsGeometry geom = weights.empty()
                                ? RkhsGeometry::from_exploration(map)
                                : RkhsGeometry::with_weights(map, io::read_vector(weights));

  StopRule rule;
  if (a.stop == "lcurve") rule = LCurveRule{a.min_iters, a.max_iters};
  else if (a.stop == "dp") rule = DiscrepancyRule{a.noise_norm, a.tau, a.max_iters};
  else if (a.stop == "fixed") rule = FixedIterations{a.k};
  else throw UsageError("--stop must be lcurve, dp or fixed");
  validate(rule);

  TestProblem problem{map, geom, Vector::Zero(map->cols()), b, b};
  SolveOptions options;
  options.reorthogonalize = a.reorth;
  const MethodOutcome o = run_method(parse_method(a.method), problem, rule, nullptr, options);
  io::write_vector(a.output, o.x);
  out << "method=" << a.method << " k_stop=" << o.k_stop
      << " residual=" << fmt((map->apply(o.x) - b).norm()) << " norm=" << fmt(o.norm)
      << " not_converged=" << (o.not_converged ? 1 : 0) << " output=" << a.output << '\n';
  return kOk;
}

struct BenchArgs {
  std::string config;
  std::string kernel, truth, nsr, methods, stop, out;
  long m = 0, n = 0;
  int trials = 0;
  long long seed = -1;
  int threads = 0;
  bool save_estimates = false;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  ExperimentConfig c = a.config.empty() ? ExperimentConfig{} : load_config(a.config);
  if (!a.kernel.empty()) c.kernel = parse_kernel(a.kernel);
  if (!a.truth.empty()) c.truth = parse_truth(a.truth);
  if (!a.nsr.empty()) c.nsr_ladder = parse_real_list(a.nsr);
  if (!a.methods.empty()) {
    c.methods.clear();
    std::string list = a.methods;
    std::replace(list.begin(), list.end(), ',', ' ');
    std::istringstream in(list);
    for (std::string name; in >> name;) c.methods.push_back(parse_method(name));
  }
  if (!a.stop.empty()) c.stop = parse_stop_choice(a.stop);
  if (!a.out.empty()) c.output_dir = a.out;
  if (a.m > 0) c.m = a.m;
  if (a.n > 0) c.n = a.n;
  if (a.trials > 0) c.trials = a.trials;
  if (a.seed >= 0) c.seed_base = static_cast<std::uint64_t>(a.seed);
  if (a.save_estimates) c.save_estimates = true;
  validate(c);

  const BenchResult r = run_fredholm_bench(c, a.threads);
  const auto groups = group_stats(r.rows);
  write_results_csv(c.output_dir / "results.csv", r.rows);
  write_stats_csv(c.output_dir / "stats.csv", groups);
  write_gnuplot_dat(c.output_dir / "stats.dat", groups);
  if (!r.failures.empty()) write_failures_csv(c.output_dir / "failures.csv", r.failures);

  out << std::left << std::setw(12) << "method" << std::setw(10) << "nsr" << std::setw(20)
      << "median_err" << "median_k\n";
  for (const auto& g : groups) {
    out << std::left << std::setw(12) << g.method << std::setw(10) << fmt(g.nsr) << std::setw(20)
        << fmt(g.error.median) << fmt(g.k_stop.median) << '\n';
  }
  out << r.rows.size() << " rows, " << r.failures.size() << " failures -> "
      << c.output_dir.string() << '\n';
  return r.failures.empty() ? kOk : kNumerical;
}

struct TimingArgs {
  std::string n_ladder = "200,400,800";
  long m = 500;
  int k = 10;
  int replicas = 10;
  std::string out = "timing.csv";
};

int cmd_timing(const TimingArgs& a, std::ostream& out) {
  std::vector<Eigen::Index> ladder;
  for (double v : parse_real_list(a.n_ladder)) {
    if (v != std::floor(v)) throw UsageError("n ladder must hold integers");
    ladder.push_back(static_cast<Eigen::Index>(v));
  }
  const auto rows = run_timing(ladder, a.m, a.k, a.replicas);
  write_timing_csv(a.out, rows);
  out << "n       iDARR_ms    DARTR_ms\n";
  for (Eigen::Index n : ladder) {
    out << std::left << std::setw(8) << n << std::setw(12) << fmt(median_time(rows, "iDARR", n))
        << fmt(median_time(rows, "DARTR", n)) << '\n';
  }
  return kOk;
}

struct DeblurArgs {
  std::string image = "phantom:64";
  std::string psf = "gaussian:2";
  double nsr = 0.01;
  long long seed = 1;
  std::string method = "iDARR";
  std::string stop = "lcurve";
  int min_iters = 10;
  int trace_iters = 1000;
  std::string out_image = "restored.pgm";
  std::string curve = "deblur_curve.csv";
};

PsfSpec parse_psf(const std::string& text) {
  if (text == "delta") return {PsfSpec::Kind::Delta, 0.0, ""};
  if (text.rfind("gaussian:", 0) == 0) {
    return {PsfSpec::Kind::Gaussian, parse_real_list(text.substr(9)).at(0), ""};
  }
  if (text.rfind("file:", 0) == 0) return {PsfSpec::Kind::FromFile, 0.0, text.substr(5)};
  throw UsageError("--psf must be delta, gaussian:WIDTH or file:PATH");
}

int cmd_deblur(const DeblurArgs& a, std::ostream& out) {
  Matrix image;
  if (a.image.rfind("phantom:", 0) == 0) {
    image = phantom_image(static_cast<Eigen::Index>(parse_real_list(a.image.substr(8)).at(0)));
  } else {
    image = io::read_pgm(a.image);
  }
  const TestProblem problem =
      make_deblur(image, make_psf(parse_psf(a.psf)), a.nsr, static_cast<std::uint64_t>(a.seed));
  DeblurOptions opts;
  opts.method = parse_method(a.method);
  opts.stop = parse_stop_choice(a.stop);
  if (opts.stop == StopChoice::Both) throw UsageError("deblur takes lcurve or dp");
  opts.stop_settings.min_iters = a.min_iters;
  opts.trace_iters = a.trace_iters;
  const DeblurResult r = run_deblur(problem, opts);
  const Eigen::Index side = image.rows();
  io::write_pgm(a.out_image, vector_to_image(r.x, side));
  write_deblur_curve(a.curve, r);

  const auto best = std::min_element(r.relative_error.begin(), r.relative_error.end());
  const double stop_err =
      r.k_stop > 0 ? r.relative_error[static_cast<std::size_t>(r.k_stop - 1)] : 1.0;
  out << "method=" << a.method << " k_stop=" << r.k_stop << " rel_error_stop=" << fmt(stop_err)
      << " min_k=" << (best - r.relative_error.begin()) + 1 << " rel_error_min=" << fmt(*best)
      << " terminal_k=" << r.terminal_k
      << " rel_error_terminal=" << fmt(r.relative_error.back()) << '\n';
  return kOk;
}

struct OracleArgs {
  long m = 30;
  long n = 20;
  long rank = 0;
  long long seed = 1;
};

int cmd_oracle(const OracleArgs& a, std::ostream& out) {
  const auto results =
      oracle::property_battery(a.m, a.n, a.rank, static_cast<std::uint64_t>(a.seed));
  bool ok = true;
  for (const auto& r : results) {
    out << std::left << std::setw(40) << r.name << ' ' << std::setw(18) << fmt(r.deviation)
        << ' ' << std::setw(8) << fmt(r.tolerance) << ' ' << (r.pass() ? "PASS" : "FAIL")
        << '\n';
    ok = ok && r.pass();
  }
  return ok ? kOk : kPropertyViolation;
}

struct MakeProblemArgs {
  std::string kernel = "exp";
  std::string truth = "in";
  long m = 500;
  long n = 100;
  double nsr = 0.1;
  long long seed = 1;
  std::string out;
};

int cmd_make_problem(const MakeProblemArgs& a, std::ostream& out) {
  const FredholmSetup setup = make_fredholm(parse_kernel(a.kernel), a.m, a.n);
  const TestProblem clean = make_problem(
      setup.map, setup.geom, true_solution(parse_truth(a.truth), setup), setup.dt);
  const TestProblem p = add_noise(clean, a.nsr, static_cast<std::uint64_t>(a.seed));
  io::save_problem(a.out, p);
  out << "wrote " << a.out << " (m=" << a.m << ", n=" << a.n << ", sigma=" << fmt(p.sigma)
      << ")\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Iterative data-adaptive RKHS regularization"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Solve A x = b with one method");
  s->add_option("--operator", solve.op, "identity:N, diag:v1,v2, fredholm:exp:M:N, dense:FILE, "
                                        "gaussian:N:W, psf:N:FILE or problem:DIR")
      ->required();
  s->add_option("--data", solve.data, "b vector (binary or text)");
  s->add_option("--weights", solve.weights, "basis weights; default exploration measure");
  s->add_option("--method", solve.method, "iDARR, IR-l2, IR-L2, l2-direct, L2-direct, DARTR");
  s->add_option("--stop", solve.stop, "lcurve, dp or fixed");
  s->add_option("--min-iters", solve.min_iters);
  s->add_option("--max-iters", solve.max_iters);
  s->add_option("--k", solve.k, "iterations for --stop fixed");
  s->add_option("--noise-norm", solve.noise_norm, "noise norm for --stop dp");
  s->add_option("--tau", solve.tau);
  s->add_flag("--reorth", solve.reorth, "full reorthogonalization");
  s->add_option("--output", solve.output, "solution vector file");

  BenchArgs bench;
  auto* b = app.add_subcommand("fredholm-bench", "Fredholm benchmark over an nsr ladder");
  b->add_option("--config", bench.config, "INI config; flags override it");
  b->add_option("--kernel", bench.kernel, "exp or poly");
  b->add_option("--truth", bench.truth, "in or out");
  b->add_option("--m", bench.m);
  b->add_option("--n", bench.n);
  b->add_option("--nsr", bench.nsr, "comma-separated ladder");
  b->add_option("--trials", bench.trials);
  b->add_option("--methods", bench.methods, "comma-separated method names");
  b->add_option("--stop", bench.stop, "lcurve, dp or both");
  b->add_option("--seed", bench.seed, "seed base");
  b->add_option("--out", bench.out, "output directory");
  b->add_option("--threads", bench.threads, "worker count (capped by IDARR_THREADS)");
  b->add_flag("--save-estimates", bench.save_estimates, "store every estimate and b");

  TimingArgs timing;
  auto* t = app.add_subcommand("timing", "Wall time of iDARR and DARTR against n");
  t->add_option("--n-ladder", timing.n_ladder, "ascending comma-separated sizes");
  t->add_option("--m", timing.m);
  t->add_option("--k", timing.k, "fixed iDARR iteration count");
  t->add_option("--replicas", timing.replicas);
  t->add_option("--out", timing.out);

  DeblurArgs deblur;
  auto* d = app.add_subcommand("deblur", "Restore a blurred noisy image");
  d->add_option("--image", deblur.image, "P5 image or phantom:N");
  d->add_option("--psf", deblur.psf, "gaussian:WIDTH, file:PATH or delta");
  d->add_option("--nsr", deblur.nsr);
  d->add_option("--seed", deblur.seed);
  d->add_option("--method", deblur.method, "iDARR, IR-l2 or IR-L2");
  d->add_option("--stop", deblur.stop, "lcurve or dp");
  d->add_option("--min-iters", deblur.min_iters);
  d->add_option("--trace-iters", deblur.trace_iters,
                "length of the error curve; rel_error_terminal reports its last iterate");
  d->add_option("--out-image", deblur.out_image);
  d->add_option("--curve", deblur.curve, "per-iteration CSV");

  OracleArgs oracle;
  auto* o = app.add_subcommand("oracle-check", "Property battery against dense oracles");
  o->add_option("--m", oracle.m);
  o->add_option("--n", oracle.n);
  o->add_option("--rank", oracle.rank, "0 for full rank");
  o->add_option("--seed", oracle.seed);

  MakeProblemArgs make;
  auto* mk = app.add_subcommand("make-problem", "Write a noisy Fredholm problem directory");
  mk->add_option("--kernel", make.kernel);
  mk->add_option("--truth", make.truth);
  mk->add_option("--m", make.m);
  mk->add_option("--n", make.n);
  mk->add_option("--nsr", make.nsr);
  mk->add_option("--seed", make.seed);
  mk->add_option("--out", make.out)->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*s) return cmd_solve(solve, out);
    if (*b) return cmd_bench(bench, out);
    if (*t) return cmd_timing(timing, out);
    if (*d) return cmd_deblur(deblur, out);
    if (*o) return cmd_oracle(oracle, out);
    if (*mk) return cmd_make_problem(make, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const DimensionError& e) {
    err << "dimension error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}

}  // namespace idarr::cli
