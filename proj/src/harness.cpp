#include "idarr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "idarr/errors.hpp"
#include "idarr/io.hpp"

namespace idarr::harness {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::ofstream open_csv(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& text, const char* seps) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(seps));
  for (auto& p : parts) boost::trim(p);
  parts.erase(std::remove(parts.begin(), parts.end(), std::string()), parts.end());
  return parts;
}

double parse_real(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("not a number: '" + s + "'");
}

long parse_long(const std::string& s) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError("not an integer: '" + s + "'");
}

}  // namespace

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods{Method::iDARR,    Method::IRl2,     Method::IRL2,
                                           Method::l2Direct, Method::L2Direct, Method::DARTR};
  return methods;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::iDARR: return "iDARR";
    case Method::IRl2: return "IR-l2";
    case Method::IRL2: return "IR-L2";
    case Method::l2Direct: return "l2-direct";
    case Method::L2Direct: return "L2-direct";
    case Method::DARTR: return "DARTR";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : all_methods()) {
    if (method_name(m) == name) return m;
  }
  throw UsageError("unknown method '" + name +
                   "' (expected iDARR, IR-l2, IR-L2, l2-direct, L2-direct or DARTR)");
}

bool is_iterative(Method m) {
  return m == Method::iDARR || m == Method::IRl2 || m == Method::IRL2;
}

StopChoice parse_stop_choice(const std::string& name) {
  if (name == "lcurve") return StopChoice::LCurve;
  if (name == "dp") return StopChoice::Discrepancy;
  if (name == "both") return StopChoice::Both;
  throw UsageError("unknown stop rule '" + name + "' (expected lcurve, dp or both)");
}

StopRule make_stop_rule(StopChoice choice, const StopSettings& s, double noise_norm) {
  if (choice == StopChoice::Discrepancy) {
    return DiscrepancyRule{noise_norm, s.tau, s.max_iters};
  }
  return LCurveRule{s.min_iters, s.max_iters};
}

DirectCache::DirectCache(const Matrix& a, const Vector& weights)
    : a_(a), weights_(weights) {}

const SpectralDecomposition& DirectCache::euclidean() const {
  std::call_once(euclidean_once_,
                 [&] { euclidean_ = generalized_eig(a_, Vector::Ones(a_.cols())); });
  return euclidean_;
}

const SpectralDecomposition& DirectCache::weighted() const {
  std::call_once(weighted_once_, [&] { weighted_ = generalized_eig(a_, weights_); });
  return weighted_;
}

double expected_noise_norm(const TestProblem& problem) {
  return problem.sigma * std::sqrt(problem.dt * static_cast<double>(problem.b.size()));
}

MethodOutcome run_method(Method method, const TestProblem& problem, const StopRule& stop,
                         const DirectCache* cache, const SolveOptions& options) {
  MethodOutcome out;
  const auto start = Clock::now();
  if (is_iterative(method)) {
    SolveResult r;
    switch (method) {
      case Method::iDARR: r = idarr_solve(problem.geom, problem.b, stop, options); break;
      case Method::IRl2: r = irl2_solve(problem.map, problem.b, stop, options); break;
      default: r = irL2_solve(problem.geom, problem.b, stop, options); break;
    }
    out.wall_ms = elapsed_ms(start);
    out.x = std::move(r.x);
    out.k_stop = r.k_stop;
    out.not_converged = r.not_converged;
    if (r.k_stop > 0) out.norm = r.history[static_cast<std::size_t>(r.k_stop - 1)].norm;
    return out;
  }

  Matrix local;
  const Matrix* a = problem.map->dense();
  if (!a) {
    local = problem.map->to_dense();
    a = &local;
  }
  std::optional<DirectCache> own;
  if (!cache) {
    own.emplace(*a, problem.geom.weights());
    cache = &*own;
  }
  TikhonovResult t;
  switch (method) {
    case Method::l2Direct:
      t = tikhonov_lcurve(*a, problem.b, cache->euclidean(), TikhonovPenalty::Euclidean);
      break;
    case Method::L2Direct:
      t = tikhonov_lcurve(*a, problem.b, cache->weighted(), TikhonovPenalty::Weighted);
      break;
    default:
      t = tikhonov_lcurve(*a, problem.b, cache->weighted(), TikhonovPenalty::Rkhs);
      break;
  }
  out.wall_ms = elapsed_ms(start);
  out.x = std::move(t.x);
  out.norm = std::sqrt(t.path[t.corner_index].penalty);
  out.not_converged = t.weak_corner;
  return out;
}

KernelId parse_kernel(const std::string& name) {
  if (name == "exp" || name == "ExpDecay") return KernelId::ExpDecay;
  if (name == "poly" || name == "PolyDecay") return KernelId::PolyDecay;
  throw UsageError("unknown kernel '" + name + "' (expected exp or poly)");
}

TruthKind parse_truth(const std::string& name) {
  if (name == "in" || name == "InFsoi") return TruthKind::InFsoi;
  if (name == "out" || name == "OutFsoi") return TruthKind::OutFsoi;
  throw UsageError("unknown truth '" + name + "' (expected in or out)");
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> values;
  for (const auto& p : split(text, ", ")) values.push_back(parse_real(p));
  return values;
}

ExperimentConfig load_config(const fs::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ptree_error& e) {
    throw IoError("config " + path.string() + ": " + e.what());
  }
  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    if (section != "problem" && section != "experiment") {
      throw UsageError("unknown config section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      const std::string v = boost::trim_copy(node.data());
      const std::string where = section + "." + key;
      if (where == "problem.kernel") c.kernel = parse_kernel(v);
      else if (where == "problem.m") c.m = parse_long(v);
      else if (where == "problem.n") c.n = parse_long(v);
      else if (where == "problem.truth") c.truth = parse_truth(v);
      else if (where == "experiment.nsr") c.nsr_ladder = parse_real_list(v);
      else if (where == "experiment.trials") c.trials = static_cast<int>(parse_long(v));
      else if (where == "experiment.methods") {
        c.methods.clear();
        for (const auto& name : split(v, ", ")) c.methods.push_back(parse_method(name));
      } else if (where == "experiment.stop") c.stop = parse_stop_choice(v);
      else if (where == "experiment.min_iters") c.stop_settings.min_iters = static_cast<int>(parse_long(v));
      else if (where == "experiment.max_iters") c.stop_settings.max_iters = static_cast<int>(parse_long(v));
      else if (where == "experiment.tau") c.stop_settings.tau = parse_real(v);
      else if (where == "experiment.seed_base") c.seed_base = static_cast<std::uint64_t>(parse_long(v));
      else if (where == "experiment.output_dir") c.output_dir = v;
      else if (where == "experiment.save_estimates") c.save_estimates = (v == "true" || v == "1");
      else throw UsageError("unknown config key '" + where + "'");
    }
  }
  return c;
}

void validate(const ExperimentConfig& c) {
  if (c.m < 2 || c.n < 2) throw UsageError("m and n must be >= 2");
  if (c.trials < 1) throw UsageError("trials must be >= 1");
  if (c.nsr_ladder.empty()) throw UsageError("nsr ladder is empty");
  for (double v : c.nsr_ladder) {
    if (!(v > 0.0) || !std::isfinite(v)) throw UsageError("nsr values must be > 0");
  }
  if (c.methods.empty()) throw UsageError("no methods selected");
  idarr::validate(StopRule{LCurveRule{c.stop_settings.min_iters, c.stop_settings.max_iters}});
  if (!(c.stop_settings.tau > 1.0)) throw UsageError("tau must be > 1");
}

std::uint64_t row_seed(std::uint64_t seed_base, std::size_t nsr_index, int trial) {
  std::uint64_t h = splitmix64(seed_base);
  h = splitmix64(h ^ static_cast<std::uint64_t>(nsr_index + 1));
  h = splitmix64(h ^ (static_cast<std::uint64_t>(trial) << 20));
  return h;
}

int worker_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(n, 1);
  if (const char* env = std::getenv("IDARR_THREADS")) {
    try {
      const int cap = std::stoi(env);
      if (cap >= 1) n = std::min(n, cap);
    } catch (const std::exception&) {
    }
  }
  return n;
}

namespace {

struct CellOutput {
  std::vector<std::pair<std::size_t, ResultRow>> rows;  // (label slot, row)
  std::vector<FailedRow> failures;
};

template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) fn(i);
  };
  const auto n = static_cast<std::size_t>(std::max(1, threads));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(n, count); ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace

BenchResult run_fredholm_bench(const ExperimentConfig& config, int threads) {
  validate(config);
  const FredholmSetup setup = make_fredholm(config.kernel, config.m, config.n);
  const TestProblem clean =
      make_problem(setup.map, setup.geom, true_solution(config.truth, setup), setup.dt);
  const double truth_norm = l2rho_norm(setup.geom, clean.x_true);
  const DirectCache cache(setup.map->entries(), setup.geom.weights());

  // Result slots: each method, plus its DP twin when both rules are asked for.
  struct Slot {
    Method method;
    StopChoice stop;
    std::string label;
  };
  std::vector<Slot> slots;
  for (Method m : config.methods) {
    if (!is_iterative(m) || config.stop != StopChoice::Discrepancy) {
      slots.push_back({m, StopChoice::LCurve, method_name(m)});
    }
    if (is_iterative(m) && config.stop == StopChoice::Discrepancy) {
      slots.push_back({m, StopChoice::Discrepancy, method_name(m)});
    }
    if (is_iterative(m) && config.stop == StopChoice::Both) {
      slots.push_back({m, StopChoice::Discrepancy, method_name(m) + "+DP"});
    }
  }

  const fs::path est_dir = config.output_dir / "estimates";
  if (config.save_estimates) {
    io::save_problem(config.output_dir / "problem", clean);
    std::error_code ec;
    fs::create_directories(est_dir, ec);
    if (ec) throw IoError("cannot create " + est_dir.string());
  }

  const std::size_t cells = config.nsr_ladder.size() * static_cast<std::size_t>(config.trials);
  std::vector<CellOutput> outputs(cells);
  parallel_for(cells, worker_count(threads), [&](std::size_t cell) {
    const std::size_t nsr_index = cell / static_cast<std::size_t>(config.trials);
    const int trial = static_cast<int>(cell % static_cast<std::size_t>(config.trials));
    const double nsr = config.nsr_ladder[nsr_index];
    const std::uint64_t seed = row_seed(config.seed_base, nsr_index, trial);
    const TestProblem problem = add_noise(clean, nsr, seed);
    const std::string tag = "nsr" + std::to_string(nsr_index) + "_trial" + std::to_string(trial);
    if (config.save_estimates) io::write_vector(est_dir / ("b_" + tag + ".vec"), problem.b);

    for (std::size_t s = 0; s < slots.size(); ++s) {
      const Slot& slot = slots[s];
      try {
        const StopRule rule =
            make_stop_rule(slot.stop, config.stop_settings, expected_noise_norm(problem));
        const MethodOutcome o = run_method(slot.method, problem, rule, &cache);
        ResultRow row;
        row.method = slot.label;
        row.nsr = nsr;
        row.trial = trial;
        row.k_stop = o.k_stop;
        row.l2rho_error = l2rho_error(problem.geom, o.x, problem.x_true);
        row.relative_error = row.l2rho_error / truth_norm;
        row.loss = (problem.map->apply(o.x) - problem.b).squaredNorm();
        row.wall_time_ms = o.wall_ms;
        row.seed = seed;
        if (!std::isfinite(row.l2rho_error) || !std::isfinite(row.loss)) {
          throw NumericalBreakdownError("non-finite estimate");
        }
        if (config.save_estimates) {
          io::write_vector(est_dir / (slot.label + "_" + tag + ".vec"), o.x);
        }
        outputs[cell].rows.emplace_back(s, std::move(row));
      } catch (const std::exception& e) {
        outputs[cell].failures.push_back({slot.label, nsr, trial, seed, e.what()});
      }
    }
  });

  BenchResult result;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    for (const auto& cell : outputs) {
      for (const auto& [slot, row] : cell.rows) {
        if (slot == s) result.rows.push_back(row);
      }
    }
  }
  for (const auto& cell : outputs) {
    result.failures.insert(result.failures.end(), cell.failures.begin(), cell.failures.end());
  }
  return result;
}

void write_results_csv(const fs::path& path, const std::vector<ResultRow>& rows) {
  auto out = open_csv(path);
  out << "method,nsr,trial,k_stop,l2rho_error,relative_error,loss,wall_time_ms,seed\n";
  for (const auto& r : rows) {
    out << r.method << ',' << num(r.nsr) << ',' << r.trial << ',' << r.k_stop << ','
        << num(r.l2rho_error) << ',' << num(r.relative_error) << ',' << num(r.loss) << ','
        << num(r.wall_time_ms) << ',' << r.seed << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void write_failures_csv(const fs::path& path, const std::vector<FailedRow>& rows) {
  auto out = open_csv(path);
  out << "method,nsr,trial,seed,error\n";
  for (const auto& r : rows) {
    std::string msg = r.error;
    std::replace(msg.begin(), msg.end(), '"', '\'');
    out << r.method << ',' << num(r.nsr) << ',' << r.trial << ',' << r.seed << ",\"" << msg
        << "\"\n";
  }
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw UsageError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw UsageError("box_stats of an empty sample");
  std::sort(values.begin(), values.end());
  BoxStats s;
  s.count = values.size();
  s.median = quantile(values, 0.5);
  s.q1 = quantile(values, 0.25);
  s.q3 = quantile(values, 0.75);
  const double iqr = s.q3 - s.q1;
  const double lo_fence = s.q1 - 1.5 * iqr;
  const double hi_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = s.q1;
  s.whisker_high = s.q3;
  bool have_low = false;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      s.outliers.push_back(v);
      continue;
    }
    if (!have_low) {
      s.whisker_low = v;
      have_low = true;
    }
    s.whisker_high = v;
  }
  return s;
}

std::vector<GroupStats> group_stats(const std::vector<ResultRow>& rows) {
  std::vector<std::pair<std::string, double>> keys;
  std::map<std::pair<std::string, double>, std::pair<std::vector<double>, std::vector<double>>> data;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.method, r.nsr);
    if (!data.count(key)) keys.push_back(key);
    data[key].first.push_back(r.l2rho_error);
    data[key].second.push_back(static_cast<double>(r.k_stop));
  }
  std::vector<GroupStats> groups;
  for (const auto& key : keys) {
    const auto& d = data[key];
    groups.push_back({key.first, key.second, box_stats(d.first), box_stats(d.second)});
  }
  return groups;
}

void write_stats_csv(const fs::path& path, const std::vector<GroupStats>& groups) {
  auto out = open_csv(path);
  out << "method,nsr,count,median,q1,q3,whisker_low,whisker_high,outliers,"
         "k_median,k_q1,k_q3\n";
  for (const auto& g : groups) {
    std::string outliers;
    for (double v : g.error.outliers) {
      if (!outliers.empty()) outliers += ';';
      outliers += num(v);
    }
    out << g.method << ',' << num(g.nsr) << ',' << g.error.count << ',' << num(g.error.median)
        << ',' << num(g.error.q1) << ',' << num(g.error.q3) << ',' << num(g.error.whisker_low)
        << ',' << num(g.error.whisker_high) << ',' << outliers << ',' << num(g.k_stop.median)
        << ',' << num(g.k_stop.q1) << ',' << num(g.k_stop.q3) << '\n';
  }
}

void write_gnuplot_dat(const fs::path& path, const std::vector<GroupStats>& groups) {
  auto out = open_csv(path);
  std::vector<std::string> order;
  for (const auto& g : groups) {
    if (std::find(order.begin(), order.end(), g.method) == order.end()) order.push_back(g.method);
  }
  for (const auto& method : order) {
    out << "# " << method << "\n# nsr q1 whisker_low whisker_high q3 median\n";
    for (const auto& g : groups) {
      if (g.method != method) continue;
      out << num(g.nsr) << ' ' << num(g.error.q1) << ' ' << num(g.error.whisker_low) << ' '
          << num(g.error.whisker_high) << ' ' << num(g.error.q3) << ' ' << num(g.error.median)
          << '\n';
    }
    out << "\n\n";
  }
}

std::vector<TimingRow> run_timing(const std::vector<Eigen::Index>& n_ladder, Eigen::Index m,
                                  int k_fixed, int replicas, std::uint64_t seed) {
  if (k_fixed < 1) throw UsageError("timing needs k_fixed >= 1");
  if (replicas < 1) throw UsageError("timing needs replicas >= 1");
  if (n_ladder.empty()) throw UsageError("empty n ladder");
  for (std::size_t i = 0; i < n_ladder.size(); ++i) {
    if (n_ladder[i] < 2 || (i > 0 && n_ladder[i] <= n_ladder[i - 1])) {
      throw UsageError("n ladder must be ascending with values >= 2");
    }
  }
  std::vector<TimingRow> rows;
  for (Eigen::Index n : n_ladder) {
    const FredholmSetup setup = make_fredholm(KernelId::ExpDecay, m, n);
    const TestProblem clean = make_problem(setup.map, setup.geom,
                                           true_solution(TruthKind::OutFsoi, setup), setup.dt);
    const TestProblem problem = add_noise(clean, 0.1, seed);
    const FixedIterations rule{k_fixed};
    for (int r = 0; r < replicas; ++r) {
      auto start = Clock::now();
      const auto it = idarr_solve(problem.geom, problem.b, rule);
      rows.push_back({"iDARR", n, r, elapsed_ms(start)});
      if (it.x.size() != n) throw NumericalBreakdownError("timing: bad iDARR output");

      start = Clock::now();
      const auto direct = dartr_solve(setup.map->entries(), problem.b, setup.geom.weights());
      rows.push_back({"DARTR", n, r, elapsed_ms(start)});
      if (direct.x.size() != n) throw NumericalBreakdownError("timing: bad DARTR output");
    }
  }
  return rows;
}

void write_timing_csv(const fs::path& path, const std::vector<TimingRow>& rows) {
  auto out = open_csv(path);
  out << "method,n,replica,wall_time_ms\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.n << ',' << r.replica << ',' << num(r.wall_ms) << '\n';
  }
}

double median_time(const std::vector<TimingRow>& rows, const std::string& method,
                   Eigen::Index n) {
  std::vector<double> t;
  for (const auto& r : rows) {
    if (r.method == method && r.n == n) t.push_back(r.wall_ms);
  }
  return quantile(t, 0.5);
}

DeblurResult run_deblur(const TestProblem& problem, const DeblurOptions& options) {
  if (!is_iterative(options.method)) throw UsageError("deblur needs an iterative method");
  if (options.trace_iters < 1) throw UsageError("trace_iters must be >= 1");
  StopSettings settings = options.stop_settings;
  settings.max_iters = std::min(settings.max_iters, options.trace_iters);
  if (settings.max_iters < settings.min_iters) settings.min_iters = settings.max_iters;
  const double noise = expected_noise_norm(problem);
  if (options.stop == StopChoice::Discrepancy && !(noise > 0.0)) {
    throw UsageError("discrepancy stopping needs nsr > 0");
  }
  const StopRule rule = make_stop_rule(options.stop, settings, noise);

  DeblurResult out;
  const MethodOutcome selected = run_method(options.method, problem, rule);
  out.x = selected.x;
  out.k_stop = selected.k_stop;
  out.not_converged = selected.not_converged;

  const double truth_norm = problem.x_true.norm();
  SolveOptions trace;
  trace.observer = [&](const Vector& x, const IterationRecord& rec) {
    out.history.push_back(rec);
    out.relative_error.push_back((x - problem.x_true).norm() / truth_norm);
  };
  const FixedIterations all{options.trace_iters};
  switch (options.method) {
    case Method::iDARR: idarr_solve(problem.geom, problem.b, all, trace); break;
    case Method::IRl2: irl2_solve(problem.map, problem.b, all, trace); break;
    default: irL2_solve(problem.geom, problem.b, all, trace); break;
  }
  out.terminal_k = static_cast<int>(out.history.size());
  return out;
}

void write_deblur_curve(const fs::path& path, const DeblurResult& result) {
  auto out = open_csv(path);
  out << "k,residual,norm,relative_error\n";
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    const auto& h = result.history[i];
    out << h.k << ',' << num(h.residual) << ',' << num(h.norm) << ','
        << num(result.relative_error[i]) << '\n';
  }
}

std::shared_ptr<const LinearMap> parse_operator(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw UsageError("operator spec needs KIND:ARGS: " + spec);
  const std::string kind = spec.substr(0, colon);
  const std::string rest = spec.substr(colon + 1);
  if (kind == "identity") {
    const long n = parse_long(rest);
    if (n < 1) throw UsageError("identity size must be >= 1");
    return std::make_shared<const DiagonalMap>(Vector::Ones(n));
  }
  if (kind == "diag") {
    const auto v = parse_real_list(rest);
    if (v.empty()) throw UsageError("diag needs at least one entry");
    return std::make_shared<const DiagonalMap>(
        Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  if (kind == "fredholm") {
    const auto parts = split(rest, ":");
    if (parts.size() != 3) throw UsageError("expected fredholm:exp|poly:M:N");
    return make_fredholm(parse_kernel(parts[0]), parse_long(parts[1]), parse_long(parts[2])).map;
  }
  if (kind == "dense") return std::make_shared<const DenseMap>(io::read_matrix(rest));
  if (kind == "gaussian") {
    const auto parts = split(rest, ":");
    if (parts.size() != 2) throw UsageError("expected gaussian:N:WIDTH");
    return std::make_shared<const PsfConvolutionMap>(parse_long(parts[0]),
                                                     gaussian_psf(parse_real(parts[1])));
  }
  if (kind == "psf") {
    const auto sep = rest.find(':');
    if (sep == std::string::npos) throw UsageError("expected psf:N:FILE");
    PsfSpec psf{PsfSpec::Kind::FromFile, 0.0, rest.substr(sep + 1)};
    return std::make_shared<const PsfConvolutionMap>(parse_long(rest.substr(0, sep)),
                                                     make_psf(psf));
  }
  if (kind == "problem") return io::load_operator(rest);
  throw UsageError("unknown operator kind '" + kind + "'");
}

}  // namespace idarr::harness
