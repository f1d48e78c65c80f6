#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "idarr/problems.hpp"
#include "idarr/solver.hpp"

namespace idarr::harness {

enum class Method { iDARR, IRl2, IRL2, l2Direct, L2Direct, DARTR };

const std::vector<Method>& all_methods();
std::string method_name(Method m);
/// Accepts the names printed by method_name; throws UsageError otherwise.
Method parse_method(const std::string& name);
bool is_iterative(Method m);

enum class StopChoice { LCurve, Discrepancy, Both };
StopChoice parse_stop_choice(const std::string& name);

struct StopSettings {
  int min_iters = 10;
  int max_iters = 100;
  double tau = 1.01;
};

/// Stopping rule for one run; DP needs the expected noise norm.
StopRule make_stop_rule(StopChoice choice, const StopSettings& s, double noise_norm);

/// Dense spectral data shared by the direct methods for a fixed operator.
class DirectCache {
public:
  DirectCache(const Matrix& a, const Vector& weights);
  const SpectralDecomposition& euclidean() const;
  const SpectralDecomposition& weighted() const;

private:
  Matrix a_;
  Vector weights_;
  mutable std::once_flag euclidean_once_, weighted_once_;
  mutable SpectralDecomposition euclidean_, weighted_;
};

struct MethodOutcome {
  Vector x;
  int k_stop = 0;
  double wall_ms = 0.0;
  bool not_converged = false;
  double norm = 0.0;  ///< solution norm in the method's own geometry
};

/// Runs one method on a problem. Direct methods need a dense operator;
/// `cache` may be null, in which case the decomposition is computed here.
MethodOutcome run_method(Method method, const TestProblem& problem,
                         const StopRule& stop, const DirectCache* cache = nullptr,
                         const SolveOptions& options = {});

/// Expected noise norm sigma sqrt(dt m) of a generated problem.
double expected_noise_norm(const TestProblem& problem);

struct ExperimentConfig {
  KernelId kernel = KernelId::ExpDecay;
  Eigen::Index m = 500;
  Eigen::Index n = 100;
  TruthKind truth = TruthKind::InFsoi;
  std::vector<double> nsr_ladder{1.0, 0.5, 0.25, 0.125, 0.0625};
  int trials = 20;
  std::vector<Method> methods = all_methods();
  StopChoice stop = StopChoice::LCurve;
  StopSettings stop_settings;
  std::uint64_t seed_base = 1;
  std::filesystem::path output_dir = "results";
  bool save_estimates = false;
};

/// INI file with [problem] and [experiment] sections.
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& config);

KernelId parse_kernel(const std::string& name);
TruthKind parse_truth(const std::string& name);
std::vector<double> parse_real_list(const std::string& text);

struct ResultRow {
  std::string method;
  double nsr = 0.0;
  int trial = 0;
  int k_stop = 0;
  double l2rho_error = 0.0;
  double relative_error = 0.0;
  double loss = 0.0;
  double wall_time_ms = 0.0;
  std::uint64_t seed = 0;
};

struct FailedRow {
  std::string method;
  double nsr = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string error;
};

struct BenchResult {
  std::vector<ResultRow> rows;
  std::vector<FailedRow> failures;
};

/// Noise seed of one (nsr, trial) cell. All methods of a cell see the same
/// noise realization.
std::uint64_t row_seed(std::uint64_t seed_base, std::size_t nsr_index, int trial);

/// Worker count: `requested` if positive, else hardware concurrency;
/// capped by IDARR_THREADS when set.
int worker_count(int requested = 0);

/// Runs every (method, nsr, trial) row. Writes nothing to disk unless
/// save_estimates is set.
BenchResult run_fredholm_bench(const ExperimentConfig& config, int threads = 0);

void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
void write_failures_csv(const std::filesystem::path& path, const std::vector<FailedRow>& rows);

/// Tukey boxplot summary: type-7 quartiles, whiskers at the most extreme
/// data within 1.5 IQR of the box.
struct BoxStats {
  std::size_t count = 0;
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
};
BoxStats box_stats(std::vector<double> values);
double quantile(std::vector<double> values, double p);

struct GroupStats {
  std::string method;
  double nsr = 0.0;
  BoxStats error;
  BoxStats k_stop;
};
/// One group per (method, nsr), in first-appearance order.
std::vector<GroupStats> group_stats(const std::vector<ResultRow>& rows);
void write_stats_csv(const std::filesystem::path& path, const std::vector<GroupStats>& groups);
/// gnuplot candlestick data: one block per method, columns
/// nsr q1 whisker_low whisker_high q3 median.
void write_gnuplot_dat(const std::filesystem::path& path, const std::vector<GroupStats>& groups);

struct TimingRow {
  std::string method;
  Eigen::Index n = 0;
  int replica = 0;
  double wall_ms = 0.0;
};

/// iDARR with k_fixed iterations and DARTR on ExpDecay problems of size
/// m x n for each n.
std::vector<TimingRow> run_timing(const std::vector<Eigen::Index>& n_ladder, Eigen::Index m,
                                  int k_fixed, int replicas = 10, std::uint64_t seed = 1);
void write_timing_csv(const std::filesystem::path& path, const std::vector<TimingRow>& rows);
/// Median wall time per (method, n).
double median_time(const std::vector<TimingRow>& rows, const std::string& method, Eigen::Index n);

struct DeblurOptions {
  Method method = Method::iDARR;
  StopChoice stop = StopChoice::LCurve;
  StopSettings stop_settings;
  /// Iterations of the traced run that produces the error curve.
  int trace_iters = 1000;
};

struct DeblurResult {
  Vector x;  ///< iterate selected by the stopping rule
  int k_stop = 0;
  bool not_converged = false;
  std::vector<IterationRecord> history;  ///< traced run
  std::vector<double> relative_error;    ///< ||x_k - x_true|| / ||x_true||
  int terminal_k = 0;                    ///< last iterate of the traced run
};

DeblurResult run_deblur(const TestProblem& problem, const DeblurOptions& options);
void write_deblur_curve(const std::filesystem::path& path, const DeblurResult& result);

/// Operator from a text spec: identity:N, diag:v1,v2,..., fredholm:exp|poly:M:N,
/// dense:FILE, gaussian:N:WIDTH, psf:N:FILE, problem:DIR.
std::shared_ptr<const LinearMap> parse_operator(const std::string& spec);

}  // namespace idarr::harness
