#pragma once

// Experiment configuration, the replication engine behind the CLI, and its
// tabular outputs. Replicate i draws from RngStream(seed, i), so results do
// not depend on the number of worker threads.

#include "dppfit/estimator.hpp"
#include "dppfit/inference.hpp"
#include "dppfit/kernel.hpp"
#include "dppfit/sampler.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dppfit {

struct CandidateModel {
  Family family = Family::gaussian;
  std::optional<double> nu;

  KernelModel model(int dim) const { return KernelModel::make(family, nu, dim); }
};

struct ExperimentConfig {
  std::string name = "experiment";
  Family family = Family::gaussian;
  std::optional<double> nu;
  Theta theta0{10.0, {0.1}};
  /// Window side: the window is [0, n]^d.
  double n = 5.0;
  int d = 2;
  /// Divisor k of the "n/k" radius rule, or an explicit radius.
  double r_divisor = 8.0;
  std::optional<double> r_value;
  int order = 2;
  int replications = 1;
  std::uint64_t seed = 0;
  std::optional<ParamBox> alpha_box;
  NormalizerKind normalizer = NormalizerKind::window;
  double tail_tol = kDefaultTailTolerance;
  int max_order = kDefaultMaxTruncationOrder;
  std::vector<CandidateModel> candidates;
  std::filesystem::path output_dir = ".";

  /// Throws ValidationError on malformed or out-of-range fields.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  KernelModel model() const { return KernelModel::make(family, nu, d); }
  RectWindow window() const { return RectWindow::cube(n, d); }
  double radius() const { return r_value ? *r_value : n / r_divisor; }
  /// The configured box, or [alpha0 / 10, 10 alpha0].
  ParamBox box() const;
  CLConfig cl_config() const;
  /// Candidates for model comparison; the configured model alone if empty.
  std::vector<KernelModel> candidate_models() const;
  /// Checks R >= 1, r > 0 and the existence condition at theta0.
  void validate() const;
};

enum class ReplicateStatus { ok, no_pairs, degenerate, sampler_failure, inference_failure, failed };

std::string_view to_string(ReplicateStatus status);

struct ReplicateRecord {
  std::size_t index = 0;
  ReplicateStatus status = ReplicateStatus::failed;
  std::string message;
  std::size_t points = 0;
  double lambda_hat = 0.0;
  double alpha_hat = 0.0;
  double cl_value = 0.0;
  double score_norm = 0.0;
  std::size_t n_tuples = 0;
  bool boundary_hit = false;
  /// Second-order score at the true alpha (sum over ordered close pairs).
  double score_at_truth = 0.0;
  /// Intensity score N / lambda0 - |D| at the truth.
  double lambda_score = 0.0;
  std::optional<double> se_lambda;
  std::optional<double> se_alpha;
  std::optional<Interval> alpha_interval;
  std::optional<double> ic_value;
};

struct ParamSummary {
  double mean = 0.0;
  /// Divisor R - 1; missing when fewer than two replicates succeeded.
  std::optional<double> sd;
};

struct ReplicationSummary {
  ExperimentConfig config;
  std::size_t successes = 0;
  std::map<std::string, std::size_t> failures;
  std::size_t boundary_hits = 0;
  ParamSummary lambda;
  ParamSummary alpha;
  /// Fraction of successful replicates whose alpha interval covers alpha0.
  std::optional<double> alpha_coverage;
  std::vector<ReplicateRecord> records;
};

struct RunOptions {
  /// 0 selects DPPFIT_THREADS, then the hardware concurrency.
  int threads = 0;
  bool se = false;
  bool ic = false;
};

inline constexpr double kMinSuccessFraction = 0.8;

int resolve_threads(int requested);

/// Runs fn(0..count-1) on a pool of workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

/// Pattern of replicate `index`.
PointPattern simulate_replicate(const ExperimentConfig& config, const SpectralApprox& approx, std::size_t index);

/// Writes <name>_window.json and one <name>_pattern_<i>.csv per replicate.
std::vector<std::filesystem::path> run_simulate(const ExperimentConfig& config, const RunOptions& options);

/// Simulate and fit every replicate. Throws EstimationError when fewer than
/// 80% of the replicates succeed.
ReplicationSummary run_replications(const ExperimentConfig& config, const RunOptions& options);

/// <name>_replicates.csv, <name>_summary.csv and <name>_summary.json.
std::vector<std::filesystem::path> write_replication(const ReplicationSummary& summary,
                                                     const std::filesystem::path& dir);

struct FitOutput {
  std::vector<std::string> models;
  std::vector<FitResult> fits;
  std::vector<std::optional<SandwichResult>> standard_errors;
  std::vector<std::optional<ICReport>> reports;
  /// Model indices by ascending IC, when --ic was requested.
  std::vector<std::size_t> ranking;
};

/// Fits the configured model (and every candidate when options.ic is set).
FitOutput run_fit(const ExperimentConfig& config, const PointPattern& pattern, const RunOptions& options);
nlohmann::json to_json(const FitOutput& output, const ExperimentConfig& config);

struct ComparisonRecord {
  std::size_t index = 0;
  ReplicateStatus status = ReplicateStatus::failed;
  std::string message;
  std::vector<double> ic_values;
  std::vector<double> cl_values;
  std::size_t selected = 0;
};

struct ComparisonSummary {
  ExperimentConfig config;
  std::vector<std::string> models;
  std::vector<std::size_t> selections;
  std::size_t successes = 0;
  std::map<std::string, std::size_t> failures;
  std::vector<ComparisonRecord> records;
};

/// For every replicate: simulate from the configured model, fit every
/// candidate, select the smallest IC.
ComparisonSummary run_comparison(const ExperimentConfig& config, const RunOptions& options);

/// <name>_compare.csv (per replicate) and <name>_selection.csv / .json.
std::vector<std::filesystem::path> write_comparison(const ComparisonSummary& summary,
                                                    const std::filesystem::path& dir);

}  // namespace dppfit
