#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "capbound/dates.hpp"
#include "capbound/estimators.hpp"
#include "capbound/records.hpp"

namespace capbound {

// logit-linear boundary in log-params, a smooth (linear) time trend, a
// late-period shift and a size x late interaction; coefficients are reported
// in raw coordinates.
struct SizeTimeParams {
  double alpha = 0.0;      // intercept
  double beta = 0.0;       // per log-param effect
  double phi_slope = 0.0;  // per year (days since data start / 365)
  double delta = 0.0;      // late-period shift
  double theta = 0.0;      // size x late interaction
  Date cutoff;
};

struct SizeTimeFit {
  SizeTimeParams params;
  double objective = 0.0;
  long iterations = 0;
  // Derived summaries: marginal size effects and the boundary for a
  // small-model reference size at the earliest / latest observed time.
  double beta_early = 0.0;
  double beta_late = 0.0;
  double q_ref_early = 0.0;
  double q_ref_late = 0.0;
  double reference_log_params = 0.0;
  Date t_early, t_late;

  nlohmann::ordered_json to_json() const;
};

struct SizeTimePoint {
  double log_params = 0.0;  // natural log by default; the CLI exposes the base
  Date date;
  double score = 0.0;
};

SizeTimeFit fit_size_time(std::span<const SizeTimePoint> data, Date cutoff,
                          double reference_log_params, const FitConfig& cfg);

struct DominancePoint {
  std::string model_id;
  double param_count = 0.0;
  Date date;
  double score = 0.0;
};

struct DominanceLabel {
  std::string model_id;
  Date date;
  double score = 0.0;
  double small_best = 0.0;  // running small-model max at the model's date
  bool dominated = false;
};

struct DominanceReport {
  std::vector<DominanceLabel> large_models;
  // Small-model cumulative-best series, one entry per date where it moved.
  std::vector<std::pair<Date, double>> small_boundary;
  double dominated_fraction = 0.0;
  long n_large = 0;
  long n_small = 0;

  nlohmann::ordered_json to_json() const;
};

// Large = param_count > size_cutoff. A large model is dominated when its
// score is strictly below the best small-model score up to (and including)
// its release date.
DominanceReport dominance_analysis(std::span<const DominancePoint> data, double size_cutoff);

struct ShiftPair {
  double reference = 0.0;  // percent score on the anchor benchmark, in [0,100]
  double target = 0.0;     // percent score on the probed benchmark
  bool post = false;       // released after the probed benchmark's cutoff
};

struct ShiftTestResult {
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
  double gamma_hat = 0.0;
  double gamma_se = 0.0;
  double t_stat = 0.0;
  double p_value = 0.0;
  long n = 0;
  long n_excluded = 0;  // pairs at 0 or 100 (logit undefined)
  std::optional<Interval> restricted_range;
  double ci_lo = 0.0, ci_hi = 0.0;  // 95% interval for gamma

  nlohmann::ordered_json to_json() const;
};

// OLS of logit(0.01 target) on logit(0.01 reference) and the post indicator.
// With `restrict_range`, pairs outside the overlap of the two groups'
// reference-score ranges are dropped first.
ShiftTestResult contamination_shift_test(std::span<const ShiftPair> pairs,
                                         bool restrict_range);

struct PcaBoundaryResult {
  std::vector<double> explained_variance;  // ratios, descending
  std::vector<std::vector<double>> components;  // row = loading vector
  std::vector<BoundaryModel> boundaries;        // sigmoid fit per component
  long n_records = 0;

  nlohmann::ordered_json to_json() const;
};

// Standardizes the per-task score columns over records complete on `tasks`
// (and carrying compute), eigendecomposes the correlation matrix by Jacobi
// rotations, rescales each projected component to [0,1] and fits a sigmoid
// boundary against log-compute.
PcaBoundaryResult pca_boundary(const Dataset& d, const std::vector<std::string>& tasks,
                               int k, const FitConfig& cfg);

}  // namespace capbound
