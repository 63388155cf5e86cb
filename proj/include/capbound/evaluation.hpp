#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "capbound/binning.hpp"
#include "capbound/estimators.hpp"
#include "capbound/records.hpp"

namespace capbound {

enum class Scope { in_distribution, out_of_distribution };

struct BinCoverage {
  std::size_t bin = 0;
  long n = 0;
  double tau_hat = 0.0;
  double deviation = 0.0;  // tau_hat - tau; negative means under-coverage
};

struct EvalReport {
  double mean_pinball = 0.0;        // smoothed, at the fit's kappa
  double mean_exact_pinball = 0.0;  // unsmoothed check loss; kappa-comparable
  std::vector<BinCoverage> coverage_by_bin;  // empty bins omitted
  double global_coverage_error = 0.0;        // over all in-overlap points
  double mean_abs_bin_deviation = 0.0;       // calibration-error aggregate
  Scope scope = Scope::in_distribution;
  Interval overlap;
  long n_points = 0;        // points actually scored
  long n_out_of_range = 0;  // dropped by the overlap/partition restriction

  nlohmann::ordered_json to_json() const;
};

// Mean smoothed pinball of the model over (z, y); binwise models skip (and
// count) points outside their partition.
double mean_pinball(const BoundaryModel& model, std::span<const double> z,
                    std::span<const double> y, const LossConfig& loss);

std::vector<BinCoverage> coverage_by_bin(const BoundaryModel& model,
                                         std::span<const double> z,
                                         std::span<const double> y,
                                         const BinPartition& bins, double tau);

// Full per-scope report; points outside `overlap` are dropped and counted.
EvalReport evaluate_scope(const BoundaryModel& model, std::span<const double> z,
                          std::span<const double> y, const BinPartition& bins,
                          const LossConfig& loss, Scope scope, Interval overlap);

struct RollingConfig {
  std::vector<Family> families{Family::constant, Family::binwise, Family::sigmoid,
                               Family::ispline};
  FitConfig fit{};
  int target_bins = 8;
  int min_mass = 10;
  int knot_count = 3;
  int spline_order = 3;
};

struct SplitFamilyResult {
  Family family = Family::constant;
  bool skipped = false;
  std::string skip_reason;
  std::optional<EvalReport> id;   // in-distribution (training period)
  std::optional<EvalReport> ood;  // next period restricted to the overlap
};

struct SplitReport {
  std::size_t split = 0;  // fit on period t, validate on t+1
  std::string train_label;
  std::string valid_label;
  long n_train = 0;
  long n_valid = 0;
  std::optional<Interval> overlap;
  std::vector<SplitFamilyResult> families;
};

// Per-family averages across splits, with nulls where every split skipped.
struct FamilyAggregate {
  Family family = Family::constant;
  std::optional<double> id_pinball;
  std::optional<double> ood_pinball;
  std::optional<double> id_exact_pinball;
  std::optional<double> ood_exact_pinball;
  std::optional<double> id_calibration;
  std::optional<double> ood_calibration;
  // Percent change versus the constant baseline, when that baseline exists.
  std::optional<double> ood_pinball_vs_constant_pct;
  std::optional<double> ood_calibration_vs_constant_pct;
  long splits_used = 0;
};

struct RollingResult {
  std::string task;
  std::vector<SplitReport> splits;
  std::vector<FamilyAggregate> aggregates;

  nlohmann::ordered_json to_json() const;
  // Tidy rows (one per bin per split per family per scope) for plotting.
  std::string to_csv() const;
};

RollingResult rolling_protocol(const Dataset& data, const PeriodPartition& periods,
                               const std::string& task, const RollingConfig& cfg);

struct SweepCell {
  double kappa = 0.0;
  double lambda = 0.0;
  // Exact check loss, so cells with different kappa stay comparable (the
  // smoothed loss carries a log(2)/kappa floor that would swamp fit
  // differences across the grid).
  std::optional<double> ood_pinball;
  std::optional<double> ood_abs_coverage;
};

// Hyperparameter robustness grid: rolling protocol for the sigmoid family at
// every (kappa, lambda) combination.
std::vector<SweepCell> sensitivity_sweep(const Dataset& data, const PeriodPartition& periods,
                                         const std::string& task,
                                         std::span<const double> kappa_grid,
                                         std::span<const double> lambda_grid,
                                         const RollingConfig& cfg);

}  // namespace capbound
