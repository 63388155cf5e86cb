#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "capbound/binning.hpp"
#include "capbound/estimators.hpp"
#include "capbound/linalg.hpp"

namespace capbound {

struct DesignCandidate {
  std::string model_id;
  double z = 0.0;     // log10 FLOPs
  double cost = 0.0;  // parameter count as the evaluation-cost proxy
  std::size_t bin = 0;
};

struct DesignConfig {
  double alpha = 20.0;  // budget as percent of the full pool cost
  // Balance weight; when unset it is auto-scaled to 1e-3 times the largest
  // information gain available right after anchoring.
  std::optional<double> lambda_balance;
  double epsilon_balance = 0.01;
  double eta_ridge = 1e-9;
  std::vector<double> bin_weights;  // empty = uniform 1/B
  int polish_exchanges = 25;

  void validate() const;
};

struct TraceStep {
  int step = 0;
  std::string kind;  // "anchor", "greedy", "swap_out", "swap_in"
  std::string model_id;
  double delta_info = 0.0;
  double delta_bal = 0.0;
  double gain_per_cost = 0.0;
};

struct DesignSelection {
  std::vector<std::string> selected;  // in selection order
  double total_cost = 0.0;            // <= budget, up to summation roundoff
  double budget = 0.0;
  double objective_value = 0.0;  // Phi_lambda of the final set, direct inversion
  double lambda_balance_used = 0.0;
  std::vector<long> per_bin_counts;
  std::vector<TraceStep> trace;
  bool anchor_truncated = false;  // budget could not afford the full anchor set
  bool anchor_fallback = false;   // fewer than two distinct z in the pool

  nlohmann::ordered_json to_json() const;
};

// d(prediction)/d(floor, rise, offset, slope) at z, evaluated at theta0.
Vec4 boundary_jacobian(double z, const SigmoidParams& theta0);

struct InfoResult {
  Mat4 sigma;                   // (eta I + sum j j^T)^{-1}
  std::vector<double> v;        // predictive variance per bin midpoint
  double phi_info = 0.0;        // -sum_b w_b v_b
};

InfoResult information_and_variance(std::span<const DesignCandidate> selected,
                                    const SigmoidParams& theta0, const DesignConfig& cfg,
                                    std::span<const double> midpoints);

// sum_b log(n_b + eps)
double phi_bal(std::span<const long> per_bin_counts, double eps);

// Phi_lambda of an arbitrary subset, computed from scratch (direct inversion).
double design_objective(std::span<const DesignCandidate> pool,
                        std::span<const std::size_t> subset, const SigmoidParams& theta0,
                        const DesignConfig& cfg, std::span<const double> midpoints,
                        double lambda, std::size_t n_bins);

// Observer hook for tests: called after each state change with the running
// inverse information matrix. on_step covers anchor and greedy additions
// (delta_info is the accepted information gain); on_polish_move fires after
// an exchange or removal move, with the full surviving member list, once the
// inverse has been rebuilt directly.
struct GreedyObserver {
  virtual ~GreedyObserver() = default;
  virtual void on_step(const Mat4& k_inverse, std::size_t chosen_index,
                       double delta_info) = 0;
  virtual void on_polish_move(const Mat4& /*k_inverse*/,
                              std::span<const std::size_t> /*members*/) {}
};

DesignSelection greedy_select(std::span<const DesignCandidate> pool,
                              const SigmoidParams& theta0, const DesignConfig& cfg,
                              const BinPartition& bins, GreedyObserver* observer = nullptr);

// Assign pool bins from a partition (candidates outside the range clamp to
// the nearest edge bin so every candidate stays selectable).
std::vector<DesignCandidate> make_candidates(const std::vector<std::string>& ids,
                                             std::span<const double> z,
                                             std::span<const double> cost,
                                             const BinPartition& bins);

struct BudgetSweepRow {
  double alpha = 0.0;
  std::size_t n_selected = 0;
  double cost_fraction = 0.0;  // selected cost / pool cost
  double ood_pinball = 0.0;
  double ood_coverage_error = 0.0;
};

// Runs greedy_select at each alpha and hands the chosen ids to `downstream`,
// which fits on the corresponding records and returns (ood pinball, ood
// coverage error).
using DownstreamEval =
    std::function<std::pair<double, double>(const std::vector<std::string>&)>;
std::vector<BudgetSweepRow> budget_sweep(std::span<const DesignCandidate> pool,
                                         const SigmoidParams& theta0,
                                         const DesignConfig& cfg, const BinPartition& bins,
                                         std::span<const double> alphas,
                                         const DownstreamEval& downstream);

}  // namespace capbound
