#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "capbound/design.hpp"
#include "capbound/estimators.hpp"
#include "capbound/records.hpp"

namespace capbound {

// How far below the boundary the bulk of points fall. The uniform law draws
// gaps in [min_gap, max_gap]; a positive min_gap leaves a clear band under
// the boundary, in which case the tau-quantile set is the whole band and the
// recorded quantile function marks its upper endpoint (the boundary). The
// beta law scales a Beta(2,5) draw to [0, boundary], giving a dense upper
// envelope with a long lower tail and a unique quantile.
struct GapLaw {
  enum class Kind { uniform, beta };
  Kind kind = Kind::beta;
  double min_gap = 0.0;
  double max_gap = 0.35;

  static GapLaw uniform(double min_gap, double max_gap) {
    return GapLaw{Kind::uniform, min_gap, max_gap};
  }
  static GapLaw beta() { return GapLaw{Kind::beta, 0.0, 0.0}; }
};

struct GeneratorSpec {
  SigmoidParams truth;  // conditional tau-quantile when exceed_prob = 1 - tau
  double z_lo = 18.0;
  double z_hi = 26.0;
  long n = 1000;
  GapLaw gap{};
  double exceed_prob = 0.02;
  double bump_max = 0.02;  // exceeders land in (boundary, boundary + bump_max]
  // One boundary offset per chronological period; empty means one period.
  std::vector<double> drift;
  std::uint64_t seed = 0;
  std::string task = "synthetic";

  void validate() const;
};

struct SynthData {
  Dataset dataset;
  SigmoidParams truth;
  std::vector<double> period_offsets;  // size = number of periods
  std::vector<Date> period_dates;      // release date per period
  std::string task;

  // Exact conditional tau-quantile of the construction.
  double quantile(double z, std::size_t period = 0) const;
  nlohmann::ordered_json truth_json() const;
};

SynthData generate(const GeneratorSpec& spec);

// Sort-based order statistic at ceil(tau * n) - 1 (clamped); the independent
// reference for the level fitted by the smoothed objective.
double empirical_quantile(std::span<const double> y, double tau);

struct ExhaustiveResult {
  std::vector<std::size_t> subset;  // pool indices of the optimum
  double objective = 0.0;
};

// Enumerates every budget-feasible subset of a small pool and returns the
// Phi_lambda maximizer via direct inversion. The brute-force counterpart to
// greedy_select; pools above 20 candidates are refused.
ExhaustiveResult exhaustive_design(std::span<const DesignCandidate> pool,
                                   const SigmoidParams& theta0, const DesignConfig& cfg,
                                   const BinPartition& bins);

}  // namespace capbound
