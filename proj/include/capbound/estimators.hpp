#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "capbound/binning.hpp"
#include "capbound/ispline.hpp"
#include "capbound/optimizer.hpp"
#include "capbound/pinball.hpp"

namespace capbound {

enum class Family { constant, binwise, sigmoid, ispline };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

struct ConstantParams {
  double level = 0.0;
};

// Saturating boundary floor + rise * logistic(offset + slope * z), with
// 0 <= floor, 0 <= rise <= 1 - floor, slope >= 0, so predictions stay inside
// [floor, floor + rise] and never decrease in z.
struct SigmoidParams {
  double floor = 0.0;
  double rise = 0.0;
  double offset = 0.0;
  double slope = 0.0;

  double predict(double z) const { return floor + rise * logistic(offset + slope * z); }
  // Compute value at which the boundary crosses its halfway point.
  double inflection() const { return slope > 0.0 ? -offset / slope : 0.0; }
};

struct BinwiseParams {
  BinPartition partition;
  std::vector<double> levels;  // one level in [0,1] per bin
};

// Monotone spline boundary logistic(intercept + sum_j weight_j * I_j(z)) with
// nonnegative weights.
struct ISplineParams {
  MonotoneSplineBasis basis;
  double intercept = 0.0;
  std::vector<double> weights;

  double g(double z) const;
  double predict(double z) const { return logistic(g(z)); }
};

struct FitMeta {
  double objective = 0.0;
  long iterations = 0;
  std::uint64_t seed = 0;
};

struct FitConfig {
  LossConfig loss{};
  // Ridge weight on the unconstrained parameter vector, matching the
  // sum-form objective: the mean-loss objective adds (lambda_ridge / n) |p|^2.
  double lambda_ridge = 1e-3;
  OptimizerConfig optimizer{};
};

struct BoundaryModel {
  Family family = Family::constant;
  std::variant<ConstantParams, BinwiseParams, SigmoidParams, ISplineParams> params;
  FitMeta meta;
  LossConfig loss{};
  double lambda_ridge = 1e-3;

  // Binwise models return nullopt outside their partition range; the other
  // families are total.
  std::optional<double> predict_checked(double z) const;
  double predict(double z) const;  // throws on out-of-range binwise input

  const SigmoidParams& sigmoid_params() const;

  nlohmann::ordered_json to_json() const;
  static BoundaryModel from_json(const nlohmann::json& j);
};

BoundaryModel fit_constant(std::span<const double> y, const FitConfig& cfg);
BoundaryModel fit_binwise(std::span<const double> z, std::span<const double> y,
                          int target_bins, int min_mass, const FitConfig& cfg);
BoundaryModel fit_sigmoid(std::span<const double> z, std::span<const double> y,
                          const FitConfig& cfg);
BoundaryModel fit_ispline(std::span<const double> z, std::span<const double> y,
                          int knot_count, int order, const FitConfig& cfg);

// Linear-interpolated percentile (q in [0,1]) of an unsorted sample.
double percentile(std::vector<double> values, double q);

}  // namespace capbound
