#pragma once

#include <cmath>
#include <span>

namespace capbound {

// Quantile level and smoothing sharpness of the softplus-smoothed check loss.
struct LossConfig {
  double tau = 0.98;
  double kappa = 50.0;

  void validate() const;
};

// softplus(x) = log(1 + e^x), computed as max(x,0) + log1p(e^-|x|) so that
// kappa*u up to +-1e3 stays finite.
inline double softplus(double x) {
  const double ax = x < 0 ? -x : x;
  return (x > 0 ? x : 0.0) + std::log1p(std::exp(-ax));
}

inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Inverse of softplus on (0, inf).
inline double softplus_inv(double y) { return y < 30.0 ? std::log(std::expm1(y)) : y; }

// Smoothed pinball loss of a residual u = y - prediction.
inline double smoothed_pinball(double u, const LossConfig& c) {
  return softplus(c.kappa * u) / c.kappa + (c.tau - 1.0) * u;
}

// d/du of smoothed_pinball: logistic(kappa u) + tau - 1.
inline double smoothed_pinball_grad(double u, const LossConfig& c) {
  return logistic(c.kappa * u) + c.tau - 1.0;
}

// Exact (unsmoothed) check loss, used as an evaluation metric.
inline double exact_pinball(double u, double tau) {
  const double a = tau * u;
  const double b = (tau - 1.0) * u;
  return a > b ? a : b;
}

// Mean smoothed pinball over residuals. Parallel over fixed-size blocks with
// an ordered combine, so the value does not depend on the thread count.
double mean_smoothed_pinball(std::span<const double> residuals, const LossConfig& c);

namespace serial {
// Straightforward single-pass reference, kept for testing the kernel above.
double mean_smoothed_pinball(std::span<const double> residuals, const LossConfig& c);
}  // namespace serial

}  // namespace capbound
