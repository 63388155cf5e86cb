#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace capbound {

struct OptimizerConfig {
  int max_iterations = 2000;
  double learning_rate = 0.05;
  int restarts = 5;
  std::uint64_t seed = 0;
  // Stop when the best objective improved by less than `tolerance` over the
  // last `patience` iterations.
  double tolerance = 1e-10;
  int patience = 50;

  void validate() const;
};

struct OptResult {
  std::vector<double> params;
  double objective = 0.0;
  int iterations = 0;
};

// Full-batch Adam (momentum + per-coordinate scaling) tracking the best
// parameters seen, so the recorded objective is non-increasing even though
// individual steps may overshoot.
template <class Objective>
OptResult adam_minimize(Objective&& objective, std::vector<double> init,
                        const OptimizerConfig& cfg) {
  const std::size_t np = init.size();
  std::vector<double> p = std::move(init);
  std::vector<double> grad(np, 0.0), m(np, 0.0), v(np, 0.0);
  std::vector<double> best_p = p;
  double best = objective(std::span<const double>(p), std::span<double>(grad));
  std::vector<double> best_history{best};

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double b1t = 1.0, b2t = 1.0;
  int it = 0;
  for (; it < cfg.max_iterations; ++it) {
    b1t *= beta1;
    b2t *= beta2;
    for (std::size_t j = 0; j < np; ++j) {
      m[j] = beta1 * m[j] + (1.0 - beta1) * grad[j];
      v[j] = beta2 * v[j] + (1.0 - beta2) * grad[j] * grad[j];
      const double mh = m[j] / (1.0 - b1t);
      const double vh = v[j] / (1.0 - b2t);
      p[j] -= cfg.learning_rate * mh / (std::sqrt(vh) + eps);
    }
    const double f = objective(std::span<const double>(p), std::span<double>(grad));
    if (f < best) {
      best = f;
      best_p = p;
    }
    best_history.push_back(best);
    const std::size_t lag = static_cast<std::size_t>(cfg.patience);
    if (best_history.size() > lag &&
        best_history[best_history.size() - 1 - lag] - best < cfg.tolerance)
      break;
  }
  return OptResult{std::move(best_p), best, it + 1};
}

// Golden-section minimization of a unimodal function on [lo, hi].
template <class F>
double golden_section_min(F&& f, double lo, double hi, double tol = 1e-8) {
  constexpr double inv_phi = 0.6180339887498948482;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace capbound
