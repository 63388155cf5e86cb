#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "capbound/parallel.hpp"
#include "capbound/pinball.hpp"

namespace capbound {

inline constexpr std::size_t kMaxFitParams = 64;

// Mean smoothed pinball of y_i - q_i together with its gradient with respect
// to the model parameters. `f(i, z_i, jac)` returns the prediction q_i and
// fills jac[0..np) with dq_i/dp. This is the hot loop of every fit; it runs
// blocked and combines partial sums in block order, so the result is
// bit-identical for any OpenMP thread count. The serial namespace keeps a
// plain loop as the reference implementation for tests and benchmarks.
template <class PredJac>
double batch_objective_grad(std::span<const double> z, std::span<const double> y,
                            const LossConfig& loss, std::size_t np, PredJac&& f,
                            std::span<double> grad_out) {
  const std::size_t n = z.size();
  const std::size_t stride = np + 1;
  std::vector<double> partial(par::block_count(n) * stride, 0.0);
  par::for_each_block(n, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    double* acc = partial.data() + b * stride;
    std::array<double, kMaxFitParams> jac{};
    for (std::size_t i = lo; i < hi; ++i) {
      const double q = f(i, z[i], jac.data());
      const double u = y[i] - q;
      acc[0] += smoothed_pinball(u, loss);
      const double w = -smoothed_pinball_grad(u, loss);
      for (std::size_t j = 0; j < np; ++j) acc[1 + j] += w * jac[j];
    }
  });
  double total = 0.0;
  for (std::size_t j = 0; j < np; ++j) grad_out[j] = 0.0;
  for (std::size_t b = 0; b < par::block_count(n); ++b) {
    const double* acc = partial.data() + b * stride;
    total += acc[0];
    for (std::size_t j = 0; j < np; ++j) grad_out[j] += acc[1 + j];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < np; ++j) grad_out[j] *= inv_n;
  return total * inv_n;
}

namespace serial {

template <class PredJac>
double batch_objective_grad(std::span<const double> z, std::span<const double> y,
                            const LossConfig& loss, std::size_t np, PredJac&& f,
                            std::span<double> grad_out) {
  const std::size_t n = z.size();
  std::array<double, kMaxFitParams> jac{};
  double total = 0.0;
  for (std::size_t j = 0; j < np; ++j) grad_out[j] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = f(i, z[i], jac.data());
    const double u = y[i] - q;
    total += smoothed_pinball(u, loss);
    const double w = -smoothed_pinball_grad(u, loss);
    for (std::size_t j = 0; j < np; ++j) grad_out[j] += w * jac[j];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < np; ++j) grad_out[j] *= inv_n;
  return total * inv_n;
}

}  // namespace serial
}  // namespace capbound
