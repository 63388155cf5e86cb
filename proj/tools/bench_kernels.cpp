// Timing harness for the data-parallel kernels against their serial
// reference implementations: the batch pinball objective/gradient that
// dominates fitting, and the candidate-gain scan inside greedy selection.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "capbound/batch_objective.hpp"
#include "capbound/design.hpp"
#include "capbound/parallel.hpp"
#include "capbound/pinball.hpp"
#include "capbound/rng.hpp"

using namespace capbound;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

template <class F>
double time_best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = now_ms();
    f();
    best = std::min(best, now_ms() - t0);
  }
  return best;
}

void bench_objective(std::size_t n) {
  Rng rng(7);
  std::vector<double> z(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = rng.uniform(18.0, 26.0);
    y[i] = rng.uniform();
  }
  const LossConfig loss{0.98, 50.0};
  const SigmoidParams theta{0.1, 0.8, -22.0, 1.0};
  auto pred = [&](std::size_t, double zi, double* jac) {
    const double s = logistic(theta.offset + theta.slope * zi);
    const double band = theta.rise * s * (1.0 - s);
    jac[0] = 1.0;
    jac[1] = s;
    jac[2] = band;
    jac[3] = band * zi;
    return theta.floor + theta.rise * s;
  };
  std::vector<double> g_par(4), g_ser(4);
  double f_par = 0.0, f_ser = 0.0;
  const double t_par = time_best_of(5, [&] {
    f_par = batch_objective_grad(z, y, loss, 4, pred, g_par);
  });
  const double t_ser = time_best_of(5, [&] {
    f_ser = serial::batch_objective_grad(z, y, loss, 4, pred, g_ser);
  });
  double max_diff = std::fabs(f_par - f_ser);
  for (int j = 0; j < 4; ++j) max_diff = std::max(max_diff, std::fabs(g_par[j] - g_ser[j]));
  std::printf("objective+grad   n=%-9zu serial %8.2f ms   parallel %8.2f ms   x%.2f   max|diff| %.2e\n",
              n, t_ser, t_par, t_ser / t_par, max_diff);
}

void bench_gain_scan(std::size_t pool_size) {
  Rng rng(11);
  const SigmoidParams theta{0.1, 0.8, -22.0, 1.0};
  std::vector<Vec4> jac(pool_size);
  for (auto& j : jac) j = boundary_jacobian(rng.uniform(18.0, 26.0), theta);
  Mat4 k = Mat4::identity(1e9);
  Mat4 a;
  for (int b = 0; b < 4; ++b) a.add_outer(boundary_jacobian(19.0 + 2.0 * b, theta), 0.25);

  std::vector<double> gains_par(pool_size), gains_ser(pool_size);
  auto gain = [&](std::size_t i) {
    const Vec4 v = k.mul(jac[i]);
    return quad_form(a, v) / (1.0 + dot(jac[i], v));
  };
  const double t_par = time_best_of(5, [&] {
    par::for_each_index(pool_size, [&](std::size_t i) { gains_par[i] = gain(i); });
  });
  const double t_ser = time_best_of(5, [&] {
    for (std::size_t i = 0; i < pool_size; ++i) gains_ser[i] = gain(i);
  });
  double max_diff = 0.0;
  for (std::size_t i = 0; i < pool_size; ++i)
    max_diff = std::max(max_diff, std::fabs(gains_par[i] - gains_ser[i]));
  std::printf("gain scan        n=%-9zu serial %8.2f ms   parallel %8.2f ms   x%.2f   max|diff| %.2e\n",
              pool_size, t_ser, t_par, t_ser / t_par, max_diff);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", par::max_threads());
  bench_objective(1u << 22);
  bench_objective(1u << 18);
  bench_gain_scan(1u << 20);
  bench_gain_scan(1u << 14);
  return 0;
}
