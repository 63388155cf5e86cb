#include "capbound/pinball.hpp"

#include <vector>

#include "capbound/errors.hpp"
#include "capbound/parallel.hpp"

namespace capbound {

void LossConfig::validate() const {
  if (!(tau > 0.0 && tau < 1.0)) throw ValidationError("tau must lie in (0,1)");
  if (!(kappa > 0.0)) throw ValidationError("kappa must be positive");
}

double mean_smoothed_pinball(std::span<const double> residuals, const LossConfig& c) {
  if (residuals.empty()) throw ValidationError("mean_smoothed_pinball: empty input");
  std::vector<double> partial(par::block_count(residuals.size()), 0.0);
  par::for_each_block(residuals.size(), [&](std::size_t b, std::size_t lo, std::size_t hi) {
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += smoothed_pinball(residuals[i], c);
    partial[b] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total / static_cast<double>(residuals.size());
}

namespace serial {

double mean_smoothed_pinball(std::span<const double> residuals, const LossConfig& c) {
  if (residuals.empty()) throw ValidationError("mean_smoothed_pinball: empty input");
  double acc = 0.0;
  for (double u : residuals) acc += smoothed_pinball(u, c);
  return acc / static_cast<double>(residuals.size());
}

}  // namespace serial
}  // namespace capbound
