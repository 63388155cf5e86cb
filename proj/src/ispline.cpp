#include "capbound/ispline.hpp"

#include <algorithm>
#include <cmath>

#include "capbound/errors.hpp"

namespace capbound {

namespace {
// 3-point Gauss-Legendre on [-1, 1]; exact for polynomials up to degree 5.
constexpr double kGlNode[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr double kGlWeight[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
}  // namespace

MonotoneSplineBasis::MonotoneSplineBasis(double lo, double hi,
                                         std::vector<double> interior_knots, int order)
    : lo_(lo), hi_(hi), interior_(std::move(interior_knots)), order_(order) {
  if (!(hi_ > lo_)) throw ValidationError("spline basis: need hi > lo");
  if (order_ < 2 || order_ > 6) throw ValidationError("spline basis: order must be in [2,6]");
  if (!std::is_sorted(interior_.begin(), interior_.end()))
    throw ValidationError("spline basis: interior knots must be nondecreasing");
  for (double k : interior_)
    if (k < lo_ || k > hi_) throw ValidationError("spline basis: interior knot outside range");

  const std::size_t p = static_cast<std::size_t>(order_);
  knots_.assign(p, lo_);
  knots_.insert(knots_.end(), interior_.begin(), interior_.end());
  knots_.insert(knots_.end(), p, hi_);
  basis_count_ = knots_.size() - p;  // = order + #interior

  breakpoints_.push_back(lo_);
  for (double k : interior_)
    if (k > breakpoints_.back()) breakpoints_.push_back(k);
  if (hi_ > breakpoints_.back()) breakpoints_.push_back(hi_);

  // Per-basis cumulative integrals at every breakpoint.
  cumulative_.assign(basis_count_, std::vector<double>(breakpoints_.size(), 0.0));
  for (std::size_t j = 0; j < basis_count_; ++j) {
    for (std::size_t s = 1; s < breakpoints_.size(); ++s) {
      const double a = breakpoints_[s - 1];
      const double b = breakpoints_[s];
      const double half = 0.5 * (b - a);
      const double mid = 0.5 * (a + b);
      double seg = 0.0;
      for (int g = 0; g < 3; ++g) seg += kGlWeight[g] * m(j, mid + half * kGlNode[g]);
      cumulative_[j][s] = cumulative_[j][s - 1] + half * seg;
    }
  }
}

double MonotoneSplineBasis::m_rec(std::size_t j, int order, double x) const {
  const double tj = knots_[j];
  const double tjk = knots_[j + static_cast<std::size_t>(order)];
  if (tjk <= tj) return 0.0;  // empty support from repeated knots
  if (order == 1) {
    // Half-open segments; the top boundary segment closes at hi.
    const bool inside = (x >= tj && x < tjk) || (x == hi_ && tjk == hi_);
    return inside ? 1.0 / (tjk - tj) : 0.0;
  }
  if (x < tj || x > tjk) return 0.0;
  const double left = (x - tj) * m_rec(j, order - 1, x);
  const double right = (tjk - x) * m_rec(j + 1, order - 1, x);
  return static_cast<double>(order) * (left + right) /
         (static_cast<double>(order - 1) * (tjk - tj));
}

double MonotoneSplineBasis::m(std::size_t j, double x) const {
  if (j >= basis_count_) throw ValidationError("spline basis: index out of range");
  return m_rec(j, order_, x);
}

double MonotoneSplineBasis::i(std::size_t j, double x) const {
  if (j >= basis_count_) throw ValidationError("spline basis: index out of range");
  if (x <= knots_[j]) return 0.0;  // M_j vanishes below its first knot
  if (x >= knots_[j + static_cast<std::size_t>(order_)]) return 1.0;
  if (x >= hi_) return 1.0;
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  const std::size_t s = static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
  const double a = breakpoints_[s];
  double acc = cumulative_[j][s];
  if (x > a) {
    const double half = 0.5 * (x - a);
    const double mid = 0.5 * (a + x);
    double seg = 0.0;
    for (int g = 0; g < 3; ++g) seg += kGlWeight[g] * m(j, mid + half * kGlNode[g]);
    acc += half * seg;
  }
  // The segment accumulation is exact; clamp only against roundoff.
  return std::min(1.0, std::max(0.0, acc));
}

nlohmann::ordered_json MonotoneSplineBasis::to_json() const {
  nlohmann::ordered_json j;
  j["lo"] = lo_;
  j["hi"] = hi_;
  j["interior_knots"] = interior_;
  j["order"] = order_;
  return j;
}

MonotoneSplineBasis MonotoneSplineBasis::from_json(const nlohmann::json& j) {
  return MonotoneSplineBasis(j.at("lo").get<double>(), j.at("hi").get<double>(),
                             j.at("interior_knots").get<std::vector<double>>(),
                             j.at("order").get<int>());
}

}  // namespace capbound
