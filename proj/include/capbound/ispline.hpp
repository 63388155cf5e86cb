#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

namespace capbound {

// M-spline basis of a given order on [lo, hi] with interior knots, plus the
// integrated I-spline basis. Each M_j is a nonnegative density (integral 1
// over its support), so each I_j rises from 0 below its first knot to 1 above
// its last. M_j is polynomial of degree order-1 on every knot segment, which
// lets I_j accumulate 3-point Gauss-Legendre segment integrals that are exact
// for order <= 6.
class MonotoneSplineBasis {
 public:
  MonotoneSplineBasis(double lo, double hi, std::vector<double> interior_knots, int order);

  std::size_t size() const { return basis_count_; }
  int order() const { return order_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<double>& interior_knots() const { return interior_; }

  double m(std::size_t j, double x) const;  // M_j(x)
  double i(std::size_t j, double x) const;  // integral of M_j from lo to x

  nlohmann::ordered_json to_json() const;
  static MonotoneSplineBasis from_json(const nlohmann::json& j);

 private:
  double m_rec(std::size_t j, int order, double x) const;

  double lo_ = 0.0, hi_ = 1.0;
  std::vector<double> interior_;
  int order_ = 3;
  std::size_t basis_count_ = 0;
  std::vector<double> knots_;        // extended: lo x order, interior, hi x order
  std::vector<double> breakpoints_;  // unique knot values
  // cumulative_[j][s] = integral of M_j over breakpoints_[0..s].
  std::vector<std::vector<double>> cumulative_;
};

}  // namespace capbound
