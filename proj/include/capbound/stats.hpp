#pragma once

#include <cstddef>
#include <vector>

namespace capbound {

// Regularized incomplete beta function I_x(a, b), continued-fraction form.
double incomplete_beta(double a, double b, double x);

// Student-t distribution with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);
double student_t_two_sided_p(double t, double dof);
double student_t_quantile(double p, double dof);

// Ordinary least squares with homoskedastic standard errors. `x` is row-major
// n x p (caller supplies the intercept column).
struct OlsResult {
  std::vector<double> coef;
  std::vector<double> se;
  double sigma2 = 0.0;
  std::size_t n = 0;
  std::size_t p = 0;
};
OlsResult ols(const std::vector<double>& x, const std::vector<double>& y, std::size_t p);

}  // namespace capbound
