#include "capbound/stats.hpp"

#include <cmath>
#include <string>

#include "capbound/errors.hpp"
#include "capbound/linalg.hpp"

namespace capbound {

namespace {

// Modified Lentz continued fraction for the incomplete beta.
double beta_cf(double a, double b, double x) {
  constexpr double eps = 3e-16;
  constexpr double fpmin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) return h;
  }
  throw NumericError("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw ValidationError("incomplete_beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                       a * std::log(x) + b * std::log1p(-x);
  const double bt = std::exp(ln_bt);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * beta_cf(a, b, x) / a;
  return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
  if (!(dof > 0.0)) throw ValidationError("student_t: dof must be positive");
  return incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
}

double student_t_cdf(double t, double dof) {
  const double half_tail = 0.5 * student_t_two_sided_p(t, dof);
  return t >= 0.0 ? 1.0 - half_tail : half_tail;
}

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("student_t_quantile: p must be in (0,1)");
  if (p == 0.5) return 0.0;
  double lo = -1.0, hi = 1.0;
  while (student_t_cdf(lo, dof) > p) lo *= 2.0;
  while (student_t_cdf(hi, dof) < p) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, dof) < p) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

OlsResult ols(const std::vector<double>& x, const std::vector<double>& y, std::size_t p) {
  const std::size_t n = y.size();
  if (p == 0 || x.size() != n * p) throw ValidationError("ols: bad design shape");
  if (n <= p) throw ValidationError("ols: need more rows than coefficients");

  std::vector<double> xtx(p * p, 0.0), xty(p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < p; ++r) {
      xty[r] += x[i * p + r] * y[i];
      for (std::size_t c = 0; c < p; ++c) xtx[r * p + c] += x[i * p + r] * x[i * p + c];
    }
  }
  double scale = 0.0;
  for (double v : xtx) scale = std::max(scale, std::fabs(v));
  // Cheap collinearity guard before elimination.
  for (std::size_t r = 0; r < p; ++r)
    if (!(xtx[r * p + r] > 0.0))
      throw NumericError("ols: design column " + std::to_string(r) + " is identically zero");

  OlsResult res;
  res.n = n;
  res.p = p;
  try {
    res.coef = solve_dense(xtx, xty, p);
  } catch (const NumericError&) {
    throw NumericError("ols: collinear design (X'X singular)");
  }

  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fit = 0.0;
    for (std::size_t r = 0; r < p; ++r) fit += x[i * p + r] * res.coef[r];
    const double e = y[i] - fit;
    rss += e * e;
  }
  res.sigma2 = rss / static_cast<double>(n - p);

  // Columns of (X'X)^{-1} via one solve per unit vector.
  res.se.resize(p);
  for (std::size_t c = 0; c < p; ++c) {
    std::vector<double> e(p, 0.0);
    e[c] = 1.0;
    const auto col = solve_dense(xtx, e, p);
    const double var = res.sigma2 * col[c];
    if (!(var >= 0.0) || !(scale > 0.0))
      throw NumericError("ols: negative variance, design ill-conditioned");
    res.se[c] = std::sqrt(var);
  }
  return res;
}

}  // namespace capbound
